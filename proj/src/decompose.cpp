#include "permuap/constructive.hpp"

#include <cmath>
#include <limits>

namespace permuap {

int PiecewiseConstant::net_sign() const
{
  int s = 0;
  for (const auto &st : steps) s += st.sign;
  return s;
}

double PiecewiseConstant::min_gap() const
{
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < steps.size(); ++j) gap = std::min(gap, steps[j].location - steps[j - 1].location);
  return gap;
}

double PiecewiseConstant::operator()(double x) const
{
  double v = base;
  for (const auto &st : steps) {
    if (x < st.location) break;
    v += st.sign * delta_h;
  }
  return v;
}

namespace {

double bisect(const ScalarFunction &f, double level, double lo, double hi, double tol)
{
  // invariant: f(lo) - level and f(hi) - level have opposite signs (or touch zero)
  const bool rising = f(hi) > level;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > level) == rising)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

PiecewiseConstant decompose_target(const ScalarFunction &f, double eps, const DecomposeOptions &opts)
{
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double dh = opts.delta_h.value_or(eps);
  if (!(dh > 0.0) || dh > eps) throw std::invalid_argument("delta_h must lie in (0, eps]");
  if (opts.samples < 2) throw std::invalid_argument("decomposition needs at least two samples");

  PiecewiseConstant g;
  g.delta_h = dh;
  double level = std::round(f(0.0) / dh);
  g.base       = level * dh;

  const std::size_t m = opts.samples;
  double x0 = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    const double x1 = i + 1 == m ? 1.0 : static_cast<double>(i) / static_cast<double>(m - 1);
    const double y1 = f(x1);
    auto push = [&](double s, int sign) {
      if (!g.steps.empty() && s <= g.steps.back().location) s = std::nextafter(g.steps.back().location, 2.0);
      g.steps.push_back({s, sign});
    };
    while (y1 > (level + 0.5) * dh) {
      push(bisect(f, (level + 0.5) * dh, x0, x1, opts.tolerance), +1);
      level += 1.0;
    }
    while (y1 < (level - 0.5) * dh) {
      push(bisect(f, (level - 0.5) * dh, x0, x1, opts.tolerance), -1);
      level -= 1.0;
    }
    x0 = x1;
  }
  return g;
}

}  // namespace permuap
