#include "permuap/relu_net.hpp"

#include <bit>
#include <cstdint>
#include <numeric>

namespace permuap {

Eigen::VectorXd uniform_grid(double lo, double hi, std::size_t count)
{
  if (count < 2) throw std::invalid_argument("grid needs at least two points");
  Eigen::VectorXd pts(static_cast<Eigen::Index>(count));
  const double span = hi - lo;
  for (std::size_t i = 0; i < count; ++i)
    pts[static_cast<Eigen::Index>(i)] = lo + span * static_cast<double>(i) / static_cast<double>(count - 1);
  pts[static_cast<Eigen::Index>(count - 1)] = hi;
  return pts;
}

namespace {

constexpr std::size_t kDirectEvalLimit = 64;

// Prefix sums over kinks of one side, sorted by location.
struct SideSums
{
  std::vector<double> loc;
  std::vector<long double> coef;     // prefix of theta
  std::vector<long double> moment;   // prefix of theta * b
};

SideSums build_side(const ReluNetd &net, int side)
{
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < net.basis.size(); ++i)
    if (net.basis[i].side == side) idx.push_back(i);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return net.basis[a].location < net.basis[b].location; });
  SideSums s;
  s.loc.reserve(idx.size());
  s.coef.assign(idx.size() + 1, 0.0L);
  s.moment.assign(idx.size() + 1, 0.0L);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double b = net.basis[idx[k]].location;
    const double t = net.theta[static_cast<Eigen::Index>(idx[k])];
    s.loc.push_back(b);
    s.coef[k + 1]   = s.coef[k] + t;
    s.moment[k + 1] = s.moment[k] + static_cast<long double>(t) * b;
  }
  return s;
}

}  // namespace

EvalGrid eval_grid(const ReluNetd &net, const Eigen::VectorXd &points)
{
  if (net.input_dim != 1) throw std::invalid_argument("eval_grid is defined for 1D nets");
  EvalGrid grid{points, Eigen::VectorXd(points.size())};
  if (net.basis.size() <= kDirectEvalLimit || net.axes.cols() != 1) {
    for (Eigen::Index i = 0; i < points.size(); ++i) grid.values[i] = forward(net, points[i]);
    return grid;
  }

  const double a      = net.axes(0, 0);
  const double lambda = net.activation.kind == ActivationKind::leaky ? net.activation.slope : 0.0;
  const SideSums plus  = build_side(net, +1);
  const SideSums minus = build_side(net, -1);
  const long double minus_coef_total   = minus.coef.back();
  const long double minus_moment_total = minus.moment.back();

  // linear part of the leaky activation: lambda * sum theta_i s_i (u - b_i)
  long double lin_coef = 0.0L, lin_moment = 0.0L;
  if (lambda != 0.0) {
    lin_coef   = plus.coef.back() - minus_coef_total;
    lin_moment = plus.moment.back() - minus_moment_total;
  }

  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const long double u = static_cast<long double>(a) * points[i];
    const auto kp = static_cast<std::size_t>(
      std::lower_bound(plus.loc.begin(), plus.loc.end(), static_cast<double>(u)) - plus.loc.begin());
    const auto km = static_cast<std::size_t>(
      std::upper_bound(minus.loc.begin(), minus.loc.end(), static_cast<double>(u)) - minus.loc.begin());
    const long double relu_plus  = u * plus.coef[kp] - plus.moment[kp];
    const long double relu_minus = (minus_moment_total - minus.moment[km]) - u * (minus_coef_total - minus.coef[km]);
    long double sum              = (1.0L - lambda) * (relu_plus + relu_minus);
    if (lambda != 0.0) sum += lambda * (u * lin_coef - lin_moment);
    grid.values[i] = static_cast<double>(net.alpha + net.gamma * sum);
  }
  return grid;
}

double sup_error(const EvalGrid &grid, const ScalarFunction &target)
{
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grid.points.size(); ++i)
    worst = std::max(worst, std::abs(grid.values[i] - target(grid.points[i])));
  return worst;
}

double l2_error(const EvalGrid &grid, const ScalarFunction &target)
{
  const Eigen::Index m = grid.points.size();
  if (m < 2) return 0.0;
  double acc  = 0.0;
  double prev = grid.values[0] - target(grid.points[0]);
  for (Eigen::Index i = 1; i < m; ++i) {
    const double cur = grid.values[i] - target(grid.points[i]);
    acc += 0.5 * (grid.points[i] - grid.points[i - 1]) * (prev * prev + cur * cur);
    prev = cur;
  }
  return std::sqrt(acc);
}

namespace {

bool total_less(double a, double b)
{
  if (a < b) return true;
  if (b < a) return false;
  return std::signbit(a) && !std::signbit(b);
}

}  // namespace

bool same_multiset(const Eigen::VectorXd &a, const Eigen::VectorXd &b)
{
  if (a.size() != b.size()) return false;
  std::vector<double> x(a.data(), a.data() + a.size());
  std::vector<double> y(b.data(), b.data() + b.size());
  std::sort(x.begin(), x.end(), total_less);
  std::sort(y.begin(), y.end(), total_less);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
  return true;
}

std::vector<std::size_t> compose(const std::vector<std::size_t> &outer, const std::vector<std::size_t> &inner)
{
  if (outer.size() != inner.size()) throw std::invalid_argument("permutation sizes differ");
  std::vector<std::size_t> out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[inner[i]];
  return out;
}

Eigen::VectorXd apply_permutation(const Eigen::VectorXd &values, const std::vector<std::size_t> &perm)
{
  if (static_cast<std::size_t>(values.size()) != perm.size()) throw std::invalid_argument("permutation size mismatch");
  Eigen::VectorXd out(values.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[static_cast<Eigen::Index>(perm[i])];
  return out;
}

}  // namespace permuap
