#include "permuap/constructive.hpp"

#include <cmath>

namespace permuap {

namespace {

double sample_error(const PiecewiseConstant &g, const ScalarFunction &f, std::size_t samples)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(samples - 1);
    worst          = std::max(worst, std::abs(g(x) - f(x)));
  }
  return worst;
}

}  // namespace

Construction build_theorem1(const ScalarFunction &f, double eps, const BuildOptions &opts)
{
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  DecomposeOptions dopts = opts.decompose;
  dopts.delta_h          = eps / 4.0;
  Construction out;
  out.g               = decompose_target(f, eps, dopts);
  const auto &g       = out.g;
  const double dh     = g.delta_h;
  const std::size_t J = g.count();

  double need = std::max(4.0 * static_cast<double>(J), 2.0 / dh);
  if (J >= 2) need = std::max(need, 8.0 / g.min_gap() + 1.0);
  const std::size_t n_hat = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(need)));
  // refinement chosen so that gamma times the unused-slope bound stays below delta_h
  const std::size_t L = std::max<std::size_t>(2, (n_hat - 1 + 3) / 4);
  const double n_real = static_cast<double>(L) * static_cast<double>(n_hat - 1) + 1.0;
  if (n_real > static_cast<double>(opts.width_cap)) throw WidthCapExceeded(static_cast<std::size_t>(n_real), opts.width_cap);
  const std::size_t n = L * (n_hat - 1) + 1;

  Eigen::VectorXd b(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(2 * n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    b[ii]         = static_cast<double>(i) / static_cast<double>(n - 1);
    w[2 * ii]     = b[ii];
    w[2 * ii + 1] = -b[ii];
  }
  out.net                  = make_net_1d<double>(b, w);
  out.net.initial_multiset = w;
  auto &theta              = out.net.theta;
  auto &ledger             = out.ledger;
  ledger.builder           = "theorem1";
  ledger.n                 = n;
  ledger.n_hat             = n_hat;
  ledger.refinement        = L;
  ledger.delta_h           = dh;
  ledger.j_prime           = g.net_sign();

  std::vector<char> used(n, 0);
  for (const auto &st : g.steps) {
    const auto c = static_cast<std::ptrdiff_t>(std::floor(st.location * static_cast<double>(n_hat - 1)));
    const auto start =
      static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c - 1, 0, static_cast<std::ptrdiff_t>(n_hat) - 4));
    std::vector<std::size_t> k(4);
    std::array<double, 4> loc{};
    for (std::size_t t = 0; t < 4; ++t) {
      k[t]   = (start + t) * L;
      loc[t] = b[static_cast<Eigen::Index>(k[t])];
      if (used[k[t]]) throw std::runtime_error("step windows overlap; steps closer than the coarse spacing allows");
      used[k[t]] = 1;
    }
    const auto a = step_matching(loc);
    for (std::size_t t = 0; t < 4; ++t) {
      const auto i      = static_cast<Eigen::Index>(k[t]);
      theta[2 * i]      = st.sign > 0 ? a.p[t] : -a.p[t];
      theta[2 * i + 1]  = st.sign > 0 ? a.q[t] : -a.q[t];
    }
    ledger.used_sets.push_back(std::move(k));
  }

  std::vector<double> mags;
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) {
      ledger.unused.push_back(i);
      mags.push_back(b[static_cast<Eigen::Index>(i)]);
    }
  const auto ann = annihilate_remainder(mags, mags);
  for (std::size_t u = 0; u < ledger.unused.size(); ++u) {
    const auto i     = static_cast<Eigen::Index>(ledger.unused[u]);
    theta[2 * i]     = ann.signs[u] > 0 ? b[i] : -b[i];
    theta[2 * i + 1] = ann.signs[u] > 0 ? -b[i] : b[i];
  }
  ledger.unused_signs = ann.signs;
  if (ann.retired) ledger.retired = ledger.unused[*ann.retired];
  ledger.beta  = ann.slope;
  ledger.eta   = ann.intercept;
  ledger.c_eta = ann.c_eta;

  const double ratio = static_cast<double>(L) / static_cast<double>(n - 1);
  const double h     = 8.0 * ratio * ratio;
  ledger.gamma       = dh / h;
  ledger.alpha       = g.base + dh * ledger.j_prime / 2.0 + ledger.gamma * ledger.c_eta;
  out.net.gamma      = ledger.gamma;
  out.net.alpha      = ledger.alpha;

  auto &bud      = ledger.budget;
  bud.eps        = eps;
  bud.g_error    = sample_error(g, f, dopts.samples);
  bud.e_use      = J > 0 ? dh : 0.0;
  bud.e_un       = ledger.gamma * std::abs(ann.slope);
  bud.e_un_bound = ledger.gamma * ann.bound;
  bud.total      = bud.g_error + bud.e_use + bud.e_un;
  measure(out, f, opts.eval_points);
  return out;
}

}  // namespace permuap
