#include "permuap/constructive.hpp"

#include <cmath>
#include <optional>

namespace permuap {

namespace {

struct Layout
{
  std::vector<std::size_t> window_start;  // per step, ascending step order
  std::vector<std::size_t> constant_start;
  std::vector<std::size_t> cancel_start;  // 8-blocks
  std::size_t leftover = 0;               // indices [0, leftover)
};

std::optional<Layout> plan_layout(const PiecewiseConstant &g, std::size_t n, std::size_t L, double delta,
                                  std::size_t constant_blocks)
{
  const auto sL = static_cast<std::ptrdiff_t>(L);
  Layout lay;
  lay.window_start.assign(g.count(), 0);
  // [lo, hi) free gaps, collected right to left; every gap except the lowest has length divisible by 8
  std::vector<std::pair<std::size_t, std::size_t>> gaps;
  auto R = static_cast<std::ptrdiff_t>(n);
  for (std::size_t jj = g.count(); jj-- > 0;) {
    const double u = g.steps[jj].location / delta;
    // every pseudo-copy window [k + l, k + l + 3L] must contain the step
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(u)) - 3 * sL);
    const std::ptrdiff_t hi = std::min(static_cast<std::ptrdiff_t>(std::floor(u)) - sL + 1, R - 4 * sL);
    if (hi < lo) return std::nullopt;
    const auto pref = static_cast<std::ptrdiff_t>(std::llround(u - 2.0 * L + 0.5));
    std::optional<std::ptrdiff_t> best;
    for (std::ptrdiff_t k = hi - (((hi - (R - 4 * sL)) % 8) + 8) % 8; k >= lo; k -= 8)
      if (!best || std::abs(k - pref) < std::abs(*best - pref)) best = k;
    if (!best) return std::nullopt;
    const std::ptrdiff_t end = *best + 4 * sL;
    if (R > end) gaps.emplace_back(static_cast<std::size_t>(end), static_cast<std::size_t>(R));
    lay.window_start[jj] = static_cast<std::size_t>(*best);
    R                    = *best;
  }
  gaps.emplace_back(0, static_cast<std::size_t>(R));

  std::size_t remaining = constant_blocks;
  for (auto &[glo, ghi] : gaps) {
    while (remaining > 0 && ghi - glo >= 4 * L) {
      ghi -= 4 * L;
      lay.constant_start.push_back(ghi);
      --remaining;
    }
  }
  if (remaining > 0) return std::nullopt;
  for (auto &[glo, ghi] : gaps) {
    while (ghi - glo >= 8) {
      ghi -= 8;
      lay.cancel_start.push_back(ghi);
    }
  }
  lay.leftover = gaps.back().second;  // the lowest gap ends where its remainder starts
  return lay;
}

// realized constant b1^2 - b2^2 - b3^2 + b4^2 of a constant_plus quad
long double quad_constant(const std::array<double, 4> &b)
{
  long double v = 0.0L;
  for (int i = 0; i < 4; ++i) {
    const long double bi = b[i];
    v += (i == 0 || i == 3 ? 1.0L : -1.0L) * bi * bi;
  }
  return v;
}

}  // namespace

Construction build_theorem2(const ScalarFunction &f, double eps, const BuildOptions &opts)
{
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  DecomposeOptions dopts = opts.decompose;
  const double dh0       = eps / 4.0;
  dopts.delta_h          = dh0;
  const PiecewiseConstant g0 = decompose_target(f, eps, dopts);
  auto blocks_of             = [](const PiecewiseConstant &g) {
    return static_cast<std::size_t>(std::abs(g.net_sign() + 2 * std::lround(g.base / g.delta_h)));
  };
  const double steps0 = static_cast<double>(g0.count() + blocks_of(g0));
  auto L = static_cast<std::size_t>(std::max(2.0, std::floor(0.8 * 2.0 * steps0 * steps0 * dh0)));
  L += L % 2;

  for (;; L += 2) {
    const double nm1_real = std::ceil(std::sqrt(8.0 * std::pow(static_cast<double>(L), 3) / dh0));
    if (nm1_real + 1.0 > static_cast<double>(opts.width_cap))
      throw WidthCapExceeded(static_cast<std::size_t>(nm1_real + 1.0), opts.width_cap);
    const auto nm1 = static_cast<std::size_t>(nm1_real);
    const std::size_t n = nm1 + 1;
    if (static_cast<double>(n) < 4.0 * static_cast<double>(L) * steps0) continue;

    const double dh = 8.0 * std::pow(static_cast<double>(L), 3) / (nm1_real * nm1_real);
    dopts.delta_h   = dh;
    PiecewiseConstant g = decompose_target(f, eps, dopts);
    const double delta  = 1.0 / nm1_real;
    const auto layout   = plan_layout(g, n, L, delta, blocks_of(g));
    if (!layout) continue;

    Construction out;
    out.g = std::move(g);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      b[ii]         = static_cast<double>(i) / nm1_real;
      w[2 * ii]     = b[ii];
      w[2 * ii + 1] = -b[ii];
    }
    out.net      = make_net_1d<double>(b, w);
    auto &theta  = out.net.theta;
    auto &ledger = out.ledger;
    ledger.builder    = "theorem2";
    ledger.n          = n;
    ledger.n_hat      = (n - 1) / L + 1;
    ledger.refinement = L;
    ledger.delta_h    = dh;
    ledger.j_prime    = out.g.net_sign();

    auto put = [&](const std::array<std::size_t, 4> &idx, const FourPairAssignment &a, int sign) {
      for (int t = 0; t < 4; ++t) {
        const auto i     = static_cast<Eigen::Index>(idx[t]);
        theta[2 * i]     = sign > 0 ? a.p[t] : -a.p[t];
        theta[2 * i + 1] = sign > 0 ? a.q[t] : -a.q[t];
      }
    };
    auto locs = [&](const std::array<std::size_t, 4> &idx) {
      return std::array<double, 4>{b[static_cast<Eigen::Index>(idx[0])], b[static_cast<Eigen::Index>(idx[1])],
                                   b[static_cast<Eigen::Index>(idx[2])], b[static_cast<Eigen::Index>(idx[3])]};
    };
    auto block = [](std::size_t start, std::size_t len) {
      std::vector<std::size_t> v(len);
      for (std::size_t t = 0; t < len; ++t) v[t] = start + t;
      return v;
    };

    for (std::size_t j = 0; j < out.g.count(); ++j) {
      const std::size_t k = layout->window_start[j];
      for (std::size_t l = 0; l < L; ++l) {
        const std::array<std::size_t, 4> idx{k + l, k + l + L, k + l + 2 * L, k + l + 3 * L};
        put(idx, step_matching(locs(idx)), out.g.steps[j].sign);
      }
      ledger.used_sets.push_back(block(k, 4 * L));
    }

    const long double total_shift = out.g.net_sign() + 2.0L * std::lround(out.g.base / dh);
    const int shift_sign          = total_shift >= 0 ? 1 : -1;
    for (auto k : layout->constant_start) {
      for (std::size_t l = 0; l < L; ++l) {
        const std::array<std::size_t, 4> idx{k + l, k + l + L, k + l + 2 * L, k + l + 3 * L};
        put(idx, constant_matching(locs(idx), 1), shift_sign);
      }
      ledger.constant_sets.push_back(block(k, 4 * L));
    }

    long double cancel = 0.0L;
    for (auto k : layout->cancel_start) {
      const std::array<std::size_t, 4> lo{k, k + 1, k + 2, k + 3}, hi{k + 4, k + 5, k + 6, k + 7};
      put(lo, constant_matching(locs(lo), 1), 1);
      put(hi, constant_matching(locs(hi), 1), -1);
      cancel += quad_constant(locs(lo)) - quad_constant(locs(hi));
      ledger.constant_sets.push_back(block(k, 8));
    }
    ledger.c_c = static_cast<double>(std::abs(cancel));

    std::vector<double> rest;
    for (std::size_t i = 0; i < layout->leftover; ++i) {
      ledger.unused.push_back(i);
      rest.push_back(b[static_cast<Eigen::Index>(i)]);
    }
    const auto ann = annihilate_remainder(rest, rest);
    for (std::size_t u = 0; u < rest.size(); ++u) {
      const auto i     = static_cast<Eigen::Index>(ledger.unused[u]);
      theta[2 * i]     = ann.signs[u] > 0 ? b[i] : -b[i];
      theta[2 * i + 1] = ann.signs[u] > 0 ? -b[i] : b[i];
    }
    ledger.unused_signs = ann.signs;
    if (ann.retired) ledger.retired = ledger.unused[*ann.retired];
    ledger.beta  = ann.slope;
    ledger.eta   = ann.intercept;
    ledger.c_r   = std::max(std::abs(ann.intercept), std::abs(ann.slope + ann.intercept));
    ledger.gamma = 1.0;
    ledger.alpha = 0.0;

    auto &bud      = ledger.budget;
    bud.eps        = eps;
    double worst   = 0.0;
    for (std::size_t i = 0; i < dopts.samples; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(dopts.samples - 1);
      worst          = std::max(worst, std::abs(out.g(x) - f(x)));
    }
    bud.g_error    = worst;
    bud.e_use      = out.g.count() > 0 ? dh : 0.0;
    bud.e_un       = ledger.c_c + ledger.c_r;
    bud.e_un_bound = bud.e_un;
    bud.total      = bud.g_error + bud.e_use + bud.e_un;
    measure(out, f, opts.eval_points);
    return out;
  }
}

}  // namespace permuap
