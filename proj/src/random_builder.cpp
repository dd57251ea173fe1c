#include "permuap/constructive.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace permuap {

std::vector<std::optional<std::size_t>> match_nearest(const std::vector<double> &pool, const std::vector<double> &targets,
                                                      double delta_r)
{
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool[a] < pool[b]; });
  std::vector<double> sorted(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = pool[order[i]];
  std::vector<char> claimed(pool.size(), 0);

  std::vector<std::size_t> by_target(targets.size());
  std::iota(by_target.begin(), by_target.end(), 0);
  std::stable_sort(by_target.begin(), by_target.end(), [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });

  std::vector<std::optional<std::size_t>> out(targets.size());
  for (auto t : by_target) {
    const double x = targets[t];
    const auto pos = static_cast<std::ptrdiff_t>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
    std::ptrdiff_t left = pos - 1, right = pos;
    while (left >= 0 && claimed[static_cast<std::size_t>(left)]) --left;
    while (right < static_cast<std::ptrdiff_t>(sorted.size()) && claimed[static_cast<std::size_t>(right)]) ++right;
    std::optional<std::ptrdiff_t> pick;
    double best = std::numeric_limits<double>::infinity();
    if (left >= 0 && x - sorted[static_cast<std::size_t>(left)] <= delta_r) {
      best = x - sorted[static_cast<std::size_t>(left)];
      pick = left;
    }
    if (right < static_cast<std::ptrdiff_t>(sorted.size()) && sorted[static_cast<std::size_t>(right)] - x <= delta_r &&
        sorted[static_cast<std::size_t>(right)] - x < best)
      pick = right;
    if (pick) {
      claimed[static_cast<std::size_t>(*pick)] = 1;
      out[t]                                    = order[static_cast<std::size_t>(*pick)];
    }
  }
  return out;
}

MatchResult match_subnetwork(const Eigen::VectorXd &b_rand, const Eigen::VectorXd &w_rand,
                             const std::vector<double> &targets, double delta_r)
{
  if (w_rand.size() != 2 * b_rand.size()) throw std::invalid_argument("W must hold one pair per location");
  std::vector<double> locs(b_rand.data(), b_rand.data() + b_rand.size());
  std::vector<double> mags(static_cast<std::size_t>(b_rand.size()));
  for (Eigen::Index i = 0; i < b_rand.size(); ++i) {
    if (w_rand[2 * i + 1] != -w_rand[2 * i]) throw std::invalid_argument("W must be pairwise (+p, -p)");
    mags[static_cast<std::size_t>(i)] = std::abs(w_rand[2 * i]);
  }
  MatchResult r;
  const auto ml = match_nearest(locs, targets, delta_r);
  const auto mm = match_nearest(mags, targets, delta_r);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (ml[t])
      r.locations.push_back(*ml[t]);
    else
      r.unmatched_locations.push_back(t);
    if (mm[t])
      r.magnitudes.push_back(*mm[t]);
    else
      r.unmatched_magnitudes.push_back(t);
  }
  return r;
}

double match_probability(std::size_t n_hat, std::size_t n, double delta_r)
{
  if (n_hat == 0) return 1.0;
  if (!(delta_r > 0.0)) return 0.0;
  long double p_prime = 0.0L;
  const long double nl = static_cast<long double>(n);
  for (std::size_t k = 1; k <= n_hat; ++k) {
    const long double base = 1.0L - 2.0L * static_cast<long double>(k) * delta_r;
    if (base <= 0.0L) break;
    const long double log_binom = std::lgamma(static_cast<long double>(n_hat) + 1.0L) -
                                  std::lgamma(static_cast<long double>(k) + 1.0L) -
                                  std::lgamma(static_cast<long double>(n_hat - k) + 1.0L);
    const long double term = std::exp(log_binom + nl * std::log(base));
    p_prime += (k % 2 == 1 ? term : -term);
  }
  const long double hit = std::clamp(1.0L - p_prime, 0.0L, 1.0L);
  return static_cast<double>(hit * hit);
}

namespace {

std::array<double, 4> window(double s, double d, double margin)
{
  std::array<double, 4> t{s - 1.5 * d, s - 0.5 * d, s + 0.5 * d, s + 1.5 * d};
  double shift = 0.0;
  if (t[0] < margin) shift = margin - t[0];
  if (t[3] + shift > 1.0 - margin) shift = (1.0 - margin) - t[3];
  for (auto &v : t) v += shift;
  return t;
}

// parameters: locations x (4) then magnitudes m (4) of a step-matched window
using Params = std::array<double, 8>;

// right minus left intercept of the window; the outer slope is equal on both sides
double jump(const Params &v)
{
  const double *x = v.data(), *m = v.data() + 4;
  return (m[3] - m[0]) * (x[3] - x[0]) - (m[2] - m[1]) * (x[2] - x[1]);
}

// window function minus its left affine extension
double inner(const Params &v, double x)
{
  const double *b = v.data(), *m = v.data() + 4;
  const double pq[4] = {m[3] - m[0], m[1] - m[2], m[2] - m[1], m[0] - m[3]};
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += pq[k] * std::max(0.0, x - b[k]);
  return s;
}

// sums of absolute finite-difference derivatives over the eight parameters
std::pair<double, double> sensitivities(const std::array<double, 4> &t)
{
  Params base{};
  for (int k = 0; k < 4; ++k) base[k] = base[k + 4] = t[k];
  const double fd = 1e-7 * std::max(1e-3, t[3] - t[0]);
  double lam_h    = 0.0;
  for (int i = 0; i < 8; ++i) {
    Params up = base, dn = base;
    up[i] += fd;
    dn[i] -= fd;
    lam_h += std::abs(jump(up) - jump(dn)) / (2 * fd);
  }
  double lam_local = 0.0;
  const int probes = 64;
  for (int s = 0; s <= probes; ++s) {
    const double x = t[0] + (t[3] - t[0]) * s / probes;
    // the jump is accounted separately, so measure against the nominal ramp
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) {
      Params up = base, dn = base;
      up[i] += fd;
      dn[i] -= fd;
      acc += std::abs(inner(up, x) - inner(dn, x)) / (2 * fd);
    }
    lam_local = std::max(lam_local, acc);
  }
  return {lam_h, lam_local};
}

}  // namespace

RandomPlan plan_random(const ScalarFunction &f, double eps, double delta, const RandomOptions &opts)
{
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  RandomPlan plan;
  DecomposeOptions dopts = opts.decompose;
  dopts.delta_h          = eps / 4.0;
  plan.g                 = decompose_target(f, eps, dopts);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < dopts.samples; ++i) {
    const double v = f(static_cast<double>(i) / static_cast<double>(dopts.samples - 1));
    lo             = std::min(lo, v);
    hi             = std::max(hi, v);
  }
  if ((hi - lo) / 2.0 <= eps / 2.0 || plan.g.count() == 0) {
    plan.trivial       = true;
    plan.trivial_alpha = 0.5 * (hi + lo);
    plan.n             = opts.width.value_or(16);
    plan.p_sub = plan.p_un = 1.0;
    return plan;
  }

  const std::size_t J     = plan.g.count();
  const double dh         = plan.g.delta_h;
  const double gap        = std::min(plan.g.min_gap(), 1.0);
  plan.spacing            = gap / 4.0;
  plan.gamma              = dh / (8.0 * plan.spacing * plan.spacing);
  for (const auto &st : plan.g.steps) {
    const auto [lh, ll] = sensitivities(window(st.location, plan.spacing, 0.0));
    plan.lambda_h       = std::max(plan.lambda_h, lh);
    plan.lambda_local   = std::max(plan.lambda_local, ll);
  }
  plan.r0                 = (eps / 4.0) / (plan.gamma * (plan.lambda_h * static_cast<double>(J) + plan.lambda_local));
  const std::size_t n_hat = 4 * J;
  plan.delta_r = std::min({plan.r0, gap, 1.0 / (2.0 * static_cast<double>(n_hat)), plan.spacing / 2.0}) / 2.0;
  for (const auto &st : plan.g.steps)
    for (double t : window(st.location, plan.spacing, plan.delta_r)) plan.targets.push_back(t);

  const double target_p = std::sqrt(1.0 - delta);
  const double t_gap    = (eps / 4.0) / plan.gamma;
  auto p_un             = [&](double n) {
    const double m = n - static_cast<double>(n_hat);
    if (m <= 0) return 0.0;
    return std::max(0.0, 1.0 - (m + 1.0) * std::exp(m * std::log1p(-std::min(t_gap, 1.0))));
  };
  auto ok = [&](std::size_t n) { return match_probability(n_hat, n, plan.delta_r) >= target_p && p_un(double(n)) >= target_p; };

  if (opts.width) {
    plan.n = *opts.width;
  } else {
    // past n_lo the inclusion-exclusion terms decay, so the alternating sum is stable
    const double rate = -std::log1p(-2.0 * plan.delta_r);
    auto lo_n         = static_cast<std::size_t>(std::log(static_cast<double>(n_hat)) / rate);
    auto hi_n         = std::max<std::size_t>(lo_n + 1, n_hat + 1);
    while (!ok(hi_n)) {
      if (static_cast<double>(hi_n) > 1e13) throw WidthCapExceeded(hi_n, opts.width_cap);
      hi_n *= 2;
    }
    lo_n = std::min(lo_n, hi_n);
    while (lo_n + 1 < hi_n) {
      const std::size_t mid = lo_n + (hi_n - lo_n) / 2;
      (ok(mid) ? hi_n : lo_n) = mid;
    }
    plan.n = hi_n;
    if (plan.n > opts.width_cap) throw WidthCapExceeded(plan.n, opts.width_cap);
  }
  plan.p_sub = match_probability(n_hat, plan.n, plan.delta_r);
  plan.p_un  = p_un(static_cast<double>(plan.n));
  return plan;
}

RandomOutcome assemble_random(const RandomPlan &plan, const Eigen::VectorXd &b_rand, const Eigen::VectorXd &p_rand)
{
  if (b_rand.size() != p_rand.size()) throw std::invalid_argument("B and p differ in length");
  const auto n = static_cast<std::size_t>(b_rand.size());
  Eigen::VectorXd w(2 * b_rand.size());
  for (Eigen::Index i = 0; i < b_rand.size(); ++i) {
    w[2 * i]     = p_rand[i];
    w[2 * i + 1] = -p_rand[i];
  }
  RandomOutcome out;
  out.plan = plan;
  Construction c;
  c.g              = plan.g;
  c.net            = make_net_1d<double>(b_rand, w);
  auto &ledger     = c.ledger;
  ledger.builder   = "random";
  ledger.n         = n;
  ledger.delta_h   = plan.g.delta_h;
  ledger.j_prime   = plan.g.net_sign();

  if (plan.trivial) {
    ledger.gamma = c.net.gamma = 0.0;
    ledger.alpha = c.net.alpha = plan.trivial_alpha;
    ledger.notes.push_back("target within eps of a constant; alpha-only fit");
    out.construction = std::move(c);
    return out;
  }

  const MatchResult match = match_subnetwork(b_rand, w, plan.targets, plan.delta_r);
  if (!match.ok()) {
    out.retry = Retry{"no random parameter within delta_r of every target", n, plan.delta_r,
                      match.unmatched_locations.size(), match.unmatched_magnitudes.size()};
    return out;
  }
  ledger.n_hat = plan.targets.size();

  auto &theta = c.net.theta;
  std::vector<char> loc_used(n, 0), mag_used(n, 0);
  long double used_slope = 0.0L;
  for (std::size_t j = 0; j < plan.g.count(); ++j) {
    const int a = plan.g.steps[j].sign;
    std::array<std::size_t, 4> li{}, mi{};
    std::array<double, 4> m{};
    for (std::size_t k = 0; k < 4; ++k) {
      li[k]           = match.locations[4 * j + k];
      mi[k]           = match.magnitudes[4 * j + k];
      m[k]            = p_rand[static_cast<Eigen::Index>(mi[k])];
      loc_used[li[k]] = mag_used[mi[k]] = 1;
    }
    const std::array<double, 4> p{-m[0], m[1], m[2], -m[3]};
    const std::array<double, 4> q{m[3], -m[2], -m[1], m[0]};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto i     = static_cast<Eigen::Index>(li[k]);
      theta[2 * i]     = a > 0 ? p[k] : -p[k];
      theta[2 * i + 1] = a > 0 ? q[k] : -q[k];
    }
    used_slope += static_cast<long double>(a) * (p[0] + p[1] + p[2] + p[3]);
    ledger.used_sets.push_back({li.begin(), li.end()});
    ledger.magnitude_sets.push_back({mi.begin(), mi.end()});
  }

  std::vector<std::size_t> free_loc, free_mag;
  for (std::size_t i = 0; i < n; ++i) {
    if (!loc_used[i]) free_loc.push_back(i);
    if (!mag_used[i]) free_mag.push_back(i);
  }
  std::vector<double> mags, locs;
  for (std::size_t u = 0; u < free_loc.size(); ++u) {
    mags.push_back(p_rand[static_cast<Eigen::Index>(free_mag[u])]);
    locs.push_back(b_rand[static_cast<Eigen::Index>(free_loc[u])]);
  }
  const auto ann = annihilate_remainder(mags, locs, -static_cast<double>(used_slope));
  for (std::size_t u = 0; u < free_loc.size(); ++u) {
    const auto i     = static_cast<Eigen::Index>(free_loc[u]);
    const double v   = mags[u];
    theta[2 * i]     = ann.signs[u] > 0 ? v : -v;
    theta[2 * i + 1] = ann.signs[u] > 0 ? -v : v;
  }
  ledger.unused       = free_loc;
  ledger.unused_signs = ann.signs;
  if (ann.retired) ledger.retired = free_loc[*ann.retired];
  ledger.beta  = static_cast<double>(used_slope) + ann.slope;
  ledger.eta   = ann.intercept;
  ledger.c_eta = ann.c_eta;

  ledger.gamma     = plan.gamma;
  c.net.gamma      = 1.0;
  c.net.alpha      = 0.0;
  const double s0  = forward(c.net, 0.0);
  ledger.alpha     = plan.g.base - plan.gamma * s0;
  c.net.gamma      = ledger.gamma;
  c.net.alpha      = ledger.alpha;

  auto &bud      = ledger.budget;
  bud.e_use      = plan.g.delta_h + plan.gamma * (plan.lambda_h * plan.g.count() + plan.lambda_local) * plan.delta_r;
  bud.e_un       = plan.gamma * std::abs(ledger.beta);
  bud.e_un_bound = plan.gamma * ann.bound;
  out.construction = std::move(c);
  return out;
}

RandomOutcome build_random(const ScalarFunction &f, double eps, double delta, std::uint64_t seed,
                           const RandomOptions &opts)
{
  const RandomPlan plan = plan_random(f, eps, delta, opts);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd b(static_cast<Eigen::Index>(plan.n)), p(static_cast<Eigen::Index>(plan.n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = unit(rng);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = unit(rng);
  RandomOutcome out = assemble_random(plan, b, p);
  if (out.construction) {
    auto &c = *out.construction;
    auto &bud = c.ledger.budget;
    bud.eps   = eps;
    double worst = 0.0;
    for (std::size_t i = 0; i < opts.decompose.samples; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(opts.decompose.samples - 1);
      worst          = std::max(worst, std::abs(c.g(x) - f(x)));
    }
    bud.g_error = worst;
    bud.total   = bud.g_error + bud.e_use + bud.e_un;
    measure(c, f, opts.eval_points);
  }
  return out;
}

}  // namespace permuap
