// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include "../../tools/cli.hpp"
#include "permuap/constructive.hpp"
#include "permuap/harness.hpp"
#include "permuap/json_io.hpp"
#include "permuap/laperm.hpp"
#include "permuap/tracer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace permuap;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream is(p);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

int run_cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "permuap");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// direct evaluation of a 1D net, written without the library's feature code
double naive_eval(const ReluNetd &net, double x)
{
  double s = 0.0;
  for (std::size_t i = 0; i < net.basis.size(); ++i) {
    const auto &bf = net.basis[i];
    s += net.theta[static_cast<Eigen::Index>(i)] * std::max(0.0, bf.side * (x - bf.location));
  }
  return net.alpha + net.gamma * s;
}

double naive_eval_nd(const ReluNetd &net, const Eigen::VectorXd &x)
{
  double s = 0.0;
  for (std::size_t i = 0; i < net.basis.size(); ++i) {
    const auto &bf = net.basis[i];
    double z       = -bf.location;
    for (Eigen::Index j = 0; j < x.size(); ++j) z += net.axes(j, bf.axis) * x[j];
    s += net.theta[static_cast<Eigen::Index>(i)] * std::max(0.0, bf.side * z);
  }
  return net.alpha + net.gamma * s;
}

double sup_on_grid(const ReluNetd &net, const std::function<double(double)> &f, double lo, double hi, int points)
{
  double e = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    e              = std::max(e, std::abs(naive_eval(net, x) - f(x)));
  }
  return e;
}

std::vector<double> sorted_values(const Eigen::VectorXd &v)
{
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s;
}

// theta is a permutation of the equidistant multiset (+-i/(n-1)) on [0, 1]
bool equidistant_permutation(const ReluNetd &net)
{
  const std::size_t n = net.size() / 2;
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = static_cast<double>(i) / static_cast<double>(n - 1);
    w.push_back(b);
    w.push_back(-b);
  }
  std::sort(w.begin(), w.end());
  const auto t = sorted_values(net.theta);
  const auto m = sorted_values(net.initial_multiset);
  if (t != m) return false;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::abs(t[i] - w[i]) > 1e-15) return false;
  return true;
}

const auto kSin2pi = [](double x) { return std::sin(2.0 * M_PI * x); };

Outcome theorem_cli(const std::string &theorem, double eps, bool affine_fixed)
{
  const auto dir = std::filesystem::temp_directory_path() / ("permuap_accept_t" + theorem);
  std::filesystem::remove_all(dir);
  const auto t0  = std::chrono::steady_clock::now();
  const int code = run_cli({"construct", "--theorem", theorem, "--target", "sin2pi", "--eps", fmt("%g", eps), "--out",
                            dir.string()});
  const double secs = seconds_since(t0);
  if (code != 0) return {false, fmt("exit code %d", code)};
  const ReluNetd net = net_from_json(slurp(dir / "net.json"));
  std::filesystem::remove_all(dir);
  const double err  = sup_on_grid(net, kSin2pi, 0.0, 1.0, 10001);
  const bool perm   = equidistant_permutation(net);
  const bool affine = !affine_fixed || (net.alpha == 0.0 && net.gamma == 1.0);
  return {err <= eps && perm && affine && secs < 30.0,
          fmt("n=%zu sup=%.4f eps=%.2f permutation=%d alpha=%g gamma=%g time=%.1fs", net.size() / 2, err, eps, perm,
              net.alpha, net.gamma, secs)};
}

Outcome criterion3()
{
  int ok = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    try {
      const auto r = build_random(kSin2pi, 0.3, 0.2, run_seed(i));
      if (r.construction && same_multiset(r.construction->net.theta, r.construction->net.initial_multiset) &&
          sup_on_grid(r.construction->net, kSin2pi, 0.0, 1.0, 10001) <= 0.3)
        ++ok;
    } catch (const std::exception &) {
    }
  }
  return {ok >= 12, fmt("%d of 20 seeds within 0.3", ok)};
}

double simpson(const std::function<double(double)> &f, double a, double b, int m)
{
  if (b <= a) return 0.0;
  const double h = (b - a) / (2 * m);
  double s       = f(a) + f(b);
  for (int i = 1; i < 2 * m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

Outcome criterion4()
{
  std::vector<std::pair<double, double>> pts;
  for (std::size_t n : {10, 20, 40, 80, 160, 320}) pts.emplace_back(double(n), adjacent_step_error(n));
  const double slope = fit_rate(pts).slope;

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double b1 = 0.5 * u(rng), d = 0.005 + 0.1 * u(rng), mid = 0.2 * u(rng), gamma = 0.1 + 3.0 * u(rng);
    const std::array<double, 4> b{b1, b1 + d, b1 + d + mid, b1 + 2 * d + mid};
    const auto a   = step_matching(b);
    const double h = a.height(), c = a.center();
    auto sq        = [&](double x) {
      const double diff = gamma * (a(x) + h / 2) - (x >= c ? gamma * h : 0.0);
      return diff * diff;
    };
    // the integrand is piecewise quadratic; split at the kinks and the jump
    std::vector<double> cuts{b[0], b[1], c, b[2], b[3]};
    std::sort(cuts.begin(), cuts.end());
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) q += simpson(sq, cuts[i], cuts[i + 1], 50);
    const double closed = step_error_l2(b, gamma);
    worst               = std::max(worst, std::abs(closed - std::sqrt(q)) / std::sqrt(q));
  }
  return {slope >= -0.65 && slope <= -0.35 && worst <= 1e-6,
          fmt("slope=%.4f worst closed-form rel diff=%.2e", slope, worst)};
}

Outcome criterion5()
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0, brute = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t len = 2 * (1 + rng() % 100);
    std::vector<double> c(len);
    for (auto &v : c) v = u(rng);
    std::vector<double> s = c;
    std::sort(s.begin(), s.end());
    double gap = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) gap = std::max(gap, s[i + 1] - s[i]);
    const auto m = sign_assignment(c);
    double sum   = 0.0;
    bool signs   = m.size() == len;
    for (std::size_t i = 0; signs && i < len; ++i) {
      signs = m[i] == 1 || m[i] == -1;
      sum += m[i] * c[i];
    }
    if (!signs || sum < -1e-12 || sum > gap + 1e-12) ++bad;
    if (len <= 8) {
      ++brute;
      bool achievable = false;
      for (std::size_t mask = 0; mask < (1u << len); ++mask) {
        double z = 0.0;
        for (std::size_t i = 0; i < len; ++i) z += (mask >> i & 1 ? 1.0 : -1.0) * c[i];
        if (std::abs(z - sum) <= 1e-12) achievable = true;
      }
      if (!achievable) ++bad;
    }
  }
  return {bad == 0, fmt("1000 sequences, %d brute-forced, %d violations", brute, bad)};
}

Outcome criterion6()
{
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const Eigen::Index len = 1 + static_cast<Eigen::Index>(rng() % 7);
    Eigen::VectorXd w(len), th(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      w[i]  = t % 3 == 0 ? std::round(2.0 * g(rng)) : g(rng);  // ties every third case
      th[i] = g(rng);
    }
    const Eigen::VectorXd p = permute_to_initial(th, w);
    std::vector<double> vals(w.data(), w.data() + len);
    std::sort(vals.begin(), vals.end());
    double best = INFINITY;
    do {
      double d = 0.0;
      for (Eigen::Index i = 0; i < len; ++i) d += (vals[std::size_t(i)] - th[i]) * (vals[std::size_t(i)] - th[i]);
      best = std::min(best, d);
    } while (std::next_permutation(vals.begin(), vals.end()));
    if (!same_multiset(p, w) || std::abs((p - th).squaredNorm() - best) > 1e-12 * (1.0 + best)) ++bad;
  }
  return {bad == 0, fmt("500 cases, %d not optimal", bad)};
}

Outcome criterion7()
{
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.targets    = {"sin1d"};
  cfg.strategies = {"equidistant"};
  cfg.n_list     = {40, 80, 160};
  cfg.seeds      = 3;
  cfg.epochs     = 2000;
  const auto res = run_sweep(cfg);
  bool multiset  = true;
  std::vector<double> med;
  for (std::size_t n : cfg.n_list) {
    std::vector<double> e;
    for (const auto &c : res.cells) {
      multiset = multiset && c.multiset_ok;
      if (c.n == n) e.push_back(c.sup_error);
    }
    std::sort(e.begin(), e.end());
    med.push_back(e[1]);
  }
  const double slope = fit_rate({{40, med[0]}, {80, med[1]}, {160, med[2]}}).slope;
  const double secs  = seconds_since(t0);
  const bool pass    = med[0] > med[1] && med[1] > med[2] && slope <= -0.25 && multiset && secs < 900;
  return {pass, fmt("median sup %.4f %.4f %.4f slope=%.3f multiset=%d time=%.0fs", med[0], med[1], med[2], slope,
                    multiset, secs)};
}

Outcome criterion8()
{
  const std::vector<std::string> names{"equidistant", "xavier_W_only", "he_W_only", "xavier_uniform_all", "he_normal_all"};
  SweepConfig cfg;
  cfg.epochs = 2000;
  std::vector<std::future<double>> jobs;
  for (const auto &s : names)
    jobs.push_back(std::async(std::launch::async, [&cfg, s] {
      std::vector<double> e;
      for (std::size_t i = 0; i < 3; ++i) e.push_back(run_cell("sin1d", s, 160, i, cfg).sup_error);
      std::sort(e.begin(), e.end());
      return e[1];
    }));
  std::vector<double> e;
  for (auto &j : jobs) e.push_back(j.get());
  const bool converge = e[1] <= 2.0 * e[0] && e[2] <= 2.0 * e[0];
  const bool stagnate = e[3] >= 5.0 * e[1] && e[4] >= 5.0 * e[1];
  return {converge && stagnate, fmt("median sup: equidistant %.4f xavier_W %.4f he_W %.4f xavier_all %.4f he_all %.4f",
                                    e[0], e[1], e[2], e[3], e[4])};
}

Outcome criterion9()
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (int dim : {1, 2}) {
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 3 + rng() % 6;
      const Basis basis   = dim == 1 ? make_basis_1d(n) : make_basis_2d(n);
      ReluNetd net        = initialize("total_random", basis, dim, rng, Box::cube(dim, -1, 1));
      net.alpha           = u(rng);
      net.gamma           = u(rng);
      Eigen::VectorXd x(dim);
      // redraw until no basis function sits within 1e-3 of its kink
      for (;;) {
        for (int j = 0; j < dim; ++j) x[j] = u(rng);
        const Eigen::VectorXd proj = net.axes.transpose() * x;
        bool near                  = false;
        for (const auto &bf : net.basis) near = near || std::abs(proj[bf.axis] - bf.location) < 1e-3;
        if (!near) break;
      }
      const Eigen::MatrixXd xs = x.transpose();
      const Eigen::VectorXd ys = Eigen::VectorXd::Constant(1, u(rng));
      const auto g             = gradients(net, xs, ys);

      auto loss = [&](const ReluNetd &m) {
        const double r = naive_eval_nd(m, x) - ys[0];
        return r * r;
      };
      auto compare = [&](double analytic, double fd) {
        const double rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
        worst            = std::max(worst, rel);
        bad += rel > 1e-5;
      };
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < net.theta.size(); ++i) {
        ReluNetd a = net, b = net;
        a.theta[i] += h;
        b.theta[i] -= h;
        compare(g.theta[i], (loss(a) - loss(b)) / (2 * h));
      }
      ReluNetd a = net, b = net;
      a.alpha += h;
      b.alpha -= h;
      compare(g.alpha, (loss(a) - loss(b)) / (2 * h));
      a = net;
      b = net;
      a.gamma += h;
      b.gamma -= h;
      compare(g.gamma, (loss(a) - loss(b)) / (2 * h));
      ++checked;
    }
  }
  return {bad == 0 && checked == 1000, fmt("%d points, worst relative difference %.2e", checked, worst)};
}

Outcome criterion10()
{
  const auto target   = target_by_name("sin1d");
  const auto sizes    = default_sizes(1);
  const auto data     = generate_data(target, sizes.train, sizes.test, kDataSeed);
  std::mt19937_64 rng(run_seed(0));
  const std::size_t n = 640;
  const ReluNetd net  = initialize("equidistant", make_basis_1d(n), 1, rng, target.domain);
  TrainConfig cfg     = table_config(1);
  cfg.epochs          = 6400;
  cfg.seed            = run_seed(0);
  cfg.max_events      = 400;

  TraceLog log;
  log.n        = n;
  log.strategy = "equidistant";
  log.seed     = run_seed(0);
  std::vector<Eigen::VectorXd> snapshots{net.initial_multiset};
  const auto tracer = trace_observer(log, 400);
  const auto report = laperm_train(net, data.train, cfg, [&](const ProjectionView &v) {
    tracer(v);
    snapshots.push_back(v.theta_after);
  });
  if (log.events.size() != 400) return {false, fmt("recorded %zu events", log.events.size())};

  // reconstruct from the exported CSV alone
  std::ostringstream os;
  export_csv(log, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  std::vector<std::size_t> moved;
  std::size_t row = 0, violations = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
    const auto mask = rle_decode(f.at(4));
    moved.push_back(std::stoul(f.at(1)));
    std::size_t active = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      active += mask[i];
      if (!mask[i] && snapshots[row][k] != snapshots[row + 1][k]) ++violations;
      if (mask[i] && snapshots[row][k] == snapshots[row + 1][k]) ++violations;
    }
    if (active != moved.back()) ++violations;
    ++row;
  }
  const auto idle = never_active(log, 2 * n);
  for (auto i : idle)
    for (std::size_t r = 0; r < row; ++r)
      if (snapshots[r][static_cast<Eigen::Index>(i)] != snapshots[0][static_cast<Eigen::Index>(i)]) ++violations;

  // convergence: first window from which the mean loss stays within 2x the final window's
  const auto windows = summarize(log, 10);
  const double final_loss = windows.back().mean_loss;
  std::size_t conv        = windows.size() - 1;
  while (conv > 0 && windows[conv - 1].mean_loss <= 2.0 * final_loss) --conv;
  bool active_before = conv > 0;
  for (std::size_t w = 0; w < conv; ++w) active_before = active_before && windows[w].mean_moved > 0.0;
  double tail = 0.0;
  for (std::size_t r = 300; r < 400; ++r) tail += double(moved[r]);
  tail /= 100.0;
  const bool quiet = tail <= 0.02 * double(2 * n);
  return {row == 400 && violations == 0 && active_before && quiet && report.multiset_ok,
          fmt("rows=%zu violations=%zu idle=%zu convergence at event %zu, moved mean first window %.1f, "
              "last 100 events %.2f of %zu",
              row, violations, idle.size(), windows[conv].first_event, windows[0].mean_moved, tail, 2 * n)};
}

Outcome criterion11()
{
  const std::size_t n_hat = 3, n = 500, trials = 100000;
  const double dr        = 0.01;
  const double closed    = match_probability(n_hat, n, dr);
  const std::vector<double> targets{0.25, 0.5, 0.75};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t hits = 0, disagree = 0;
  Eigen::VectorXd b(n), w(2 * n);
  for (std::size_t t = 0; t < trials; ++t) {
    std::array<bool, 3> hb{}, hm{};
    for (std::size_t i = 0; i < n; ++i) {
      b[Eigen::Index(i)] = u(rng);
      const double p     = u(rng);
      w[Eigen::Index(2 * i)]     = p;
      w[Eigen::Index(2 * i + 1)] = -p;
      for (std::size_t j = 0; j < n_hat; ++j) {
        hb[j] = hb[j] || std::abs(b[Eigen::Index(i)] - targets[j]) <= dr;
        hm[j] = hm[j] || std::abs(p - targets[j]) <= dr;
      }
    }
    const bool hit = std::all_of(hb.begin(), hb.end(), [](bool v) { return v; }) &&
                     std::all_of(hm.begin(), hm.end(), [](bool v) { return v; });
    hits += hit;
    if (t < 2000 && match_subnetwork(b, w, targets, dr).ok() != hit) ++disagree;
  }
  const double mc = double(hits) / double(trials);
  const double se = std::sqrt(closed * (1.0 - closed) / double(trials));
  const bool pass = std::abs(mc - closed) <= 3.0 * se && disagree == 0;
  return {pass, fmt("closed=%.6f monte carlo=%.6f se=%.2e matcher disagreements=%zu", closed, mc, se, disagree)};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 constructive, learned affine, eps 0.25", [] { return theorem_cli("1", 0.25, false); }},
      {"2 constructive, alpha 0 gamma 1, eps 0.5", [] { return theorem_cli("2", 0.5, true); }},
      {"3 random initialization, 20 seeds", criterion3},
      {"4 step error rate and closed form", criterion4},
      {"5 sign assignment", criterion5},
      {"6 projection optimality", criterion6},
      {"7 LaPerm regression rate", criterion7},
      {"8 initialization ordering", criterion8},
      {"9 gradient check", criterion9},
      {"10 tracer consistency", criterion10},
      {"11 match probability", criterion11},
  };
  int failed = 0;
  for (const auto &[name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
