#include "permuap/harness.hpp"

#include "permuap/constructive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <limits>
#include <numbers>
#include <numeric>

namespace permuap {

const std::vector<TargetFunction> &regression_targets()
{
  static const std::vector<TargetFunction> targets = [] {
    using std::numbers::pi;
    std::vector<TargetFunction> t;
    t.push_back({"sin1d", 1, [](const Eigen::VectorXd &x) { return -std::sin(2 * pi * x[0]); }, Box::cube(1, -1, 1)});
    t.push_back({"legendre3", 1, [](const Eigen::VectorXd &x) { return 0.5 * (5 * x[0] * x[0] * x[0] - 3 * x[0]); },
                 Box::cube(1, -1, 1)});
    t.push_back({"sin2d", 2, [](const Eigen::VectorXd &x) { return -std::sin(pi * x[0] * x[1]); }, Box::cube(2, -1, 1)});
    t.push_back({"sin3d", 3,
                 [](const Eigen::VectorXd &x) { return std::sin(3 * x[0]) * std::cos(x[1]) * std::sin(2 * x[2]); },
                 Box::cube(3, -1, 1)});
    return t;
  }();
  return targets;
}

TargetFunction target_by_name(const std::string &name)
{
  std::string valid;
  for (const auto &t : regression_targets()) {
    if (t.name == name) return t;
    valid += (valid.empty() ? "" : ", ") + t.name;
  }
  throw std::invalid_argument("unknown target '" + name + "' (valid: " + valid + ")");
}

namespace {

Basis equidistant_basis(const Eigen::MatrixXd &axes, std::size_t n, double t_b)
{
  if (n < 2) throw std::invalid_argument("need at least two locations per direction");
  Basis basis;
  basis.axes = axes;
  for (Eigen::Index a = 0; a < axes.cols(); ++a) {
    const double r = axes.col(a).norm() * (1.0 + t_b);
    basis.range.emplace_back(-r, r);
    for (std::size_t i = 0; i < n; ++i) {
      const double b = -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(n - 1);
      basis.functions.push_back({b, static_cast<int>(a), +1});
      basis.functions.push_back({b, static_cast<int>(a), -1});
    }
  }
  return basis;
}

}  // namespace

Basis make_basis_1d(std::size_t n, double lo, double hi)
{
  if (n < 2) throw std::invalid_argument("need at least two locations");
  Basis basis;
  basis.axes = Eigen::MatrixXd::Ones(1, 1);
  basis.range.emplace_back(lo, hi);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    basis.functions.push_back({b, 0, +1});
    basis.functions.push_back({b, 0, -1});
  }
  return basis;
}

Basis make_basis_2d(std::size_t n, double t_b)
{
  Eigen::MatrixXd axes(2, 4);
  axes << 1, 0, 1, 1,
          0, 1, 1, -1;
  return equidistant_basis(axes, n, t_b);
}

Basis make_basis_3d(std::size_t n, double t_b)
{
  std::vector<Eigen::Vector3d> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        const int first = a != 0 ? a : (b != 0 ? b : c);
        if (first > 0) dirs.emplace_back(a, b, c);
      }
  // axes first, then face diagonals, then corner diagonals
  std::stable_sort(dirs.begin(), dirs.end(), [](const Eigen::Vector3d &u, const Eigen::Vector3d &v) {
    return u.lpNorm<1>() < v.lpNorm<1>();
  });
  Eigen::MatrixXd axes(3, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) axes.col(static_cast<Eigen::Index>(i)) = dirs[i];
  return equidistant_basis(axes, n, t_b);
}

Basis make_basis(int dim, std::size_t n, double t_b)
{
  switch (dim) {
    case 1: return make_basis_1d(n);
    case 2: return make_basis_2d(n, t_b);
    case 3: return make_basis_3d(n, t_b);
    default: throw std::invalid_argument("dimension must be 1, 2 or 3");
  }
}

const std::vector<std::string> &strategy_names()
{
  static const std::vector<std::string> names{"equidistant",    "pairwise_random",    "total_random",
                                              "W_only_random",  "B_only_random",      "xavier_uniform_all",
                                              "he_normal_all",  "xavier_W_only",      "he_W_only"};
  return names;
}

bool is_strategy(const std::string &name)
{
  const auto &names = strategy_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ReluNetd initialize(const std::string &strategy, const Basis &basis, int dim, std::mt19937_64 &rng, const Box &domain,
                    Activation activation)
{
  if (!is_strategy(strategy)) {
    std::string valid;
    for (const auto &s : strategy_names()) valid += (valid.empty() ? "" : ", ") + s;
    throw std::invalid_argument("unknown strategy '" + strategy + "' (valid: " + valid + ")");
  }
  const std::size_t pairs = basis.functions.size() / 2;
  const double fan_in     = dim;
  const double fan_out    = static_cast<double>(basis.functions.size());
  const double xavier     = std::sqrt(6.0 / (fan_in + fan_out));
  const double he_std     = std::sqrt(2.0 / fan_out);

  enum class B { equi, uniform, xavier, he };
  enum class W { pm_b, pm_p, uniform, xavier, he };
  B bmode = B::uniform;
  W wmode = W::pm_b;
  if (strategy == "equidistant") bmode = B::equi, wmode = W::pm_b;
  else if (strategy == "pairwise_random") bmode = B::uniform, wmode = W::pm_p;
  else if (strategy == "total_random") bmode = B::uniform, wmode = W::uniform;
  else if (strategy == "W_only_random") bmode = B::equi, wmode = W::uniform;
  else if (strategy == "B_only_random") bmode = B::uniform, wmode = W::pm_b;
  else if (strategy == "xavier_uniform_all") bmode = B::xavier, wmode = W::xavier;
  else if (strategy == "he_normal_all") bmode = B::he, wmode = W::he;
  else if (strategy == "xavier_W_only") bmode = B::uniform, wmode = W::xavier;
  else if (strategy == "he_W_only") bmode = B::uniform, wmode = W::he;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  ReluNetd net;
  net.input_dim  = dim;
  net.axes       = basis.axes;
  net.basis      = basis.functions;
  net.domain     = domain;
  net.activation = activation;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto &plus = net.basis[2 * i];
    double b   = plus.location;
    const auto [lo, hi] = basis.range[static_cast<std::size_t>(plus.axis)];
    switch (bmode) {
      case B::equi: break;
      case B::uniform: b = lo + (hi - lo) * unit(rng); break;
      case B::xavier: b = -xavier + 2.0 * xavier * unit(rng); break;
      case B::he: b = he_std * normal(rng); break;
    }
    plus.location              = b;
    net.basis[2 * i + 1].location = b;
  }

  // total_random draws every slot independently; the other random W are pairwise (+-p)
  Eigen::VectorXd w(static_cast<Eigen::Index>(2 * pairs));
  auto draw = [&]() {
    switch (wmode) {
      case W::pm_p: return unit(rng);
      case W::uniform: return -1.0 + 2.0 * unit(rng);
      case W::xavier: return -xavier + 2.0 * xavier * unit(rng);
      case W::he: return he_std * normal(rng);
      case W::pm_b: break;
    }
    return 0.0;
  };
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (strategy == "total_random") {
      w[2 * ii]     = draw();
      w[2 * ii + 1] = draw();
      continue;
    }
    const double v = wmode == W::pm_b ? net.basis[2 * i].location : draw();
    w[2 * ii]      = v;
    w[2 * ii + 1]  = -v;
  }
  net.theta            = w;
  net.initial_multiset = w;
  net.validate();
  return net;
}

DataSizes default_sizes(int dim, double scale)
{
  if (!(scale > 0.0)) throw std::invalid_argument("data scale must be positive");
  const DataSizes base = dim == 1 ? DataSizes{1600, 400} : DataSizes{51200, 12800};
  return {std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base.train * scale))),
          std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(base.test * scale)))};
}

DataSplit generate_data(const TargetFunction &target, std::size_t n_train, std::size_t n_test, std::uint64_t seed)
{
  const int d = target.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DataSplit split;
  split.train.x.resize(static_cast<Eigen::Index>(n_train), d);
  split.train.y.resize(static_cast<Eigen::Index>(n_train));
  const Eigen::VectorXd lo = target.domain.lo, span = target.domain.hi - target.domain.lo;
  for (Eigen::Index r = 0; r < split.train.x.rows(); ++r) {
    for (int c = 0; c < d; ++c) split.train.x(r, c) = lo[c] + span[c] * unit(rng);
    split.train.y[r] = target.eval(split.train.x.row(r).transpose());
  }

  const auto per_axis = std::max<std::size_t>(
    2, static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n_test), 1.0 / d))));
  std::size_t total = 1;
  for (int c = 0; c < d; ++c) total *= per_axis;
  split.test.x.resize(static_cast<Eigen::Index>(total), d);
  split.test.y.resize(static_cast<Eigen::Index>(total));
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    for (int c = d - 1; c >= 0; --c) {
      const std::size_t idx = rem % per_axis;
      rem /= per_axis;
      split.test.x(static_cast<Eigen::Index>(r), c) =
        lo[c] + span[c] * static_cast<double>(idx) / static_cast<double>(per_axis - 1);
    }
    split.test.y[static_cast<Eigen::Index>(r)] = target.eval(split.test.x.row(static_cast<Eigen::Index>(r)).transpose());
  }
  return split;
}

RateFit fit_rate(const std::vector<std::pair<double, double>> &points)
{
  if (points.size() < 2) throw std::invalid_argument("rate fit needs at least two points");
  const auto m = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto &[n, e] : points) {
    if (!(n > 0.0) || !(e > 0.0)) throw std::invalid_argument("rate fit needs positive n and error");
    sx += std::log(n);
    sy += std::log(e);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (const auto &[n, e] : points) {
    sxx += (std::log(n) - mx) * (std::log(n) - mx);
    sxy += (std::log(n) - mx) * (std::log(e) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate fit needs distinct n");
  RateFit fit;
  fit.slope     = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (points.size() == 2) {
    fit.stderr_slope = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sse = 0;
    for (const auto &[n, e] : points) {
      const double r = std::log(e) - (fit.intercept + fit.slope * std::log(n));
      sse += r * r;
    }
    fit.stderr_slope = std::sqrt(sse / (m - 2.0) / sxx);
  }
  return fit;
}

double adjacent_step_error(std::size_t n, double delta_h)
{
  if (n < 4) throw std::invalid_argument("need at least four locations");
  const double d = 1.0 / static_cast<double>(n - 1);
  const std::array<double, 4> b{0.0, d, 2.0 * d, 3.0 * d};
  return step_error_l2(b, delta_h / step_matching(b).height());
}

TestErrors test_errors(const ReluNetd &net, const Dataset &test)
{
  TestErrors e;
  if (test.y.size() == 0) return e;
  double sq = 0.0;
  const Eigen::Index rows = test.x.rows();
  const Eigen::Index chunk = 1024;
  for (Eigen::Index start = 0; start < rows; start += chunk) {
    const Eigen::Index len   = std::min(chunk, rows - start);
    const Eigen::MatrixXd phi = features(net, test.x.middleRows(start, len));
    const Eigen::VectorXd pred = (net.alpha + net.gamma * (phi * net.theta).array()).matrix();
    const Eigen::VectorXd diff = pred - test.y.segment(start, len);
    e.sup = std::max(e.sup, diff.cwiseAbs().maxCoeff());
    sq += diff.squaredNorm();
  }
  e.l2 = std::sqrt(sq / static_cast<double>(rows));
  return e;
}

TrainConfig table_config(int dim)
{
  TrainConfig cfg;
  cfg.k          = dim == 3 ? 20 : 5;
  cfg.batch_size = dim == 1 ? 16 : (dim == 2 ? 128 : 640);
  return cfg;
}

double table_t_b(int dim) { return dim == 1 ? 0.0 : 0.75; }

}  // namespace permuap
