#ifndef PERMUAP_HARNESS_HPP_
#define PERMUAP_HARNESS_HPP_

#include "permuap/laperm.hpp"
#include "permuap/relu_net.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace permuap {

struct TargetFunction
{
  std::string name;
  int dim = 1;
  std::function<double(const Eigen::VectorXd &)> eval;
  Box domain;
};

/// sin1d, legendre3, sin2d, sin3d (the regression targets, all on [-1, 1]^d).
const std::vector<TargetFunction> &regression_targets();
TargetFunction target_by_name(const std::string &name);

/// Frozen first layer: axis directions (columns) and the interleaved basis.
struct Basis
{
  Eigen::MatrixXd axes;
  std::vector<BasisFunction<double>> functions;
  std::vector<std::pair<double, double>> range;  // per axis location range
};

/// 1D: 2n functions with equidistant locations on [lo, hi].
Basis make_basis_1d(std::size_t n, double lo = -1.0, double hi = 1.0);
/// 2D: axes (1,0), (0,1), (1,1), (1,-1); locations in [-|u|(1+T_b), |u|(1+T_b)]; 8n functions.
Basis make_basis_2d(std::size_t n, double t_b = 0.75);
/// 3D: the 13 axes with first nonzero component positive, both sides; 26n functions.
Basis make_basis_3d(std::size_t n, double t_b = 0.75);
Basis make_basis(int dim, std::size_t n, double t_b = 0.75);

const std::vector<std::string> &strategy_names();
bool is_strategy(const std::string &name);

/// Draws locations and W for `strategy` and returns the net with theta = W.
/// Equidistant locations come from `basis`; random ones are uniform on each axis range.
ReluNetd initialize(const std::string &strategy, const Basis &basis, int dim, std::mt19937_64 &rng,
                    const Box &domain, Activation activation = {});

struct DataSplit
{
  Dataset train;
  Dataset test;
};

struct DataSizes
{
  std::size_t train = 1600;
  std::size_t test  = 400;
};

DataSizes default_sizes(int dim, double scale = 1.0);
/// Uniform random training points, equidistant test grid (per axis round(test^(1/d)) points).
DataSplit generate_data(const TargetFunction &target, std::size_t n_train, std::size_t n_test, std::uint64_t seed);

struct RateFit
{
  double slope     = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;  // NaN with exactly two points
};

/// Least squares of log e against log n.
RateFit fit_rate(const std::vector<std::pair<double, double>> &points);

/// L2 error of a height-delta_h step realized by four adjacent equidistant locations at width n
/// (gamma = delta_h / h, closed form).
double adjacent_step_error(std::size_t n, double delta_h = 1.0);

struct TestErrors
{
  double sup = 0.0;
  double l2  = 0.0;  // root mean square over the test grid
};

TestErrors test_errors(const ReluNetd &net, const Dataset &test);

inline std::uint64_t run_seed(std::size_t i) { return 2022 + 1000 * static_cast<std::uint64_t>(i); }
inline constexpr std::uint64_t kDataSeed = 2022;

/// Default hyperparameters for a dimension (k, batch size, T_b); epochs and lr are shared.
TrainConfig table_config(int dim);
double table_t_b(int dim);

struct SweepCell
{
  std::string target;
  std::string strategy;
  std::size_t n     = 0;
  std::size_t seed  = 0;  // seed index i, actual seed run_seed(i)
  double sup_error  = 0.0;
  double l2_error   = 0.0;
  double final_loss = 0.0;
  bool multiset_ok  = true;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
};

struct SweepFit
{
  std::string target;
  std::string strategy;
  RateFit sup;
  RateFit l2;
};

struct SweepResult
{
  std::vector<SweepCell> cells;
  std::vector<SweepFit> fits;  // medians over seeds, per (target, strategy)
};

struct SweepConfig
{
  std::vector<std::string> targets{"sin1d"};
  std::vector<std::string> strategies{"equidistant"};
  std::vector<std::size_t> n_list{10, 20, 40, 80, 160, 320};
  std::size_t seeds     = 3;
  std::size_t epochs    = 2000;
  double data_scale     = 1.0;
  bool full_scale      = false;  // 6400 epochs, 10 seeds
  std::size_t threads   = 0;      // 0: hardware concurrency
  std::string out_dir;            // empty: keep in memory only
  std::optional<double> lr;
  std::optional<double> k;
  std::optional<std::size_t> batch_size;
};

/// Median-based rate fits for every (target, strategy) present in `cells`.
std::vector<SweepFit> fit_cells(const std::vector<SweepCell> &cells);

/// Trains every (target, strategy, n, seed) cell. With out_dir set, rows are appended to
/// out_dir/sweep.csv as they finish, existing rows are skipped, and a manifest is written.
SweepResult run_sweep(const SweepConfig &cfg, const std::function<void(const SweepCell &)> &on_cell = {});

/// One training run as used by the sweep; exposed for the acceptance checks.
SweepCell run_cell(const std::string &target, const std::string &strategy, std::size_t n, std::size_t seed_index,
                   const SweepConfig &cfg);

std::vector<SweepCell> read_sweep_csv(const std::string &path);
void write_sweep_csv(const std::vector<SweepCell> &cells, const std::string &path);

}  // namespace permuap

#endif  // PERMUAP_HARNESS_HPP_
