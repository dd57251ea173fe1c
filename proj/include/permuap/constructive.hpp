#ifndef PERMUAP_CONSTRUCTIVE_HPP_
#define PERMUAP_CONSTRUCTIVE_HPP_

#include "permuap/relu_net.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace permuap {

// ---------------------------------------------------------------------------
// Piecewise-constant decomposition

struct Step
{
  double location = 0.0;
  int sign        = +1;
};

/// g(x) = base + sum_j sign_j * delta_h * chi(x - s_j), chi(z) = [z >= 0].
struct PiecewiseConstant
{
  double delta_h = 0.0;
  double base    = 0.0;
  std::vector<Step> steps;

  std::size_t count() const { return steps.size(); }
  int net_sign() const;  // J' = sum of signs
  double min_gap() const;  // +inf for fewer than two steps
  double operator()(double x) const;
};

struct DecomposeOptions
{
  std::optional<double> delta_h;  // defaults to eps
  std::size_t samples = 100000;
  double tolerance    = 1e-10;
};

/// Scans f on [0, 1] for crossings of the levels (k + 1/2) delta_h.
PiecewiseConstant decompose_target(const ScalarFunction &f, double eps, const DecomposeOptions &opts = {});

// ---------------------------------------------------------------------------
// Four-pair approximators and linear reorganization

enum class FourPairKind { step, constant_plus, constant_minus };

/// Coefficients for four symmetric (phi^+, phi^-) pairs, b2 - b1 == b4 - b3.
struct FourPairAssignment
{
  std::array<double, 4> locations{};
  std::array<double, 4> p{};
  std::array<double, 4> q{};
  FourPairKind kind = FourPairKind::step;

  double d() const { return locations[1] - locations[0]; }
  double height() const { return 4.0 * d() * (locations[3] - locations[1]); }
  double k1() const { return 0.5 * (locations[2] - locations[1]); }
  double k2() const { return 0.5 * (locations[3] - locations[0]); }
  double center() const { return 0.5 * (locations[1] + locations[2]); }
  double operator()(double x) const;
};

inline constexpr double kSymmetryTolerance = 1e-12;

FourPairAssignment step_matching(const std::array<double, 4> &b);
FourPairAssignment constant_matching(const std::array<double, 4> &b, int sign);

struct AffineTerm
{
  double slope     = 0.0;
  double intercept = 0.0;
};

/// The pair {+b, -b} on (phi^+, phi^-) with sign m realizes m (b x - b^2).
AffineTerm linear_reorganize(double b, int m);

/// Closed-form L2 error of gamma (f_s + h/2) against the step of height gamma h at the centre.
double step_error_l2(const std::array<double, 4> &b, double gamma);
/// L2 error of f_s(x - delta_s) + h/2 against the height-h step at the unshifted centre.
double pseudo_copy_error_l2(const std::array<double, 4> &b, double delta_s);

// ---------------------------------------------------------------------------
// Sign assignment and annihilation of unused pairs

/// Signs m with 0 <= sum m_i c_i <= largest_adjacent_gap(c). Throws on odd length.
std::vector<int> sign_assignment(const std::vector<double> &c);

double largest_adjacent_gap(std::vector<double> c);
double nearest_neighbour_gap(const std::vector<double> &c);

struct Annihilation
{
  std::vector<int> signs;               // one per input pair
  std::optional<std::size_t> retired;   // index fixed to +1 when the count is odd
  double slope     = 0.0;               // beta = sum m_i magnitude_i
  double intercept = 0.0;               // eta = -sum m_i magnitude_i location_i
  double c_eta     = 0.0;               // -eta
  double bound     = 0.0;               // bound on |slope - target_slope|
};

/// Picks signs for unused pairs (magnitude_i at location_i) so that their affine
/// sum has slope within `bound` of target_slope.
Annihilation annihilate_remainder(const std::vector<double> &magnitudes, const std::vector<double> &locations,
                                  double target_slope = 0.0);

// ---------------------------------------------------------------------------
// Builders

class WidthCapExceeded : public std::runtime_error
{
public:
  WidthCapExceeded(std::size_t required, std::size_t cap);
  std::size_t required;
  std::size_t cap;
};

struct ErrorBudget
{
  double g_error   = 0.0;  // sup |g - f| on the sample grid
  double e_use     = 0.0;  // bound on the used subnetwork, output units
  double e_un      = 0.0;  // realized unused residual, output units
  double e_un_bound = 0.0;
  double total     = 0.0;
  double measured  = 0.0;  // sup |f_NN - f| on the evaluation grid
  double eps       = 0.0;
};

struct ConstructionLedger
{
  std::string builder;
  std::size_t n     = 0;
  std::size_t n_hat = 0;
  std::size_t refinement = 1;  // L
  double delta_h   = 0.0;
  int j_prime      = 0;
  std::vector<std::vector<std::size_t>> used_sets;      // K_j, pair indices
  std::vector<std::vector<std::size_t>> magnitude_sets; // random builder: pairs supplying the coefficients
  std::vector<std::vector<std::size_t>> constant_sets;  // constant-matching blocks
  std::vector<std::size_t> unused;                      // I_un
  std::vector<int> unused_signs;
  std::optional<std::size_t> retired;
  double beta   = 0.0;
  double eta    = 0.0;
  double c_eta  = 0.0;
  double c_c    = 0.0;
  double c_r    = 0.0;
  double gamma  = 1.0;
  double alpha  = 0.0;
  ErrorBudget budget;
  std::string domain_map;
  std::vector<std::string> notes;
};

struct Construction
{
  ReluNetd net;
  ConstructionLedger ledger;
  PiecewiseConstant g;
};

struct BuildOptions
{
  std::size_t width_cap   = 1000000;
  std::size_t eval_points = 10001;
  DecomposeOptions decompose;
};

/// Equidistant basis, W = (+-b_i), learned alpha and gamma.
Construction build_theorem1(const ScalarFunction &f, double eps, const BuildOptions &opts = {});
/// Equidistant basis with alpha = 0, gamma = 1 via pseudo-copies and constant blocks.
Construction build_theorem2(const ScalarFunction &f, double eps, const BuildOptions &opts = {});

/// Maps a net built on [0, 1] onto [lo, hi]; theta and its multiset are untouched.
void map_to_domain(Construction &c, double lo, double hi);

/// Fills the error budget's measured sup error on opts.eval_points points.
void measure(Construction &c, const ScalarFunction &f, std::size_t eval_points);

// ---------------------------------------------------------------------------
// Random initialization

struct MatchResult
{
  std::vector<std::size_t> locations;   // B index per target, valid when ok()
  std::vector<std::size_t> magnitudes;  // pair index per target
  std::vector<std::size_t> unmatched_locations;
  std::vector<std::size_t> unmatched_magnitudes;
  bool ok() const { return unmatched_locations.empty() && unmatched_magnitudes.empty(); }
};

/// Greedy nearest-first matching in ascending target order; each candidate is claimed once.
std::vector<std::optional<std::size_t>> match_nearest(const std::vector<double> &pool, const std::vector<double> &targets,
                                                      double delta_r);

/// Matches each target to a location in B_rand and a pair magnitude |W_rand[2i]|.
MatchResult match_subnetwork(const Eigen::VectorXd &b_rand, const Eigen::VectorXd &w_rand,
                             const std::vector<double> &targets, double delta_r);

double match_probability(std::size_t n_hat, std::size_t n, double delta_r);

struct RandomPlan
{
  PiecewiseConstant g;
  std::vector<double> targets;  // 4 per step, ascending within each window
  double spacing  = 0.0;        // window spacing d
  double gamma    = 0.0;
  double lambda_h = 0.0;        // jump sensitivity per unit perturbation
  double lambda_local = 0.0;    // in-window sensitivity per unit perturbation
  double r0       = 0.0;
  double delta_r  = 0.0;
  std::size_t n   = 0;
  double p_sub    = 0.0;
  double p_un     = 0.0;
  bool trivial    = false;
  double trivial_alpha = 0.0;
};

struct RandomOptions : BuildOptions
{
  std::optional<std::size_t> width;  // override the planned n
};

RandomPlan plan_random(const ScalarFunction &f, double eps, double delta, const RandomOptions &opts = {});

struct Retry
{
  std::string reason;
  std::size_t n = 0;
  double delta_r = 0.0;
  std::size_t unmatched_locations  = 0;
  std::size_t unmatched_magnitudes = 0;
};

struct RandomOutcome
{
  std::optional<Construction> construction;
  std::optional<Retry> retry;
  RandomPlan plan;
};

/// Assembles the network from given random draws; B and p have the same length.
RandomOutcome assemble_random(const RandomPlan &plan, const Eigen::VectorXd &b_rand, const Eigen::VectorXd &p_rand);

RandomOutcome build_random(const ScalarFunction &f, double eps, double delta, std::uint64_t seed,
                           const RandomOptions &opts = {});

}  // namespace permuap

#endif  // PERMUAP_CONSTRUCTIVE_HPP_
