#ifndef PERMUAP_LAPERM_HPP_
#define PERMUAP_LAPERM_HPP_

#include "permuap/relu_net.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace permuap {

struct AdamHyper
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps   = 1e-8;
};

struct AdamState
{
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::size_t t = 0;
};

/// One bias-corrected Adam update; zero-initializes state on first use.
void adam_step(Eigen::VectorXd &params, const Eigen::VectorXd &grads, AdamState &state, double lr,
               const AdamHyper &hyper = {});

/// Rank matching: the i-th smallest W value goes where the i-th smallest theta_free value is.
/// Ties in theta_free keep index order; W is ordered with -0 before +0.
Eigen::VectorXd permute_to_initial(const Eigen::VectorXd &theta_free, const Eigen::VectorXd &w_init);
/// The same projection as an index plan over W.
PermutationPlan rank_matching_plan(const Eigen::VectorXd &theta_free, const Eigen::VectorXd &w_init);

struct TrainConfig
{
  double lr        = 1e-3;
  AdamHyper adam;
  double k         = 5;
  double k_growth  = std::pow(1.002, 0.1);  // per epoch
  double lr_decay  = 0.998;                 // per epoch
  std::size_t epochs     = 2000;
  std::size_t batch_size = 16;
  std::uint64_t seed     = 2022;
  bool permute       = true;
  bool freeze_affine = false;  // keep alpha and gamma fixed
  bool adaptive_k    = false;  // double k when a projection raises the loss by more than 10%
  std::size_t max_events = 0;  // stop after this many projections, 0 for no limit

  void validate() const;
};

struct Dataset
{
  Eigen::MatrixXd x;  // one sample per row
  Eigen::VectorXd y;
};

struct EpochRecord
{
  std::size_t epoch = 0;  // 1-based
  double loss       = 0.0;  // mean minibatch loss over the epoch
  std::size_t moved = 0;    // components changed by this epoch's projection
  double k          = 0.0;
  double lr         = 0.0;
};

struct PermutationEvent
{
  std::size_t epoch  = 0;
  std::size_t moved  = 0;
  double loss_before = 0.0;  // full-data loss of the free iterate
  double loss_after  = 0.0;  // after projection
};

/// Passed to an observer at every projection.
struct ProjectionView
{
  std::size_t epoch;
  const Eigen::VectorXd &theta_before;  // previous projected theta
  const Eigen::VectorXd &theta_after;
  double loss_before;
  double loss_after;
};

using ProjectionObserver = std::function<void(const ProjectionView &)>;

struct TrainReport
{
  std::vector<EpochRecord> epochs;
  std::vector<PermutationEvent> events;
  ReluNetd net;
  double wall_seconds = 0.0;
  bool multiset_ok    = true;  // checked after every projection
};

TrainReport laperm_train(ReluNetd net, const Dataset &data, const TrainConfig &cfg,
                         const ProjectionObserver &observer = {});
/// Same loop with the projection disabled.
TrainReport train_free(ReluNetd net, const Dataset &data, TrainConfig cfg);

/// Components whose value differs (values compare equal for -0 and +0).
std::size_t count_moved(const Eigen::VectorXd &before, const Eigen::VectorXd &after);

void write_report_csv(const TrainReport &report, std::ostream &os);

}  // namespace permuap

#endif  // PERMUAP_LAPERM_HPP_
