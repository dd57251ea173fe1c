#include "permuap/laperm.hpp"

#include <chrono>
#include <numeric>
#include <ostream>
#include <random>

namespace permuap {

void adam_step(Eigen::VectorXd &params, const Eigen::VectorXd &grads, AdamState &state, double lr,
               const AdamHyper &hyper)
{
  if (params.size() != grads.size()) throw std::invalid_argument("parameter and gradient sizes differ");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.t = 0;
  }
  ++state.t;
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hyper.eps);
}

namespace {

bool total_less(double a, double b)
{
  if (a < b) return true;
  if (b < a) return false;
  return std::signbit(a) && !std::signbit(b);
}

}  // namespace

PermutationPlan rank_matching_plan(const Eigen::VectorXd &theta_free, const Eigen::VectorXd &w_init)
{
  if (theta_free.size() != w_init.size()) throw std::invalid_argument("theta and W differ in length");
  const auto n = static_cast<std::size_t>(w_init.size());
  std::vector<std::size_t> by_theta(n), by_w(n);
  std::iota(by_theta.begin(), by_theta.end(), 0);
  std::iota(by_w.begin(), by_w.end(), 0);
  std::stable_sort(by_theta.begin(), by_theta.end(), [&](std::size_t a, std::size_t b) {
    return theta_free[static_cast<Eigen::Index>(a)] < theta_free[static_cast<Eigen::Index>(b)];
  });
  std::stable_sort(by_w.begin(), by_w.end(), [&](std::size_t a, std::size_t b) {
    return total_less(w_init[static_cast<Eigen::Index>(a)], w_init[static_cast<Eigen::Index>(b)]);
  });
  PermutationPlan plan;
  plan.indices.resize(n);
  for (std::size_t r = 0; r < n; ++r) plan.indices[by_theta[r]] = by_w[r];
  plan.provenance = "rank matching";
  return plan;
}

Eigen::VectorXd permute_to_initial(const Eigen::VectorXd &theta_free, const Eigen::VectorXd &w_init)
{
  return apply_permutation(w_init, rank_matching_plan(theta_free, w_init).indices);
}

void TrainConfig::validate() const
{
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(k >= 1.0)) throw std::invalid_argument("k must be at least 1");
  if (!(k_growth > 0.0) || !(lr_decay > 0.0)) throw std::invalid_argument("growth and decay factors must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
}

std::size_t count_moved(const Eigen::VectorXd &before, const Eigen::VectorXd &after)
{
  std::size_t moved = 0;
  for (Eigen::Index i = 0; i < before.size(); ++i) moved += before[i] != after[i];
  return moved;
}

namespace {

constexpr double kFeatureCacheLimit = 2e7;  // doubles

struct FullLoss
{
  const ReluNetd &net;
  const Dataset &data;
  const Eigen::MatrixXd *phi;

  double operator()() const
  {
    if (phi) {
      const Eigen::VectorXd pred = (net.alpha + net.gamma * (*phi * net.theta).array()).matrix();
      return (pred - data.y).squaredNorm() / static_cast<double>(data.y.size());
    }
    return mse(net, data.x, data.y);
  }
};

TrainReport run(ReluNetd net, const Dataset &data, const TrainConfig &cfg, const ProjectionObserver &observer)
{
  cfg.validate();
  net.validate();
  if (data.x.rows() != data.y.size()) throw std::invalid_argument("dataset x and y differ in length");
  if (data.x.cols() != net.input_dim) throw std::invalid_argument("dataset dimension does not match the net");
  if (data.x.rows() == 0 && cfg.epochs > 0) throw std::invalid_argument("empty dataset");

  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  const Eigen::VectorXd w = net.initial_multiset;
  const auto N            = static_cast<std::size_t>(data.x.rows());
  const Eigen::Index P    = static_cast<Eigen::Index>(net.size());

  Eigen::MatrixXd phi_all;
  const bool cached = static_cast<double>(N) * static_cast<double>(P) <= kFeatureCacheLimit;
  if (cached && cfg.epochs > 0) phi_all = features(net, data.x);
  const FullLoss full_loss{net, data, cached ? &phi_all : nullptr};

  const bool affine = !cfg.freeze_affine;
  Eigen::VectorXd params(P + (affine ? 2 : 0));
  AdamState state;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);

  double k = cfg.k, lr = cfg.lr;
  std::size_t since = 0;
  Eigen::VectorXd projected = net.theta;

  auto project = [&](std::size_t epoch) {
    const double before = full_loss();
    Eigen::VectorXd next = permute_to_initial(net.theta, w);
    net.theta            = next;
    const double after   = full_loss();
    const std::size_t moved = count_moved(projected, next);
    if (!same_multiset(next, w)) report.multiset_ok = false;
    report.events.push_back({epoch, moved, before, after});
    if (observer) observer(ProjectionView{epoch, projected, next, before, after});
    projected = std::move(next);
    if (cfg.adaptive_k && after > 1.1 * before) k *= 2.0;
    since = 0;
    return moved;
  };

  Eigen::MatrixXd phi_batch;
  Eigen::VectorXd y_batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < N; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, N - start);
      phi_batch.resize(static_cast<Eigen::Index>(len), P);
      y_batch.resize(static_cast<Eigen::Index>(len));
      Eigen::MatrixXd xb;
      if (!cached) xb.resize(static_cast<Eigen::Index>(len), data.x.cols());
      for (std::size_t r = 0; r < len; ++r) {
        const auto src = static_cast<Eigen::Index>(order[start + r]);
        const auto dst = static_cast<Eigen::Index>(r);
        if (cached)
          phi_batch.row(dst) = phi_all.row(src);
        else
          xb.row(dst) = data.x.row(src);
        y_batch[dst] = data.y[src];
      }
      if (!cached) phi_batch = features(net, xb);

      const Eigen::VectorXd inner = phi_batch * net.theta;
      const Eigen::VectorXd resid = (net.alpha + net.gamma * inner.array()).matrix() - y_batch;
      loss_sum += resid.squaredNorm() / static_cast<double>(len);
      ++batches;
      const auto g = gradients_from_features(net, phi_batch, y_batch);

      params.head(P) = net.theta;
      Eigen::VectorXd grads(params.size());
      grads.head(P) = g.theta;
      if (affine) {
        params[P]     = net.alpha;
        params[P + 1] = net.gamma;
        grads[P]      = g.alpha;
        grads[P + 1]  = g.gamma;
      }
      adam_step(params, grads, state, lr, cfg.adam);
      net.theta = params.head(P);
      if (affine) {
        net.alpha = params[P];
        net.gamma = params[P + 1];
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss  = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.k     = k;
    rec.lr    = lr;
    ++since;
    if (cfg.permute && static_cast<double>(since) >= std::floor(k)) rec.moved = project(epoch);
    report.epochs.push_back(rec);
    if (cfg.max_events && report.events.size() >= cfg.max_events) break;
    k *= cfg.k_growth;
    lr *= cfg.lr_decay;
  }
  if (cfg.permute && since > 0) {
    const std::size_t moved = project(cfg.epochs);
    if (!report.epochs.empty()) report.epochs.back().moved += moved;
  }

  report.net          = std::move(net);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace

TrainReport laperm_train(ReluNetd net, const Dataset &data, const TrainConfig &cfg, const ProjectionObserver &observer)
{
  return run(std::move(net), data, cfg, observer);
}

TrainReport train_free(ReluNetd net, const Dataset &data, TrainConfig cfg)
{
  cfg.permute = false;
  return run(std::move(net), data, cfg, {});
}

void write_report_csv(const TrainReport &report, std::ostream &os)
{
  os << "# permuap train report v1\n";
  os << "epoch,loss,moved_count,k,lr\n";
  os.precision(17);
  for (const auto &r : report.epochs) os << r.epoch << ',' << r.loss << ',' << r.moved << ',' << r.k << ',' << r.lr << '\n';
}

}  // namespace permuap
