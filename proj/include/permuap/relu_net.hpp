#ifndef PERMUAP_RELU_NET_HPP_
#define PERMUAP_RELU_NET_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace permuap {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class ActivationKind { relu, leaky };

struct Activation
{
  ActivationKind kind = ActivationKind::relu;
  double slope       = 0.01;  // leaky only, in (0, 1)

  static Activation relu() { return {}; }
  static Activation leaky(double s = 0.01)
  {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("leaky slope must lie in (0, 1)");
    return {ActivationKind::leaky, s};
  }

  template <typename Scalar>
  Scalar operator()(Scalar z) const
  {
    if (z > Scalar(0)) return z;
    return kind == ActivationKind::relu ? Scalar(0) : Scalar(slope) * z;
  }

  // subgradient 0 at the kink
  template <typename Scalar>
  Scalar derivative(Scalar z) const
  {
    if (z > Scalar(0)) return Scalar(1);
    return kind == ActivationKind::relu ? Scalar(0) : Scalar(slope);
  }

  bool operator==(const Activation &) const = default;
};

/// One frozen first-layer unit: act(side * (axis . x - location)).
///
/// In 1D the single axis is (1) and side = +1 / -1 gives phi^+ / phi^-.
/// In higher dimensions `axis` indexes a column of ReluNet::axes.
template <typename Scalar>
struct BasisFunction
{
  Scalar location{0};
  int axis = 0;
  int side = +1;

  bool operator==(const BasisFunction &) const = default;
};

/// Axis-aligned box, one interval per input dimension.
struct Box
{
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box interval(double a, double b)
  {
    Box box;
    box.lo = Eigen::VectorXd::Constant(1, a);
    box.hi = Eigen::VectorXd::Constant(1, b);
    return box;
  }
  static Box cube(int dim, double a, double b)
  {
    return {Eigen::VectorXd::Constant(dim, a), Eigen::VectorXd::Constant(dim, b)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived> &x) const
  {
    return (x.template cast<double>().array() >= lo.array()).all() &&
           (x.template cast<double>().array() <= hi.array()).all();
  }
};

/// The constrained three-layer network
///   f(x) = alpha + gamma * sum_i theta_i * act(side_i (axis_i . x - b_i)).
///
/// The basis layer is frozen. `theta` is the permutable coefficient vector and
/// `initial_multiset` holds the values it must remain a permutation of. In 1D the
/// basis is interleaved as (phi_1^+, phi_1^-, ..., phi_n^+, phi_n^-) so that
/// theta = (p_1, q_1, ..., p_n, q_n).
template <typename Scalar>
struct ReluNet
{
  int input_dim = 1;
  MatrixX<Scalar> axes = MatrixX<Scalar>::Ones(1, 1);  // input_dim x num_axes
  std::vector<BasisFunction<Scalar>> basis;
  VectorX<Scalar> theta;
  VectorX<Scalar> initial_multiset;
  Scalar alpha{0};
  Scalar gamma{1};
  Activation activation;
  Box domain = Box::interval(0.0, 1.0);

  std::size_t size() const { return basis.size(); }

  /// Throws if the per-coefficient vectors disagree in length.
  void validate() const
  {
    if (static_cast<std::size_t>(theta.size()) != basis.size() ||
        static_cast<std::size_t>(initial_multiset.size()) != basis.size())
      throw std::invalid_argument("theta, basis and initial_multiset must have equal length");
    if (axes.rows() != input_dim) throw std::invalid_argument("axes rows must equal input_dim");
    for (const auto &bf : basis) {
      if (bf.axis < 0 || bf.axis >= axes.cols()) throw std::invalid_argument("basis axis out of range");
      if (bf.side != 1 && bf.side != -1) throw std::invalid_argument("basis side must be +1 or -1");
    }
  }

  template <typename Other>
  ReluNet<Other> cast() const
  {
    ReluNet<Other> out;
    out.input_dim = input_dim;
    out.axes      = axes.template cast<Other>();
    out.basis.reserve(basis.size());
    for (const auto &bf : basis) out.basis.push_back({static_cast<Other>(bf.location), bf.axis, bf.side});
    out.theta            = theta.template cast<Other>();
    out.initial_multiset = initial_multiset.template cast<Other>();
    out.alpha            = static_cast<Other>(alpha);
    out.gamma            = static_cast<Other>(gamma);
    out.activation       = activation;
    out.domain           = domain;
    return out;
  }
};

using ReluNetd = ReluNet<double>;

/// A 1D net with the interleaved (phi^+, phi^-) basis at the given locations.
template <typename Scalar>
ReluNet<Scalar> make_net_1d(const VectorX<Scalar> &locations, const VectorX<Scalar> &theta,
                            Scalar alpha = Scalar(0), Scalar gamma = Scalar(1), Box domain = Box::interval(0.0, 1.0))
{
  ReluNet<Scalar> net;
  net.domain = std::move(domain);
  net.basis.reserve(2 * locations.size());
  for (Eigen::Index i = 0; i < locations.size(); ++i) {
    net.basis.push_back({locations[i], 0, +1});
    net.basis.push_back({locations[i], 0, -1});
  }
  net.theta            = theta;
  net.initial_multiset = theta;
  net.alpha            = alpha;
  net.gamma            = gamma;
  net.validate();
  return net;
}

/// Values of every basis function at x (the frozen hidden layer).
template <typename Scalar, typename Derived>
VectorX<Scalar> hidden_layer(const ReluNet<Scalar> &net, const Eigen::MatrixBase<Derived> &x)
{
  if (x.size() != net.input_dim) throw std::invalid_argument("input dimension mismatch");
  const VectorX<Scalar> proj = net.axes.transpose() * x.template cast<Scalar>();
  VectorX<Scalar> out(net.basis.size());
  for (std::size_t i = 0; i < net.basis.size(); ++i) {
    const auto &bf = net.basis[i];
    out[i]         = net.activation(Scalar(bf.side) * (proj[bf.axis] - bf.location));
  }
  return out;
}

template <typename Scalar, typename Derived>
Scalar forward(const ReluNet<Scalar> &net, const Eigen::MatrixBase<Derived> &x)
{
  return net.alpha + net.gamma * net.theta.dot(hidden_layer(net, x));
}

template <typename Scalar>
Scalar forward(const ReluNet<Scalar> &net, Scalar x)
{
  return forward(net, VectorX<Scalar>::Constant(1, x));
}

/// Hidden-layer matrix for a batch, one sample per row of `xs`.
template <typename Scalar, typename Derived>
MatrixX<Scalar> features(const ReluNet<Scalar> &net, const Eigen::MatrixBase<Derived> &xs)
{
  if (xs.cols() != net.input_dim) throw std::invalid_argument("input dimension mismatch");
  const MatrixX<Scalar> proj = xs.template cast<Scalar>() * net.axes;  // N x num_axes
  MatrixX<Scalar> phi(xs.rows(), static_cast<Eigen::Index>(net.basis.size()));
  for (std::size_t i = 0; i < net.basis.size(); ++i) {
    const auto &bf = net.basis[i];
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index r = 0; r < xs.rows(); ++r)
      phi(r, col) = net.activation(Scalar(bf.side) * (proj(r, bf.axis) - bf.location));
  }
  return phi;
}

template <typename Scalar>
struct Gradients
{
  VectorX<Scalar> theta;
  Scalar alpha{0};
  Scalar gamma{0};
};

/// MSE gradients w.r.t. theta, alpha and gamma from a precomputed hidden-layer batch.
template <typename Scalar, typename DerivedPhi, typename DerivedY>
Gradients<Scalar> gradients_from_features(const ReluNet<Scalar> &net, const Eigen::MatrixBase<DerivedPhi> &phi,
                                          const Eigen::MatrixBase<DerivedY> &ys)
{
  if (phi.rows() == 0) throw std::invalid_argument("empty batch");
  if (phi.rows() != ys.size()) throw std::invalid_argument("batch size mismatch");
  const VectorX<Scalar> inner    = phi * net.theta;
  const VectorX<Scalar> residual = (net.alpha + net.gamma * inner.array()).matrix() - ys;
  const Scalar scale             = Scalar(2) / Scalar(phi.rows());
  Gradients<Scalar> g;
  g.theta = (scale * net.gamma) * (phi.transpose() * residual);
  g.alpha = scale * residual.sum();
  g.gamma = scale * residual.dot(inner);
  return g;
}

template <typename Scalar, typename DerivedX, typename DerivedY>
Gradients<Scalar> gradients(const ReluNet<Scalar> &net, const Eigen::MatrixBase<DerivedX> &xs,
                            const Eigen::MatrixBase<DerivedY> &ys)
{
  if (xs.rows() == 0) throw std::invalid_argument("empty batch");
  return gradients_from_features(net, features(net, xs), ys);
}

template <typename Scalar, typename DerivedX, typename DerivedY>
Scalar mse(const ReluNet<Scalar> &net, const Eigen::MatrixBase<DerivedX> &xs, const Eigen::MatrixBase<DerivedY> &ys)
{
  if (xs.rows() == 0) throw std::invalid_argument("empty batch");
  const VectorX<Scalar> pred = (net.alpha + net.gamma * (features(net, xs) * net.theta).array()).matrix();
  return (pred - ys).squaredNorm() / Scalar(xs.rows());
}

// ---------------------------------------------------------------------------
// 1D grid evaluation and error norms

struct EvalGrid
{
  Eigen::VectorXd points;
  Eigen::VectorXd values;
};

Eigen::VectorXd uniform_grid(double lo, double hi, std::size_t count);

/// Evaluates a 1D net at ascending points. Large nets use prefix sums over the
/// sorted kinks, O((n + m) log n) instead of O(n m).
EvalGrid eval_grid(const ReluNetd &net, const Eigen::VectorXd &points);

using ScalarFunction = std::function<double(double)>;

double sup_error(const EvalGrid &grid, const ScalarFunction &target);
/// Trapezoid-rule L2 norm of (values - target) over the grid.
double l2_error(const EvalGrid &grid, const ScalarFunction &target);

/// Bitwise multiset equality: sorts both with -0 ordered before +0 and compares bit patterns.
bool same_multiset(const Eigen::VectorXd &a, const Eigen::VectorXd &b);

/// An index bijection over theta together with what produced it.
struct PermutationPlan
{
  std::vector<std::size_t> indices;  // result[i] = source[indices[i]]
  std::string provenance;
};

/// Composes two index bijections: result[i] = outer[inner[i]].
std::vector<std::size_t> compose(const std::vector<std::size_t> &outer, const std::vector<std::size_t> &inner);

/// out[i] = values[perm[i]].
Eigen::VectorXd apply_permutation(const Eigen::VectorXd &values, const std::vector<std::size_t> &perm);

}  // namespace permuap

#endif  // PERMUAP_RELU_NET_HPP_
