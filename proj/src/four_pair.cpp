#include "permuap/constructive.hpp"

#include <cmath>

namespace permuap {

namespace {

void check_symmetric(const std::array<double, 4> &b)
{
  for (int i = 0; i < 3; ++i)
    if (!(b[i] <= b[i + 1])) throw std::invalid_argument("four-pair locations must be ascending");
  if (std::abs((b[1] - b[0]) - (b[3] - b[2])) > kSymmetryTolerance)
    throw std::invalid_argument("four-pair locations violate b2 - b1 == b4 - b3");
}

double relu(double z) { return z > 0.0 ? z : 0.0; }

}  // namespace

double FourPairAssignment::operator()(double x) const
{
  double v = 0.0;
  for (int i = 0; i < 4; ++i) v += p[i] * relu(x - locations[i]) + q[i] * relu(locations[i] - x);
  return v;
}

FourPairAssignment step_matching(const std::array<double, 4> &b)
{
  check_symmetric(b);
  FourPairAssignment a;
  a.locations = b;
  a.p         = {-b[0], b[1], b[2], -b[3]};
  a.q         = {b[3], -b[2], -b[1], b[0]};
  a.kind      = FourPairKind::step;
  return a;
}

FourPairAssignment constant_matching(const std::array<double, 4> &b, int sign)
{
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
  check_symmetric(b);
  FourPairAssignment a;
  a.locations = b;
  for (int i = 0; i < 4; ++i) {
    const double v = (i == 0 || i == 3) ? -b[i] : b[i];
    a.p[i]         = sign > 0 ? v : -v;
    a.q[i]         = -a.p[i];
  }
  a.kind = sign > 0 ? FourPairKind::constant_plus : FourPairKind::constant_minus;
  return a;
}

AffineTerm linear_reorganize(double b, int m)
{
  if (m != 1 && m != -1) throw std::invalid_argument("sign must be +1 or -1");
  return {m * b, -m * b * b};
}

double step_error_l2(const std::array<double, 4> &b, double gamma)
{
  check_symmetric(b);
  const double k1 = 0.5 * (b[2] - b[1]);
  const double k2 = 0.5 * (b[3] - b[0]);
  const double poly = k1 * k1 * k1 + 3 * k1 * k1 * k2 + 2 * k1 * k2 * k2 + k2 * k2 * k2;
  return std::abs(gamma) * std::sqrt(8.0 / 3.0 * (k1 - k2) * (k1 - k2) * poly);
}

double pseudo_copy_error_l2(const std::array<double, 4> &b, double delta_s)
{
  check_symmetric(b);
  const double k1 = 0.5 * (b[2] - b[1]);
  const double k2 = 0.5 * (b[3] - b[0]);
  if (std::abs(delta_s) > k1) throw std::invalid_argument("shift must not exceed k1");
  const double poly = k1 * k1 * k1 + 3 * k1 * k1 * k2 + 2 * k1 * k2 * k2 + k2 * k2 * k2 + 3 * delta_s * delta_s * (k1 + k2);
  return std::sqrt(8.0 / 3.0 * (k1 - k2) * (k1 - k2) * poly);
}

}  // namespace permuap
