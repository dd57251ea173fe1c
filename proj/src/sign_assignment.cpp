#include "permuap/constructive.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace permuap {

std::vector<int> sign_assignment(const std::vector<double> &c)
{
  if (c.size() % 2 != 0) throw std::invalid_argument("sign assignment needs an even number of values");
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });

  // pair adjacent elements of the descending order, then alternate signs over
  // the pair differences sorted in descending order
  const std::size_t pairs = c.size() / 2;
  std::vector<std::size_t> by_diff(pairs);
  std::iota(by_diff.begin(), by_diff.end(), 0);
  auto diff = [&](std::size_t j) { return c[order[2 * j]] - c[order[2 * j + 1]]; };
  std::stable_sort(by_diff.begin(), by_diff.end(), [&](std::size_t a, std::size_t b) { return diff(a) > diff(b); });

  std::vector<int> m(c.size(), 1);
  for (std::size_t rank = 0; rank < pairs; ++rank) {
    const std::size_t j  = by_diff[rank];
    const int lambda     = rank % 2 == 0 ? 1 : -1;
    m[order[2 * j]]      = lambda;
    m[order[2 * j + 1]]  = -lambda;
  }
  return m;
}

double largest_adjacent_gap(std::vector<double> c)
{
  std::sort(c.begin(), c.end());
  double gap = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) gap = std::max(gap, c[i] - c[i - 1]);
  return gap;
}

double nearest_neighbour_gap(const std::vector<double> &c)
{
  if (c.size() < 2) return 0.0;
  std::vector<double> s(c);
  std::sort(s.begin(), s.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    if (i > 0) nearest = std::min(nearest, s[i] - s[i - 1]);
    if (i + 1 < s.size()) nearest = std::min(nearest, s[i + 1] - s[i]);
    worst = std::max(worst, nearest);
  }
  return worst;
}

Annihilation annihilate_remainder(const std::vector<double> &magnitudes, const std::vector<double> &locations,
                                  double target_slope)
{
  if (magnitudes.size() != locations.size()) throw std::invalid_argument("magnitudes and locations differ in length");
  Annihilation out;
  const std::size_t k = magnitudes.size();
  out.signs.assign(k, 1);
  if (k == 0) {
    out.bound = std::abs(target_slope);
    out.slope = 0.0;
    return out;
  }

  std::vector<std::size_t> active(k);
  std::iota(active.begin(), active.end(), 0);
  double target = target_slope;
  if (k % 2 != 0) {
    const auto it = std::min_element(magnitudes.begin(), magnitudes.end());
    const auto r  = static_cast<std::size_t>(it - magnitudes.begin());
    out.retired   = r;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(r));
    target -= magnitudes[r];
  }

  std::vector<double> c;
  c.reserve(active.size() + 2);
  for (auto i : active) c.push_back(magnitudes[i]);
  const bool phantom = target != 0.0;
  if (phantom) {
    // a phantom element |target| forced to sign -sign(target) steers the real sum to target
    c.push_back(std::abs(target));
    c.push_back(0.0);
  }
  std::vector<int> m = sign_assignment(c);
  if (phantom) {
    const int want = target > 0 ? -1 : 1;
    if (m[active.size()] != want)
      for (auto &s : m) s = -s;
  }
  for (std::size_t a = 0; a < active.size(); ++a) out.signs[active[a]] = m[a];
  out.bound = largest_adjacent_gap(c);

  long double slope = 0.0L, intercept = 0.0L;
  for (std::size_t i = 0; i < k; ++i) {
    slope += static_cast<long double>(out.signs[i]) * magnitudes[i];
    intercept -= static_cast<long double>(out.signs[i]) * magnitudes[i] * locations[i];
  }
  out.slope     = static_cast<double>(slope);
  out.intercept = static_cast<double>(intercept);
  out.c_eta     = -out.intercept;
  return out;
}

}  // namespace permuap
