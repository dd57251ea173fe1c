#include "permuap/constructive.hpp"

#include <sstream>

namespace permuap {

WidthCapExceeded::WidthCapExceeded(std::size_t required_, std::size_t cap_)
  : std::runtime_error("required width " + std::to_string(required_) + " exceeds cap " + std::to_string(cap_)),
    required(required_), cap(cap_)
{
}

void measure(Construction &c, const ScalarFunction &f, std::size_t eval_points)
{
  const auto grid     = eval_grid(c.net, uniform_grid(c.net.domain.lo[0], c.net.domain.hi[0], eval_points));
  c.ledger.budget.measured = sup_error(grid, f);
}

void map_to_domain(Construction &c, double lo, double hi)
{
  if (!(hi > lo)) throw std::invalid_argument("domain must have hi > lo");
  const double width = hi - lo;
  for (auto &bf : c.net.basis) bf.location = lo + width * bf.location;
  c.net.gamma /= width;
  c.net.domain    = Box::interval(lo, hi);
  c.ledger.gamma  = c.net.gamma;
  std::ostringstream os;
  os.precision(17);
  os << "x = " << lo << " + " << width << " t; locations mapped, gamma divided by " << width;
  c.ledger.domain_map = os.str();
  if (c.ledger.builder == "theorem2" && width != 1.0)
    c.ledger.notes.push_back("gamma is 1/width on the mapped domain; alpha stays 0");
}

}  // namespace permuap
