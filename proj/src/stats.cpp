#include "invmine/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace invmine {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
}

}  // namespace

int cp_trials(double alpha) {
  check_alpha(alpha);
  // The slack keeps exact integer ratios from rounding up past themselves.
  const double n = std::ceil(std::log(alpha / 2.0) / std::log(1.0 - alpha) - 1e-9);
  return n < 1.0 ? 1 : static_cast<int>(n);
}

double cp_lower_bound(int n, double alpha) {
  check_alpha(alpha);
  if (n < 1) throw std::invalid_argument("need at least one trial");
  return std::pow(alpha / 2.0, 1.0 / n);
}

}  // namespace invmine
