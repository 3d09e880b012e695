#include "driftlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace driftlab {

double Rng::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace driftlab
