#include "huberpen/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace huberpen {

double SplitMix64::next_normal() {
  // u1 in (0, 1] keeps the log finite; draw order (u1, u2) is fixed.
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::next_below(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("next_below: m must be positive");
  const std::uint64_t threshold = (0 - m) % m;  // 2^64 mod m
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % m;
  }
}

}  // namespace huberpen
