#pragma once

#include <cstdint>

namespace huberpen {

/// SplitMix64 generator (Steele, Lea & Flood). One 64-bit word of state,
/// advanced by a fixed odd constant, so the stream is a pure function of the
/// seed. This exact stream is part of the reproducibility contract: problem
/// files and solver traces are bit-identical across runs given a seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller; consumes exactly two words.
  double next_normal();

  /// Uniform integer in [0, m) by bounded rejection: draw r, accept when
  /// r >= 2^64 mod m, return r mod m. Unbiased for every m >= 1.
  std::uint64_t next_below(std::uint64_t m);

 private:
  std::uint64_t state_;
};

}  // namespace huberpen
