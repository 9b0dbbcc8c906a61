#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace vrgrad {

// Deterministic random source. std::mt19937_64 output is pinned down by the
// standard, and the conversions below avoid the implementation-defined
// std::*_distribution classes, so a seed produces the same stream on every
// platform and compiler. Copying an Rng copies the full stream state,
// including the cached Box-Muller value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) from the top 53 bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}; rejection keeps the draw exactly unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
    std::uint64_t r = next_u64();
    if (rem != 0) {
      const std::uint64_t limit = max - rem;
      while (r > limit) r = next_u64();
    }
    return r % n;
  }

  // Standard normal via Box-Muller. Draws come in pairs; the second value is
  // cached so consecutive calls consume two uniforms every other call.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace vrgrad
