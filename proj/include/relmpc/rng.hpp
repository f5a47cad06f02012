#pragma once

// Seeded PRNG for the simulation harness. Gaussian draws are generated with
// an explicit Box-Muller transform on top of mt19937_64 so a (seed, call
// sequence) pair produces the same stream on every platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace relmpc {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in (0, 1]; never returns 0 so log() is safe.
  double uniform01() {
    const std::uint64_t bits = engine_() >> 11;  // 53 random bits
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Zero-mean Gaussian draw, one value per call (no pair caching).
  double gaussian(double stddev = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return stddev * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t raw() { return engine_(); }

  /// Stream for run k of a multi-run study, decorrelated from the base seed.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace relmpc
