#pragma once

#include <cstdint>
#include <random>

namespace fleetmx {

// Seeded generator whose draws are identical across standard libraries.
// std::mt19937_64 output is fully specified; the std distributions are not,
// so all variates here are derived from raw engine words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  /// Poisson variate; large means are split into chunks so the product
  /// method stays exact and cheap.
  std::uint64_t poisson(double mean);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream derived from this seed and a tag.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

 private:
  std::mt19937_64 engine_;
};

}  // namespace fleetmx
