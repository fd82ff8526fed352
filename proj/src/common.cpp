#include <cmath>
#include <numbers>

#include "fleetmx/error.hpp"
#include "fleetmx/rng.hpp"

namespace fleetmx {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid_argument";
    case ErrorCategory::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumeric: return "numeric";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return 3;
    case ErrorCategory::kDimensionMismatch: return 4;
    case ErrorCategory::kIo: return 5;
    case ErrorCategory::kParse: return 6;
    case ErrorCategory::kData: return 7;
    case ErrorCategory::kNumeric: return 8;
  }
  return 1;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  constexpr double kChunk = 20.0;
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double lambda = remaining > kChunk ? kChunk : remaining;
    remaining -= lambda;
    const double threshold = std::exp(-lambda);
    double product = uniform();
    while (product > threshold) {
      ++total;
      product *= uniform();
    }
  }
  return total;
}

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace fleetmx
