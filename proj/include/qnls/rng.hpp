#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace qnls {

/// splitmix64 finalizer; derives independent stream seeds from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix_seed(seed)) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }

  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }

  double normal() { return normal_(eng_); }

  /// Standard complex Gaussian: E|z|^2 = 1.
  std::complex<double> complex_normal() {
    constexpr double s = 0.70710678118654752440;
    const double re = normal_(eng_);
    const double im = normal_(eng_);
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qnls
