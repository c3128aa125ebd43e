#pragma once

// Radix-2 complex FFT with cached plans and strided multi-dimensional helpers.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "qnls/lattice.hpp"

namespace qnls::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n), rev_(n), tw_(n / 2) {
    if (!is_pow2(n)) throw ValidationError("FFT length must be a power of two");
    std::size_t bits = 0;
    while ((std::size_t(1) << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (bits - 1 - b);
      rev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * double(k) / double(n);
      tw_[k] = {std::cos(a), std::sin(a)};
    }
  }

  std::size_t size() const { return n_; }

  /// Unnormalized transform; forward uses exp(-2 pi i jk/n).
  void execute(std::span<cplx> a, bool inverse) const {
    const std::size_t n = n_;
    for (std::size_t i = 0; i < n; ++i)
      if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2, step = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t j = 0; j < half; ++j) {
          cplx w = tw_[j * step];
          if (inverse) w = std::conj(w);
          const cplx u = a[i + j];
          const cplx v = a[i + j + half] * w;
          a[i + j] = u + v;
          a[i + j + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<cplx> tw_;
};

/// Shared read-only plan for length n.
inline std::shared_ptr<const Plan> plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
  std::lock_guard lock(mu);
  auto& p = cache[n];
  if (!p) p = std::make_shared<const Plan>(n);
  return p;
}

/// In-place transform along one axis of a row-major array with the given extents.
inline void transform_axis(std::vector<cplx>& data, const std::vector<std::size_t>& extents,
                           std::size_t axis, bool inverse) {
  const std::size_t n = extents[axis];
  if (n == 1) return;
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < extents.size(); ++d) inner *= extents[d];
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= extents[d];
  const auto p = plan(n);
  std::vector<cplx> line(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      if (inner == 1) {
        p->execute(std::span<cplx>(data.data() + base, n), inverse);
        continue;
      }
      for (std::size_t k = 0; k < n; ++k) line[k] = data[base + k * inner];
      p->execute(line, inverse);
      for (std::size_t k = 0; k < n; ++k) data[base + k * inner] = line[k];
    }
  }
}

/// Unnormalized transform over every axis.
inline void transform_all(std::vector<cplx>& data, const std::vector<std::size_t>& extents,
                          bool inverse) {
  for (std::size_t a = 0; a < extents.size(); ++a) transform_axis(data, extents, a, inverse);
}

/// Signed frequency of FFT bin i for length m: i for i < m/2, i - m otherwise.
inline int signed_freq(std::size_t i, std::size_t m) {
  return i < m / 2 ? int(i) : int(i) - int(m);
}

/// Bin index of signed frequency k (must satisfy -m/2 <= k < m/2).
inline std::size_t bin_of(int k, std::size_t m) {
  return k >= 0 ? std::size_t(k) : std::size_t(int(m) + k);
}

}  // namespace qnls::fft
