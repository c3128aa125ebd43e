#pragma once

// Sparse functions on the (tau, n) lattice dtau*Z x Z^2. Probes at large N and
// L use these instead of dense grids: only the support is stored, and
// convolutions are exact (no aliasing, no periodization in tau).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "qnls/field.hpp"
#include "qnls/lattice.hpp"
#include "qnls/rng.hpp"

namespace qnls {

struct LatticePoint {
  std::int64_t k = 0;  // tau = k * dtau
  FreqVec n;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

inline std::uint64_t pack(const LatticePoint& p) {
  if (p.k < -(std::int64_t(1) << 31) || p.k >= (std::int64_t(1) << 31) || std::abs(p.n.n1) >= 32768 ||
      std::abs(p.n.n2) >= 32768)
    throw ValidationError("lattice point outside the packable range");
  return (std::uint64_t(p.k + (std::int64_t(1) << 31)) << 32) | (std::uint64_t(p.n.n1 + 32768) << 16) |
         std::uint64_t(p.n.n2 + 32768);
}

inline LatticePoint unpack(std::uint64_t key) {
  LatticePoint p;
  p.k = std::int64_t(key >> 32) - (std::int64_t(1) << 31);
  p.n.n1 = int((key >> 16) & 0xffff) - 32768;
  p.n.n2 = int(key & 0xffff) - 32768;
  return p;
}

class LatticeFunction {
 public:
  struct Entry {
    LatticePoint p;
    cplx v;
  };

  explicit LatticeFunction(double dtau = 1.0, TorusGeometry g = {}) : dtau_(dtau), geom_(g) {
    if (!(dtau > 0)) throw ValidationError("dtau must be positive");
  }

  double dtau() const { return dtau_; }
  const TorusGeometry& geom() const { return geom_; }
  double tau(const LatticePoint& p) const { return double(p.k) * dtau_; }
  double sigma(const LatticePoint& p) const { return tau(p) + norm_sq(p.n, geom_); }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void add(const LatticePoint& p, cplx v) {
    const auto key = pack(p);
    auto [it, fresh] = index_.try_emplace(key, entries_.size());
    if (fresh)
      entries_.push_back({p, v});
    else
      entries_[it->second].v += v;
  }

  cplx at(const LatticePoint& p) const {
    const auto it = index_.find(pack(p));
    return it == index_.end() ? cplx{} : entries_[it->second].v;
  }

  /// Applies fn(entry) -> new value to every entry.
  template <class Fn>
  LatticeFunction mapped(Fn&& fn) const {
    LatticeFunction r = *this;
    for (auto& e : r.entries_) e.v = fn(e);
    return r;
  }

  bool compatible(const LatticeFunction& o) const {
    return dtau_ == o.dtau_ && geom_.alpha1 == o.geom_.alpha1 && geom_.alpha2 == o.geom_.alpha2;
  }

 private:
  double dtau_;
  TorusGeometry geom_;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

inline void require_compatible(const LatticeFunction& a, const LatticeFunction& b) {
  if (!a.compatible(b)) throw ValidationError("lattice functions use different dtau or geometry");
}

/// (sum |v|^2 dtau)^{1/2}.
inline double l2_norm(const LatticeFunction& f) {
  double s = 0;
  for (const auto& e : f.entries()) s += std::norm(e.v);
  return std::sqrt(s * f.dtau());
}

/// Multiplies by <n>^s <tau + |n|^2>^b.
inline LatticeFunction weighted(const LatticeFunction& f, double s, double b) {
  return f.mapped([&](const LatticeFunction::Entry& e) {
    return e.v * std::pow(1.0 + norm_sq(e.p.n, f.geom()), s / 2) * std::pow(bracket(f.sigma(e.p)), b);
  });
}

inline double xsb_norm(const LatticeFunction& f, double s, double b) { return l2_norm(weighted(f, s, b)); }

/// Nonzero coefficients of a Fourier-side spacetime field; tau_k = k dtau.
inline LatticeFunction from_spacetime(const SpacetimeField& f) {
  const auto F = as_fourier(f);
  LatticeFunction r(F.window.dtau(), F.grid.geom);
  for (std::size_t it = 0; it < F.window.Mt; ++it)
    for (std::size_t ix = 0; ix < F.grid.Mx; ++ix)
      for (std::size_t iy = 0; iy < F.grid.My; ++iy) {
        const cplx v = F.at(it, ix, iy);
        if (v != cplx{}) r.add({fft::signed_freq(it, F.window.Mt), F.grid.freq(ix, iy)}, v);
      }
  return r;
}

enum class Pattern { u_vbar, u_v };

inline std::string to_string(Pattern p) { return p == Pattern::u_vbar ? "u*conj(v)" : "u*v"; }

/// Spacetime Fourier transform of u*conj(v) (or u*v) as an exact lattice
/// convolution with the (2 pi)^{-1/2} dtau factor of the transform convention.
/// Only outputs whose spatial frequency passes keep(n) are formed.
inline LatticeFunction convolve(const LatticeFunction& u, const LatticeFunction& v, Pattern pat,
                                const std::function<bool(FreqVec)>& keep = {}) {
  require_compatible(u, v);
  const double c = u.dtau() / std::sqrt(2 * std::numbers::pi);
  std::unordered_map<std::uint64_t, cplx> acc;
  acc.reserve(std::min<std::size_t>(u.size() * v.size(), 1 << 20));
  std::vector<std::uint64_t> order;
  for (const auto& a : u.entries())
    for (const auto& b : v.entries()) {
      LatticePoint q;
      cplx val;
      if (pat == Pattern::u_vbar) {
        q = {a.p.k - b.p.k, a.p.n - b.p.n};
        val = a.v * std::conj(b.v);
      } else {
        q = {a.p.k + b.p.k, a.p.n + b.p.n};
        val = a.v * b.v;
      }
      if (keep && !keep(q.n)) continue;
      const auto key = pack(q);
      auto [it, fresh] = acc.try_emplace(key, cplx{});
      if (fresh) order.push_back(key);
      it->second += c * val;
    }
  LatticeFunction out(u.dtau(), u.geom());
  for (auto key : order) out.add(unpack(key), acc[key]);
  return out;
}

// ---------------------------------------------------------------------------
// Block geometry

/// Lattice points of the spatial block P_N.
inline const std::vector<FreqVec>& spatial_block_points(std::int64_t N, const TorusGeometry& g = {}) {
  static std::mutex mu;
  static std::map<std::tuple<std::int64_t, double, double>, std::shared_ptr<std::vector<FreqVec>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{N, g.alpha1, g.alpha2}];
  if (!slot) {
    if (!is_dyadic(N)) throw ValidationError("block size must be dyadic");
    slot = std::make_shared<std::vector<FreqVec>>();
    const int R1 = int(std::ceil(double(N) * g.alpha1)) + 1, R2 = int(std::ceil(double(N) * g.alpha2)) + 1;
    for (int a = -R1; a <= R1; ++a)
      for (int b = -R2; b <= R2; ++b)
        if (dyadic_block_of({a, b}, g) == N) slot->push_back({a, b});
  }
  return *slot;
}

/// Integer k with k*dtau + |n|^2 in the modulation block L, as at most two ranges.
inline std::vector<std::pair<std::int64_t, std::int64_t>> modulation_k_ranges(FreqVec n, std::int64_t L,
                                                                             double dtau,
                                                                             const TorusGeometry& g = {}) {
  const double ns = norm_sq(n, g);
  auto in = [&](std::int64_t k) { return modulation_block_of(double(k) * dtau, n, g) == L; };
  std::vector<std::pair<double, double>> bands;
  if (L == 1)
    bands = {{-1.0, 1.0}};
  else
    bands = {{-double(L), -double(L) / 2}, {double(L) / 2, double(L)}};
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (auto [lo, hi] : bands) {
    auto a = std::int64_t(std::floor((lo - ns) / dtau)) - 2;
    auto b = std::int64_t(std::ceil((hi - ns) / dtau)) + 2;
    while (a <= b && !in(a)) ++a;
    while (b >= a && !in(b)) --b;
    if (a <= b) out.push_back({a, b});
  }
  return out;
}

/// Cumulative point counts of P_N ∩ S_L, for weighted sampling over n.
struct BlockTable {
  std::int64_t N = 1, L = 1;
  double dtau = 1;
  TorusGeometry geom;
  std::vector<FreqVec> ns;
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> ranges;
  std::vector<std::int64_t> cumulative;  // cumulative[i] = points with n index < i+1

  std::int64_t total() const { return cumulative.empty() ? 0 : cumulative.back(); }

  LatticePoint point(std::int64_t idx) const {
    const auto i = std::size_t(std::upper_bound(cumulative.begin(), cumulative.end(), idx) - cumulative.begin());
    std::int64_t off = idx - (i == 0 ? 0 : cumulative[i - 1]);
    for (auto [a, b] : ranges[i]) {
      if (off <= b - a) return {a + off, ns[i]};
      off -= b - a + 1;
    }
    throw std::logic_error("block table index out of range");
  }
};

inline std::shared_ptr<const BlockTable> block_table(std::int64_t N, std::int64_t L, double dtau,
                                                     const TorusGeometry& g = {}) {
  static std::mutex mu;
  static std::map<std::tuple<std::int64_t, std::int64_t, double, double, double>, std::shared_ptr<BlockTable>> cache;
  if (!is_dyadic(N) || !is_dyadic(L)) throw ValidationError("block sizes must be dyadic");
  const auto& pts = spatial_block_points(N, g);
  std::lock_guard lock(mu);
  auto& slot = cache[{N, L, dtau, g.alpha1, g.alpha2}];
  if (!slot) {
    auto t = std::make_shared<BlockTable>();
    t->N = N, t->L = L, t->dtau = dtau, t->geom = g;
    std::int64_t run = 0;
    for (auto n : pts) {
      auto r = modulation_k_ranges(n, L, dtau, g);
      std::int64_t c = 0;
      for (auto [a, b] : r) c += b - a + 1;
      if (c == 0) continue;
      run += c;
      t->ns.push_back(n);
      t->ranges.push_back(std::move(r));
      t->cumulative.push_back(run);
    }
    slot = t;
  }
  return slot;
}

/// Independent complex Gaussians on P_N ∩ S_L, or on `budget` distinct points
/// drawn uniformly from it when the block is larger.
inline LatticeFunction gaussian_block(std::int64_t N, std::int64_t L, double dtau, Rng& rng,
                                      std::size_t budget, const TorusGeometry& g = {}) {
  const auto t = block_table(N, L, dtau, g);
  if (t->total() == 0) throw ValidationError("block contains no lattice points");
  LatticeFunction f(dtau, g);
  if (std::size_t(t->total()) <= budget) {
    for (std::int64_t i = 0; i < t->total(); ++i) f.add(t->point(i), rng.complex_normal());
    return f;
  }
  while (f.size() < budget) {
    const auto p = t->point(rng.integer(0, t->total() - 1));
    if (f.at(p) == cplx{}) f.add(p, rng.complex_normal());
  }
  return f;
}

/// Constant amplitude on the points of P_N ∩ S_L whose spatial frequency lies
/// in the disc of radius r about c, keeping at most `budget` points.
inline LatticeFunction flat_cap(std::int64_t N, std::int64_t L, double dtau, FreqVec c, double r,
                                std::size_t budget, const TorusGeometry& g = {}) {
  const auto t = block_table(N, L, dtau, g);
  LatticeFunction f(dtau, g);
  for (std::size_t i = 0; i < t->ns.size() && f.size() < budget; ++i) {
    const FreqVec d = t->ns[i] - c;
    if (double(norm_sq_int(d)) > r * r) continue;
    for (auto [a, b] : t->ranges[i])
      for (auto k = a; k <= b && f.size() < budget; ++k) f.add({k, t->ns[i]}, 1.0);
  }
  return f;
}

/// Checks that every point lies in P_N ∩ S_L.
inline bool supported_in(const LatticeFunction& f, std::int64_t N, std::int64_t L) {
  for (const auto& e : f.entries())
    if (dyadic_block_of(e.p.n, f.geom()) != N || modulation_block_of(f.tau(e.p), e.p.n, f.geom()) != L)
      return false;
  return true;
}

}  // namespace qnls
