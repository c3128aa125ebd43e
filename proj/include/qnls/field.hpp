#pragma once

// Discrete fields on the torus and on (time window x torus) grids.
//
// Conventions:
//  * physical space is [0, 2pi)^2 with normalized measure, so a unit-modulus
//    plane wave has unit L^2 norm;
//  * spatial coefficients are c(n) = mean_x u(x) e^{-i n.x};
//  * the time window is [-Twin/2, Twin/2) sampled at Mt points and periodized;
//    its dual lattice is tau_k = k * dtau with dtau = 2 pi / Twin;
//  * the spacetime transform is u^(tau, n) = (2 pi)^(-1/2) int u e^{-i tau t} dt,
//    discretized so that sum_k |u^|^2 dtau equals the (dt x dx) quadrature of |u|^2.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qnls/fft.hpp"
#include "qnls/lattice.hpp"
#include "qnls/rng.hpp"

namespace qnls {

using cplx = std::complex<double>;

struct SpaceGrid {
  std::size_t Mx = 16;
  std::size_t My = 16;
  TorusGeometry geom{};

  SpaceGrid() = default;
  SpaceGrid(std::size_t mx, std::size_t my, TorusGeometry g = {}) : Mx(mx), My(my), geom(g) {
    if (!fft::is_pow2(mx) || !fft::is_pow2(my) || mx < 2 || my < 2)
      throw ValidationError("spatial grid sizes must be powers of two >= 2");
  }

  std::size_t size() const { return Mx * My; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return ix * My + iy; }

  FreqVec freq(std::size_t ix, std::size_t iy) const {
    return {fft::signed_freq(ix, Mx), fft::signed_freq(iy, My)};
  }

  bool representable(FreqVec n) const {
    return n.n1 >= -int(Mx / 2) && n.n1 < int(Mx / 2) && n.n2 >= -int(My / 2) && n.n2 < int(My / 2);
  }

  std::size_t index_of(FreqVec n) const {
    return index(fft::bin_of(n.n1, Mx), fft::bin_of(n.n2, My));
  }

  /// 2/3-rule retained band: |k| <= K with 3K < M.
  int dealias_cut_x() const { return int((Mx - 1) / 3); }
  int dealias_cut_y() const { return int((My - 1) / 3); }
  bool retained(FreqVec n) const {
    return std::abs(n.n1) <= dealias_cut_x() && std::abs(n.n2) <= dealias_cut_y();
  }

  friend bool operator==(const SpaceGrid& a, const SpaceGrid& b) {
    return a.Mx == b.Mx && a.My == b.My && a.geom.alpha1 == b.geom.alpha1 &&
           a.geom.alpha2 == b.geom.alpha2;
  }
};

struct TimeWindow {
  double Twin = 4.0;
  std::size_t Mt = 64;

  TimeWindow() = default;
  TimeWindow(double twin, std::size_t mt) : Twin(twin), Mt(mt) {
    if (!(twin > 0)) throw ValidationError("time window length must be positive");
    if (!fft::is_pow2(mt) || mt < 2) throw ValidationError("time samples must be a power of two >= 2");
  }

  double dt() const { return Twin / double(Mt); }
  double dtau() const { return 2 * std::numbers::pi / Twin; }
  double time(std::size_t j) const { return -Twin / 2 + double(j) * dt(); }
  double tau(std::size_t i) const { return fft::signed_freq(i, Mt) * dtau(); }
  double tau_max() const { return (double(Mt / 2) - 1) * dtau(); }
  double tau_min() const { return -double(Mt / 2) * dtau(); }

  friend bool operator==(const TimeWindow& a, const TimeWindow& b) {
    return a.Twin == b.Twin && a.Mt == b.Mt;
  }
};

// ---------------------------------------------------------------------------
// Spatial fields

/// Values of a function on the spatial grid (physical representation).
struct SpatialField {
  SpaceGrid grid;
  std::vector<cplx> values;

  SpatialField() = default;
  explicit SpatialField(SpaceGrid g) : grid(g), values(g.size(), cplx{}) {}
  SpatialField(SpaceGrid g, cplx c) : grid(g), values(g.size(), c) {}

  double x(std::size_t ix) const { return 2 * std::numbers::pi * double(ix) / double(grid.Mx); }
  double y(std::size_t iy) const { return 2 * std::numbers::pi * double(iy) / double(grid.My); }

  cplx mean() const {
    cplx s{};
    for (auto v : values) s += v;
    return s / double(values.size());
  }
};

/// Normalized Fourier coefficients c(n) in FFT bin order.
inline std::vector<cplx> spatial_modes(const SpatialField& f) {
  std::vector<cplx> c = f.values;
  fft::transform_all(c, {f.grid.Mx, f.grid.My}, false);
  const double s = 1.0 / double(f.grid.size());
  for (auto& v : c) v *= s;
  return c;
}

inline SpatialField from_modes(const SpaceGrid& g, std::vector<cplx> modes) {
  if (modes.size() != g.size()) throw ValidationError("mode array does not match grid");
  fft::transform_all(modes, {g.Mx, g.My}, true);
  SpatialField f(g);
  f.values = std::move(modes);
  return f;
}

inline SpatialField plane_wave(const SpaceGrid& g, FreqVec n, cplx amp = 1.0) {
  SpatialField f(g);
  for (std::size_t ix = 0; ix < g.Mx; ++ix)
    for (std::size_t iy = 0; iy < g.My; ++iy)
      f.values[g.index(ix, iy)] = amp * std::exp(cplx(0, n.n1 * f.x(ix) + n.n2 * f.y(iy)));
  return f;
}

inline double l2_norm(const SpatialField& f) {
  double s = 0;
  for (auto v : f.values) s += std::norm(v);
  return std::sqrt(s / double(f.values.size()));
}

inline double sup_norm(const SpatialField& f) {
  double s = 0;
  for (auto v : f.values) s = std::max(s, std::abs(v));
  return s;
}

/// (sum <n>^{2s} |c(n)|^2)^{1/2}.
inline double hs_norm(const SpatialField& f, double s) {
  const auto c = spatial_modes(f);
  double acc = 0;
  for (std::size_t ix = 0; ix < f.grid.Mx; ++ix)
    for (std::size_t iy = 0; iy < f.grid.My; ++iy) {
      const auto i = f.grid.index(ix, iy);
      acc += std::pow(1.0 + norm_sq(f.grid.freq(ix, iy), f.grid.geom), s) * std::norm(c[i]);
    }
  return std::sqrt(acc);
}

inline SpatialField operator-(const SpatialField& a, const SpatialField& b) {
  SpatialField r = a;
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
  return r;
}

/// e^{it Delta} phi: mode n multiplied by e^{-i t |n|^2_alpha}.
inline SpatialField free_propagate(const SpatialField& phi, double t) {
  auto c = spatial_modes(phi);
  const auto& g = phi.grid;
  for (std::size_t ix = 0; ix < g.Mx; ++ix)
    for (std::size_t iy = 0; iy < g.My; ++iy)
      c[g.index(ix, iy)] *= std::exp(cplx(0, -t * norm_sq(g.freq(ix, iy), g.geom)));
  return from_modes(g, std::move(c));
}

/// Zeroes the modes outside the 2/3-rule band.
inline SpatialField dealias(const SpatialField& f) {
  auto c = spatial_modes(f);
  for (std::size_t ix = 0; ix < f.grid.Mx; ++ix)
    for (std::size_t iy = 0; iy < f.grid.My; ++iy)
      if (!f.grid.retained(f.grid.freq(ix, iy))) c[f.grid.index(ix, iy)] = 0;
  return from_modes(f.grid, std::move(c));
}

/// Random data with Gaussian modes in |n|_inf <= band, decaying like <n>^{-decay},
/// rescaled to the requested H^s norm.
inline SpatialField gaussian_data(const SpaceGrid& g, std::uint64_t seed, double s, double hsTarget,
                                  int band, double decay = 1.0) {
  Rng rng(seed);
  std::vector<cplx> c(g.size(), cplx{});
  for (std::size_t ix = 0; ix < g.Mx; ++ix)
    for (std::size_t iy = 0; iy < g.My; ++iy) {
      const FreqVec n = g.freq(ix, iy);
      if (std::abs(n.n1) > band || std::abs(n.n2) > band) continue;
      c[g.index(ix, iy)] = rng.complex_normal() * std::pow(1.0 + norm_sq(n, g.geom), -decay / 2);
    }
  auto f = from_modes(g, std::move(c));
  const double h = hs_norm(f, s);
  if (h > 0)
    for (auto& v : f.values) v *= hsTarget / h;
  return f;
}

// ---------------------------------------------------------------------------
// Spacetime fields

enum class Rep : std::uint8_t { physical = 0, fourier = 1 };

struct XsbParams {
  double s = 0.0;
  double b = 0.0;
};

/// Coefficients indexed (time-or-tau, x-or-n1, y-or-n2), row-major.
struct SpacetimeField {
  SpaceGrid grid;
  TimeWindow window;
  std::vector<cplx> coeffs;
  Rep rep = Rep::physical;

  SpacetimeField() = default;
  SpacetimeField(SpaceGrid g, TimeWindow w, Rep r = Rep::physical)
      : grid(g), window(w), coeffs(w.Mt * g.size(), cplx{}), rep(r) {}

  std::size_t index(std::size_t it, std::size_t ix, std::size_t iy) const {
    return (it * grid.Mx + ix) * grid.My + iy;
  }
  cplx& at(std::size_t it, std::size_t ix, std::size_t iy) { return coeffs[index(it, ix, iy)]; }
  cplx at(std::size_t it, std::size_t ix, std::size_t iy) const { return coeffs[index(it, ix, iy)]; }

  std::vector<std::size_t> extents() const { return {window.Mt, grid.Mx, grid.My}; }

  bool same_shape(const SpacetimeField& o) const { return grid == o.grid && window == o.window; }
};

inline void require_same_shape(const SpacetimeField& a, const SpacetimeField& b) {
  if (!a.same_shape(b)) throw ValidationError("fields live on different grids or windows");
}

inline SpacetimeField to_fourier(SpacetimeField f) {
  if (f.rep == Rep::fourier) throw ValidationError("field is already in Fourier representation");
  if (f.coeffs.size() != f.window.Mt * f.grid.size()) throw ValidationError("coefficient array size mismatch");
  fft::transform_all(f.coeffs, f.extents(), false);
  const double scale = f.window.dt() / std::sqrt(2 * std::numbers::pi) / double(f.grid.size());
  const std::size_t slice = f.grid.size();
  for (std::size_t it = 0; it < f.window.Mt; ++it) {
    // e^{-i tau_k t_0} with t_0 = -Twin/2 gives (-1)^k
    const double sgn = (fft::signed_freq(it, f.window.Mt) % 2 == 0) ? scale : -scale;
    for (std::size_t j = 0; j < slice; ++j) f.coeffs[it * slice + j] *= sgn;
  }
  f.rep = Rep::fourier;
  return f;
}

inline SpacetimeField to_physical(SpacetimeField f) {
  if (f.rep == Rep::physical) throw ValidationError("field is already in physical representation");
  if (f.coeffs.size() != f.window.Mt * f.grid.size()) throw ValidationError("coefficient array size mismatch");
  const double scale = f.window.dtau() / std::sqrt(2 * std::numbers::pi);
  const std::size_t slice = f.grid.size();
  for (std::size_t it = 0; it < f.window.Mt; ++it) {
    const double sgn = (fft::signed_freq(it, f.window.Mt) % 2 == 0) ? scale : -scale;
    for (std::size_t j = 0; j < slice; ++j) f.coeffs[it * slice + j] *= sgn;
  }
  fft::transform_all(f.coeffs, f.extents(), true);
  f.rep = Rep::physical;
  return f;
}

inline SpacetimeField as_fourier(const SpacetimeField& f) {
  return f.rep == Rep::fourier ? f : to_fourier(f);
}
inline SpacetimeField as_physical(const SpacetimeField& f) {
  return f.rep == Rep::physical ? f : to_physical(f);
}

/// Quadrature L^2 norm over the whole window (either representation).
inline double l2_norm(const SpacetimeField& f) {
  double s = 0;
  for (auto v : f.coeffs) s += std::norm(v);
  if (f.rep == Rep::fourier) return std::sqrt(s * f.window.dtau());
  return std::sqrt(s * f.window.dt() / double(f.grid.size()));
}

inline SpacetimeField constant_field(SpaceGrid g, TimeWindow w, cplx c) {
  SpacetimeField f(g, w);
  std::fill(f.coeffs.begin(), f.coeffs.end(), c);
  return f;
}

/// u(t_j) = e^{i t_j Delta} phi at every window sample.
inline SpacetimeField free_evolution_field(const SpatialField& phi, TimeWindow w) {
  SpacetimeField f(phi.grid, w);
  const auto c = spatial_modes(phi);
  const auto& g = phi.grid;
  std::vector<cplx> slice(g.size());
  for (std::size_t it = 0; it < w.Mt; ++it) {
    const double t = w.time(it);
    for (std::size_t ix = 0; ix < g.Mx; ++ix)
      for (std::size_t iy = 0; iy < g.My; ++iy) {
        const auto i = g.index(ix, iy);
        slice[i] = c[i] * std::exp(cplx(0, -t * norm_sq(g.freq(ix, iy), g.geom)));
      }
    auto phys = slice;
    fft::transform_all(phys, {g.Mx, g.My}, true);
    std::copy(phys.begin(), phys.end(), f.coeffs.begin() + std::ptrdiff_t(it * g.size()));
  }
  return f;
}

/// Physical time slice j as a spatial field.
inline SpatialField time_slice(const SpacetimeField& f, std::size_t j) {
  const auto p = as_physical(f);
  SpatialField s(p.grid);
  std::copy(p.coeffs.begin() + std::ptrdiff_t(j * p.grid.size()),
            p.coeffs.begin() + std::ptrdiff_t((j + 1) * p.grid.size()), s.values.begin());
  return s;
}

/// Weighted norm (sum_n sum_k <n>^{2s} <tau_k + |n|^2>^{2b} |u^|^2 dtau)^{1/2}.
inline double xsb_norm(const SpacetimeField& f, XsbParams p) {
  const auto F = as_fourier(f);
  const auto& g = F.grid;
  double acc = 0;
  for (std::size_t it = 0; it < F.window.Mt; ++it) {
    const double tau = F.window.tau(it);
    for (std::size_t ix = 0; ix < g.Mx; ++ix)
      for (std::size_t iy = 0; iy < g.My; ++iy) {
        const cplx v = F.at(it, ix, iy);
        if (v == cplx{}) continue;
        const double ns = norm_sq(g.freq(ix, iy), g.geom);
        const double sig = tau + ns;
        acc += std::pow(1.0 + ns, p.s) * std::pow(1.0 + sig * sig, p.b) * std::norm(v);
      }
  }
  return std::sqrt(acc * F.window.dtau());
}

struct CutoffProfile {
  enum class Shape { smooth_bump, cosine_taper };
  Shape shape = Shape::smooth_bump;
  double T = 1.0;

  /// Equals 1 on [-T, T] and vanishes outside (-2T, 2T).
  double operator()(double t) const {
    const double a = std::abs(t);
    if (a <= T) return 1.0;
    if (a >= 2 * T) return 0.0;
    const double y = (2 * T - a) / T;  // in (0,1), 1 at |t| = T
    if (shape == Shape::cosine_taper) return 0.5 * (1.0 - std::cos(std::numbers::pi * y));
    auto f = [](double z) { return z > 0 ? std::exp(-1.0 / z) : 0.0; };
    return f(y) / (f(y) + f(1.0 - y));
  }
};

inline std::string to_string(CutoffProfile::Shape s) {
  return s == CutoffProfile::Shape::smooth_bump ? "smooth-bump" : "cosine-taper";
}

/// Multiplies every time slice by eta(t).
inline SpacetimeField apply_cutoff(const SpacetimeField& f, const CutoffProfile& eta) {
  auto p = as_physical(f);
  const std::size_t slice = p.grid.size();
  for (std::size_t it = 0; it < p.window.Mt; ++it) {
    const double e = eta(p.window.time(it));
    for (std::size_t j = 0; j < slice; ++j) p.coeffs[it * slice + j] *= e;
  }
  return p;
}

/// X^{s,b} norm of the extension f * eta: an upper bound for the X^{s,b}_T restriction norm.
inline double xsb_restriction_norm_ub(const SpacetimeField& f, XsbParams p, double T,
                                      CutoffProfile::Shape shape = CutoffProfile::Shape::smooth_bump) {
  if (!(T > 0) || T > f.window.Twin / 4 + 1e-12)
    throw ValidationError("restriction time must satisfy 0 < T <= Twin/4");
  return xsb_norm(apply_cutoff(f, CutoffProfile{shape, T}), p);
}

/// Quadrature L^p norm over [a, b) x T^2 (rectangle rule on the window samples).
inline double lp_spacetime_norm(const SpacetimeField& f, double p, double a = 0.0, double b = 1.0) {
  if (p != 2.0 && p != 3.0 && p != 4.0) throw ValidationError("L^p norm supported for p in {2,3,4}");
  const auto& w = f.window;
  if (a < w.time(0) - 1e-12 || b > w.time(0) + w.Twin + 1e-12 || !(b > a))
    throw ValidationError("L^p interval must lie inside the time window");
  const auto P = as_physical(f);
  const std::size_t slice = P.grid.size();
  const double tol = 1e-9 * w.dt();
  double acc = 0;
  for (std::size_t it = 0; it < w.Mt; ++it) {
    const double t = w.time(it);
    if (t < a - tol || t >= b - tol) continue;
    double s = 0;
    for (std::size_t j = 0; j < slice; ++j) s += std::pow(std::abs(P.coeffs[it * slice + j]), p);
    acc += s / double(slice) * w.dt();
  }
  return std::pow(acc, 1.0 / p);
}

/// Points of the (tau, n) grid lying in P_N ∩ S_L.
inline std::vector<std::size_t> block_indices(const SpaceGrid& g, const TimeWindow& w, std::int64_t N,
                                              std::int64_t L) {
  std::vector<std::size_t> out;
  for (std::size_t it = 0; it < w.Mt; ++it)
    for (std::size_t ix = 0; ix < g.Mx; ++ix)
      for (std::size_t iy = 0; iy < g.My; ++iy) {
        const FreqVec n = g.freq(ix, iy);
        if (dyadic_block_of(n, g.geom) != N) continue;
        if (modulation_block_of(w.tau(it), n, g.geom) != L) continue;
        out.push_back((it * g.Mx + ix) * g.My + iy);
      }
  return out;
}

/// Independent standard complex Gaussians on the grid points of P_N ∩ S_L.
inline SpacetimeField random_block_field(const SpaceGrid& g, const TimeWindow& w, std::int64_t N,
                                         std::int64_t L, std::uint64_t seed) {
  if (!is_dyadic(N) || !is_dyadic(L)) throw ValidationError("block sizes must be dyadic");
  const double rmax = double(N);
  const double kx = rmax * g.geom.alpha1, ky = rmax * g.geom.alpha2;
  if (kx > double(g.Mx / 2) - 1 || ky > double(g.My / 2) - 1)
    throw ValidationError("spatial block N=" + std::to_string(N) + " exceeds the grid");
  const double nsMax = double(N) * double(N);
  if (-nsMax - double(L) < w.tau_min() || double(L) > w.tau_max())
    throw ValidationError("modulation block L=" + std::to_string(L) + " exceeds the tau range of the window");
  const auto idx = block_indices(g, w, N, L);
  if (idx.empty())
    throw ValidationError("block (N=" + std::to_string(N) + ", L=" + std::to_string(L) +
                          ") contains no grid points; refine the window");
  SpacetimeField f(g, w, Rep::fourier);
  Rng rng(seed);
  for (auto i : idx) f.coeffs[i] = rng.complex_normal();
  return f;
}

/// Pointwise product with optional conjugations, 2/3-rule dealiased in space.
inline SpacetimeField product_field(const SpacetimeField& u, const SpacetimeField& v, bool conjU,
                                    bool conjV) {
  require_same_shape(u, v);
  const auto& g = u.grid;
  auto truncate = [&](SpacetimeField f) {
    // spatial transform per time slice is enough; work in (t, n)
    f = as_physical(f);
    fft::transform_axis(f.coeffs, f.extents(), 1, false);
    fft::transform_axis(f.coeffs, f.extents(), 2, false);
    for (std::size_t it = 0; it < f.window.Mt; ++it)
      for (std::size_t ix = 0; ix < g.Mx; ++ix)
        for (std::size_t iy = 0; iy < g.My; ++iy)
          if (!g.retained(g.freq(ix, iy))) f.at(it, ix, iy) = 0;
    fft::transform_axis(f.coeffs, f.extents(), 1, true);
    fft::transform_axis(f.coeffs, f.extents(), 2, true);
    const double s = 1.0 / double(g.size());
    for (auto& c : f.coeffs) c *= s;
    return f;
  };
  auto a = truncate(u);
  const auto b = truncate(v);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
    const cplx x = conjU ? std::conj(a.coeffs[i]) : a.coeffs[i];
    const cplx y = conjV ? std::conj(b.coeffs[i]) : b.coeffs[i];
    a.coeffs[i] = x * y;
  }
  return truncate(a);
}

inline SpacetimeField operator-(const SpacetimeField& a, const SpacetimeField& b) {
  require_same_shape(a, b);
  auto x = as_physical(a);
  const auto y = as_physical(b);
  for (std::size_t i = 0; i < x.coeffs.size(); ++i) x.coeffs[i] -= y.coeffs[i];
  return x;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated field snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}
inline double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}
}  // namespace detail

/// Flat little-endian snapshot: u64 Mx, My, Mt; f64 Twin, alpha1, alpha2; u8 rep;
/// then Mt*Mx*My (re, im) f64 pairs in row-major (t, x, y) order.
inline void write_binary(std::ostream& os, const SpacetimeField& f) {
  detail::put_u64(os, f.grid.Mx);
  detail::put_u64(os, f.grid.My);
  detail::put_u64(os, f.window.Mt);
  detail::put_f64(os, f.window.Twin);
  detail::put_f64(os, f.grid.geom.alpha1);
  detail::put_f64(os, f.grid.geom.alpha2);
  const char r = static_cast<char>(f.rep);
  os.write(&r, 1);
  for (auto c : f.coeffs) {
    detail::put_f64(os, c.real());
    detail::put_f64(os, c.imag());
  }
}

inline SpacetimeField read_binary(std::istream& is) {
  const auto mx = detail::get_u64(is), my = detail::get_u64(is), mt = detail::get_u64(is);
  const double twin = detail::get_f64(is), a1 = detail::get_f64(is), a2 = detail::get_f64(is);
  char r = 0;
  if (!is.read(&r, 1)) throw ValidationError("truncated field snapshot");
  if (r != 0 && r != 1) throw ValidationError("bad representation flag in snapshot");
  SpacetimeField f(SpaceGrid(mx, my, TorusGeometry(a1, a2)), TimeWindow(twin, mt), static_cast<Rep>(r));
  for (auto& c : f.coeffs) {
    const double re = detail::get_f64(is);
    c = {re, detail::get_f64(is)};
  }
  return f;
}

inline nlohmann::ordered_json to_json(const SpacetimeField& f) {
  nlohmann::ordered_json j;
  j["Mx"] = f.grid.Mx;
  j["My"] = f.grid.My;
  j["Mt"] = f.window.Mt;
  j["Twin"] = f.window.Twin;
  j["alpha1"] = f.grid.geom.alpha1;
  j["alpha2"] = f.grid.geom.alpha2;
  j["rep"] = f.rep == Rep::physical ? "physical" : "fourier";
  auto re = nlohmann::json::array(), im = nlohmann::json::array();
  for (auto c : f.coeffs) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline SpacetimeField field_from_json(const nlohmann::json& j) {
  SpacetimeField f(SpaceGrid(j.at("Mx").get<std::size_t>(), j.at("My").get<std::size_t>(),
                             TorusGeometry(j.at("alpha1").get<double>(), j.at("alpha2").get<double>())),
                   TimeWindow(j.at("Twin").get<double>(), j.at("Mt").get<std::size_t>()),
                   j.at("rep").get<std::string>() == "fourier" ? Rep::fourier : Rep::physical);
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != f.coeffs.size() || im.size() != f.coeffs.size())
    throw ValidationError("JSON field payload has the wrong length");
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = {re[i].get<double>(), im[i].get<double>()};
  return f;
}

}  // namespace qnls
