#pragma once

// Integer frequency lattice, dyadic and modulation blocks, angular sectors
// and the brute-force counter for lattice points in rotated annulus strips.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qnls {

/// Raised when an input violates an operation's precondition.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Flat torus (R/alpha1 Z) x (R/alpha2 Z); only the dispersion symbol depends on it.
struct TorusGeometry {
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  TorusGeometry() = default;
  TorusGeometry(double a1, double a2) : alpha1(a1), alpha2(a2) {
    if (!(a1 > 0.0) || !(a2 > 0.0))
      throw ValidationError("torus period ratios must be positive");
  }

  bool is_square() const { return alpha1 == 1.0 && alpha2 == 1.0; }
};

struct FreqVec {
  int n1 = 0;
  int n2 = 0;

  constexpr FreqVec() = default;
  constexpr FreqVec(int a, int b) : n1(a), n2(b) {}

  constexpr bool is_zero() const { return n1 == 0 && n2 == 0; }
  friend constexpr bool operator==(FreqVec, FreqVec) = default;
  friend constexpr FreqVec operator+(FreqVec a, FreqVec b) { return {a.n1 + b.n1, a.n2 + b.n2}; }
  friend constexpr FreqVec operator-(FreqVec a, FreqVec b) { return {a.n1 - b.n1, a.n2 - b.n2}; }
  friend constexpr FreqVec operator-(FreqVec a) { return {-a.n1, -a.n2}; }
};

/// Euclidean dot product on Z^2, exact.
constexpr std::int64_t dot(FreqVec a, FreqVec b) {
  return std::int64_t(a.n1) * b.n1 + std::int64_t(a.n2) * b.n2;
}

constexpr std::int64_t norm_sq_int(FreqVec n) { return dot(n, n); }

/// Dispersion symbol |n|^2_alpha = (n1/alpha1)^2 + (n2/alpha2)^2.
inline double norm_sq(FreqVec n, const TorusGeometry& g = {}) {
  if (g.is_square()) return double(norm_sq_int(n));
  const double a = n.n1 / g.alpha1;
  const double b = n.n2 / g.alpha2;
  return a * a + b * b;
}

inline double norm(FreqVec n, const TorusGeometry& g = {}) { return std::sqrt(norm_sq(n, g)); }

/// Japanese bracket <x> = (1 + x^2)^(1/2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

inline bool is_dyadic(std::int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

/// Smallest dyadic D >= 1 with value <= D; 1 when value <= 1.
inline std::int64_t dyadic_ceil(double value) {
  if (!(value > 1.0)) return 1;
  std::int64_t d = 1;
  while (double(d) < value) d <<= 1;
  return d;
}

/// Dyadic N with N/2 < |n| <= N; the zero mode and |n| <= 1 map to 1.
inline std::int64_t dyadic_block_of(FreqVec n, const TorusGeometry& g = {}) {
  if (g.is_square()) {
    // exact integer comparison against N^2
    const std::int64_t r2 = norm_sq_int(n);
    std::int64_t d = 1;
    while (d * d < r2) d <<= 1;
    return d;
  }
  return dyadic_ceil(norm(n, g));
}

/// Dyadic L with L/2 < |tau + |n|^2| <= L; 1 when the modulation is at most 1.
inline std::int64_t modulation_block_of(double tau, FreqVec n, const TorusGeometry& g = {}) {
  return dyadic_ceil(std::abs(tau + norm_sq(n, g)));
}

/// Membership in the spatial block P_N (block 1 also holds the zero mode).
inline bool in_spatial_block(FreqVec n, std::int64_t N, const TorusGeometry& g = {}) {
  return dyadic_block_of(n, g) == N;
}

inline bool in_modulation_block(double tau, FreqVec n, std::int64_t L, const TorusGeometry& g = {}) {
  return modulation_block_of(tau, n, g) == L;
}

enum class Convention { difference, sum };

/// ((tau,n),(tau1,n1),(tau2,n2)) with n = n1 - n2, tau = tau1 - tau2 (or the sum variant).
struct InteractionTriple {
  double tau = 0, tau1 = 0, tau2 = 0;
  FreqVec n, n1, n2;
  Convention convention = Convention::difference;

  /// Builds the triple from the two incoming waves.
  static InteractionTriple from_inputs(double tau1, FreqVec n1, double tau2, FreqVec n2,
                                       Convention c = Convention::difference) {
    InteractionTriple t;
    t.tau1 = tau1;
    t.tau2 = tau2;
    t.n1 = n1;
    t.n2 = n2;
    t.convention = c;
    if (c == Convention::difference) {
      t.n = n1 - n2;
      t.tau = tau1 - tau2;
    } else {
      t.n = n1 + n2;
      t.tau = tau1 + tau2;
    }
    return t;
  }

  bool satisfies_constraint() const {
    if (convention == Convention::difference)
      return n == n1 - n2 && tau == tau1 - tau2;
    return n == n1 + n2 && tau == tau1 + tau2;
  }

  double sigma(const TorusGeometry& g = {}) const { return tau + norm_sq(n, g); }
  double sigma1(const TorusGeometry& g = {}) const { return tau1 + norm_sq(n1, g); }
  double sigma2(const TorusGeometry& g = {}) const { return tau2 + norm_sq(n2, g); }
};

/// The resonance function of the triple:
/// difference: sigma - sigma1 + sigma2, sum: sigma - sigma1 - sigma2.
inline double phase_sum(const InteractionTriple& t, const TorusGeometry& g = {}) {
  if (!t.satisfies_constraint())
    throw ValidationError("interaction triple violates its convolution constraint");
  if (t.convention == Convention::difference)
    return t.sigma(g) - t.sigma1(g) + t.sigma2(g);
  return t.sigma(g) - t.sigma1(g) - t.sigma2(g);
}

/// Closed form of phase_sum on the square torus: -2 n.n2, or 2 n1.n2 for the sum variant.
inline std::int64_t phase_closed_form(const InteractionTriple& t) {
  if (t.convention == Convention::difference) return -2 * dot(t.n, t.n2);
  return 2 * dot(t.n1, t.n2);
}

/// Six dyadic block sizes of an interaction with derived max/min/med statistics.
struct DyadicTriple {
  std::int64_t N0 = 1, N1 = 1, N2 = 1, L0 = 1, L1 = 1, L2 = 1;

  DyadicTriple() = default;
  DyadicTriple(std::int64_t n0, std::int64_t n1, std::int64_t n2, std::int64_t l0, std::int64_t l1,
               std::int64_t l2)
      : N0(n0), N1(n1), N2(n2), L0(l0), L1(l1), L2(l2) {
    for (auto v : {n0, n1, n2, l0, l1, l2})
      if (!is_dyadic(v)) throw ValidationError("block sizes must be powers of two >= 1");
  }

  static DyadicTriple of(const InteractionTriple& t, const TorusGeometry& g = {}) {
    return {dyadic_block_of(t.n, g),
            dyadic_block_of(t.n1, g),
            dyadic_block_of(t.n2, g),
            modulation_block_of(t.tau, t.n, g),
            modulation_block_of(t.tau1, t.n1, g),
            modulation_block_of(t.tau2, t.n2, g)};
  }

  std::int64_t Nmax() const { return std::max({N0, N1, N2}); }
  std::int64_t Nmin() const { return std::min({N0, N1, N2}); }
  std::int64_t Lmax() const { return std::max({L0, L1, L2}); }
  std::int64_t Lmin() const { return std::min({L0, L1, L2}); }
  std::int64_t Lmed() const { return L0 * L1 * L2 / (Lmin() * Lmax()); }
};

/// Argument of n in [0, 2pi).
inline double arg0(FreqVec n) {
  double a = std::atan2(double(n.n2), double(n.n1));
  if (a < 0) a += 2 * std::numbers::pi;
  if (a >= 2 * std::numbers::pi) a = 0.0;
  return a;
}

/// Index of the half-open sector [l w, (l+1) w) containing arg(n).
inline std::int64_t sector_index(FreqVec n, double width) {
  if (n.is_zero()) throw std::domain_error("sector_index: argument of the zero vector is undefined");
  if (!(width > 0.0) || !(width < 2 * std::numbers::pi))
    throw ValidationError("sector width must lie in (0, 2pi)");
  return std::int64_t(std::floor(arg0(n) / width));
}

/// Angular sector of the block P_N: arg(n) in [ell w, (ell+1) w).
struct AngularSector {
  std::int64_t N = 1;
  double width = 1.0;
  std::int64_t ell = 0;

  std::int64_t count() const { return std::int64_t(std::ceil(2 * std::numbers::pi / width)); }

  bool contains(FreqVec n, const TorusGeometry& g = {}) const {
    if (n.is_zero() || dyadic_block_of(n, g) != N) return false;
    return sector_index(n, width) == ell;
  }
};

/// Constant used for "much less than" comparisons in hypotheses.
inline constexpr double kMuchLess = 1.0 / 8.0;

/// Parameters of a rotated annulus strip D intersected with the cone K.
struct CountingInstance {
  double N = 0;
  double mu = 0;
  double nu = 0;
  double M = 0;
  double alphaAngle = std::numbers::pi / 4;
  double rotation = 0;

  /// Checks N >> 1, 1/N <= mu, nu << N and ((mu + min(nu,1))/N)^(1/2) << alpha <= pi/4.
  bool in_hypothesis() const {
    if (!(N * kMuchLess >= 1.0)) return false;
    if (mu < 1.0 / N || nu < 1.0 / N) return false;
    if (mu > kMuchLess * N || nu > kMuchLess * N) return false;
    if (M < 0) return false;
    const double lhs = std::sqrt((mu + std::min(nu, 1.0)) / N);
    return lhs <= kMuchLess * alphaAngle && alphaAngle <= std::numbers::pi / 4 + 1e-15;
  }
};

/// max{nu,1} (alpha^-1 (mu + min{nu,1}) + 1).
inline double counting_bound(const CountingInstance& c) {
  return std::max(c.nu, 1.0) * ((c.mu + std::min(c.nu, 1.0)) / c.alphaAngle + 1.0);
}

/// Exact |Z^2 ∩ R(D ∩ K)| by enumerating the bounding box of the rotated set.
inline std::int64_t counting_count(const CountingInstance& c) {
  if (c.N < 0 || c.mu < 0 || c.nu < 0 || c.M < 0 || !(c.alphaAngle > 0))
    throw ValidationError("counting instance has negative extents");
  const double rOut = c.N + c.mu;
  if (c.M > rOut) return 0;
  // K lies within unsigned angle 2 alpha of e1.
  const double cone = std::min(2 * c.alphaAngle, std::numbers::pi);
  double ymax = std::sqrt(std::max(0.0, rOut * rOut - c.M * c.M));
  if (cone < std::numbers::pi / 2) ymax = std::min(ymax, rOut * std::sin(cone));
  const double x0 = c.M, x1 = c.M + c.nu;

  const double cr = std::cos(c.rotation), sr = std::sin(c.rotation);
  double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
  for (double x : {x0, x1})
    for (double y : {-ymax, ymax}) {
      const double X = cr * x - sr * y, Y = sr * x + cr * y;
      bx0 = std::min(bx0, X);
      bx1 = std::max(bx1, X);
      by0 = std::min(by0, Y);
      by1 = std::max(by1, Y);
    }

  const double lo = c.N * c.N, hi = rOut * rOut;
  const double aLo = c.alphaAngle / 2, aHi = 2 * c.alphaAngle;
  const double slack = 1e-12;
  std::int64_t count = 0;
  for (auto X = std::int64_t(std::ceil(bx0 - slack)); X <= std::int64_t(std::floor(bx1 + slack)); ++X) {
    for (auto Y = std::int64_t(std::ceil(by0 - slack)); Y <= std::int64_t(std::floor(by1 + slack)); ++Y) {
      // undo the rotation
      const double x = cr * X + sr * Y, y = -sr * X + cr * Y;
      const double r2 = x * x + y * y;
      if (r2 < lo * (1 - slack) - slack || r2 > hi * (1 + slack) + slack) continue;
      if (x < x0 - slack || x > x1 + slack) continue;
      const double ang = std::atan2(std::abs(y), x);
      if (ang < aLo - slack || ang > aHi + slack) continue;
      ++count;
    }
  }
  return count;
}

}  // namespace qnls
