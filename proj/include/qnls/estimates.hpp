#pragma once

// Ratio operations for the bilinear, trilinear and modulation estimates, the
// interaction case classifier, and the resonant fiber enumerator.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qnls/field.hpp"
#include "qnls/lattice.hpp"
#include "qnls/lattice_fn.hpp"

namespace qnls {

struct EstimateParams {
  double eps = 0.1;
  double delta1 = 0.08;
  double delta2 = 0.05;
  double s = 0.0;
  double c_nr = 1.0;    // non-resonance threshold constant
  double kappa = 0.01;  // small exponent loss in the high-modulation bound

  void validate() const {
    if (!(eps > 0) || !(eps < 1.0 / 3)) throw ValidationError("eps must lie in (0, 1/3)");
    if (!(delta2 > 0) || !(delta2 < delta1) || !(delta1 < 2 * delta2))
      throw ValidationError("need 0 < delta2 < delta1 < 2 delta2");
    if (!(s >= 0)) throw ValidationError("s must be nonnegative");
    if (!(c_nr > 0)) throw ValidationError("c_nr must be positive");
    if (!(kappa > 0)) throw ValidationError("kappa must be positive");
  }
};

// ---------------------------------------------------------------------------
// Case classifier

enum class CaseTag : std::uint8_t {
  ZeroMode,
  NR_Case1,
  NR_Case2,
  NR_Case3,
  R_1a,
  R_1b,
  R_1c,
  R_2a,
  R_2b,
  R_3_high,
  R_3_low,
};

inline constexpr std::size_t kCaseCount = 11;

inline constexpr std::array<CaseTag, kCaseCount> kAllCases = {
    CaseTag::ZeroMode, CaseTag::NR_Case1, CaseTag::NR_Case2, CaseTag::NR_Case3,
    CaseTag::R_1a,     CaseTag::R_1b,     CaseTag::R_1c,     CaseTag::R_2a,
    CaseTag::R_2b,     CaseTag::R_3_high, CaseTag::R_3_low};

inline std::string to_string(CaseTag t) {
  switch (t) {
    case CaseTag::ZeroMode: return "ZeroMode";
    case CaseTag::NR_Case1: return "NR-Case1";
    case CaseTag::NR_Case2: return "NR-Case2";
    case CaseTag::NR_Case3: return "NR-Case3";
    case CaseTag::R_1a: return "R-1a";
    case CaseTag::R_1b: return "R-1b";
    case CaseTag::R_1c: return "R-1c";
    case CaseTag::R_2a: return "R-2a";
    case CaseTag::R_2b: return "R-2b";
    case CaseTag::R_3_high: return "R-3-high";
    case CaseTag::R_3_low: return "R-3-low";
  }
  return "?";
}

/// Frequency-only part of the classification; modulations finish it.
struct StaticClass {
  enum class Kind { fixed, nonresonant, threshold } kind = Kind::fixed;
  CaseTag fixed = CaseTag::ZeroMode;
  CaseTag above = CaseTag::R_2a, below = CaseTag::R_2b;  // Lmax >= threshold / below it
  std::int64_t threshold = 1;
};

/// Weighted dot product matching the anisotropic symbol.
inline double geom_dot(FreqVec a, FreqVec b, const TorusGeometry& g) {
  return double(a.n1) * b.n1 / (g.alpha1 * g.alpha1) + double(a.n2) * b.n2 / (g.alpha2 * g.alpha2);
}

/// Classification of (n, n1, n2) in difference form, n = n1 - n2.
inline StaticClass classify_static(FreqVec n, FreqVec n1, FreqVec n2, std::int64_t N0, std::int64_t N2,
                                   const EstimateParams& p, const TorusGeometry& g) {
  StaticClass c;
  if (n.is_zero() || n1.is_zero() || n2.is_zero()) return c;
  const double a = norm(n, g), a2 = norm(n2, g);
  if (std::abs(geom_dot(n, n2, g)) >= p.c_nr * std::pow(a, p.eps) * std::pow(a2, p.eps)) {
    c.kind = StaticClass::Kind::nonresonant;
    return c;
  }
  if (a2 * a2 >= a && a2 <= a * a) {
    const double r = a2 / a;
    c.fixed = (r >= 0.5 && r <= 2) ? CaseTag::R_1a : (r < 0.5 ? CaseTag::R_1b : CaseTag::R_1c);
    return c;
  }
  c.kind = StaticClass::Kind::threshold;
  if (a * a < a2) {
    c.above = CaseTag::R_2a, c.below = CaseTag::R_2b, c.threshold = N2;
  } else {
    c.above = CaseTag::R_3_high, c.below = CaseTag::R_3_low, c.threshold = N0;
  }
  return c;
}

/// Completes a static class from the three modulations (sigma, sigma1, sigma2).
inline CaseTag finish_class(const StaticClass& c, double sig, double sig1, double sig2) {
  switch (c.kind) {
    case StaticClass::Kind::fixed: return c.fixed;
    case StaticClass::Kind::nonresonant: {
      const double w0 = std::abs(sig), w1 = std::abs(sig1), w2 = std::abs(sig2);
      // brackets are monotone in |sigma|; ties go to the lowest index
      if (w0 >= w1 && w0 >= w2) return CaseTag::NR_Case1;
      if (w1 >= w2) return CaseTag::NR_Case2;
      return CaseTag::NR_Case3;
    }
    case StaticClass::Kind::threshold: {
      const std::int64_t lmax = std::max({modulation_block_of(sig, {}), modulation_block_of(sig1, {}),
                                          modulation_block_of(sig2, {})});
      return lmax >= c.threshold ? c.above : c.below;
    }
  }
  return CaseTag::ZeroMode;
}

/// The triple in difference form; the sum variant n = n1 + n2 is relabelled as
/// n1 = n - n2 with the output playing the role of the first input.
inline InteractionTriple difference_form(const InteractionTriple& t) {
  if (t.convention == Convention::difference) return t;
  InteractionTriple d;
  d.convention = Convention::difference;
  d.n = t.n1, d.tau = t.tau1;
  d.n1 = t.n, d.tau1 = t.tau;
  d.n2 = t.n2, d.tau2 = t.tau2;
  return d;
}

inline DyadicTriple difference_blocks(const InteractionTriple& t, const DyadicTriple& b) {
  if (t.convention == Convention::difference) return b;
  return DyadicTriple(b.N1, b.N0, b.N2, b.L1, b.L0, b.L2);
}

inline CaseTag classify_interaction(const InteractionTriple& t, const EstimateParams& p,
                                    const DyadicTriple& blocks, const TorusGeometry& g = {}) {
  if (!t.satisfies_constraint()) throw ValidationError("triple violates its convolution constraint");
  const auto d = difference_form(t);
  const auto b = difference_blocks(t, blocks);
  const auto c = classify_static(d.n, d.n1, d.n2, b.N0, b.N2, p, g);
  if (c.kind == StaticClass::Kind::threshold) {
    // use the declared blocks for Lmax
    return b.Lmax() >= c.threshold ? c.above : c.below;
  }
  return finish_class(c, d.sigma(g), d.sigma1(g), d.sigma2(g));
}

inline CaseTag classify_interaction(const InteractionTriple& t, const EstimateParams& p,
                                    const TorusGeometry& g = {}) {
  return classify_interaction(t, p, DyadicTriple::of(t, g), g);
}

/// max of the three modulation brackets >= <n.n2>/3 (exact consequence of the phase identity).
inline bool phase_lower_bound_holds(const InteractionTriple& t, const TorusGeometry& g = {}) {
  const auto d = difference_form(t);
  const double m = std::max({bracket(d.sigma(g)), bracket(d.sigma1(g)), bracket(d.sigma2(g))});
  return m >= bracket(geom_dot(d.n, d.n2, g)) / 3 * (1 - 1e-15);
}

struct CaseScanResult {
  std::array<std::uint64_t, kCaseCount> counts{};
  std::uint64_t total = 0;
  std::uint64_t phaseBoundViolations = 0;
};

/// Exhaustive tag counts over |n1|_inf, |n2|_inf <= S and integer tau1, tau2 in
/// [-tauMax, tauMax] (difference form, square torus). Classification depends on
/// the frequencies only through (|n|^2, |n1|^2, |n2|^2), which is memoized.
inline CaseScanResult decompose_scan(int S, int tauMax, const EstimateParams& p) {
  p.validate();
  struct Key {
    std::int64_t A, B, C;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::size_t(mix_seed(std::uint64_t(k.A), std::uint64_t(k.B) * 4099 + std::uint64_t(k.C)));
    }
  };
  std::unordered_map<Key, std::uint64_t, KeyHash> multiplicity;
  std::unordered_map<Key, std::pair<FreqVec, FreqVec>, KeyHash> rep;
  for (int a1 = -S; a1 <= S; ++a1)
    for (int b1 = -S; b1 <= S; ++b1)
      for (int a2 = -S; a2 <= S; ++a2)
        for (int b2 = -S; b2 <= S; ++b2) {
          const FreqVec n1{a1, b1}, n2{a2, b2};
          const Key k{norm_sq_int(n1 - n2), norm_sq_int(n1), norm_sq_int(n2)};
          auto [it, fresh] = multiplicity.try_emplace(k, 0);
          ++it->second;
          if (fresh) rep.emplace(k, std::make_pair(n1, n2));
        }
  CaseScanResult r;
  const std::uint64_t tauCount = std::uint64_t(2 * tauMax + 1) * std::uint64_t(2 * tauMax + 1);
  for (const auto& [k, mult] : multiplicity) {
    const auto [n1, n2] = rep.at(k);
    const FreqVec n = n1 - n2;
    const auto N0 = dyadic_block_of(n), N2 = dyadic_block_of(n2);
    const auto c = classify_static(n, n1, n2, N0, N2, p, {});
    r.total += mult * tauCount;
    if (c.kind == StaticClass::Kind::fixed) {
      r.counts[std::size_t(c.fixed)] += mult * tauCount;
      continue;
    }
    const bool nonres = c.kind == StaticClass::Kind::nonresonant;
    const double dotv = std::abs(double(dot(n, n2)));
    for (int t1 = -tauMax; t1 <= tauMax; ++t1)
      for (int t2 = -tauMax; t2 <= tauMax; ++t2) {
        const double s1 = t1 + double(k.B), s2 = t2 + double(k.C), s0 = double(t1 - t2) + double(k.A);
        r.counts[std::size_t(finish_class(c, s0, s1, s2))] += mult;
        if (nonres) {
          const double m = std::max({bracket(s0), bracket(s1), bracket(s2)});
          if (m < bracket(dotv) / 3 * (1 - 1e-15)) r.phaseBoundViolations += mult;
        }
      }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bilinear Strichartz

/// L_min12^{1/2} (L_max12 / N0 + 1)^{1/2} N_min^{1/2}.
inline double bilinear_strichartz_bound(const DyadicTriple& b) {
  const double lmin = double(std::min(b.L1, b.L2)), lmax = double(std::max(b.L1, b.L2));
  return std::sqrt(lmin) * std::sqrt(lmax / double(b.N0) + 1.0) * std::sqrt(double(b.Nmin()));
}

inline double bilinear_strichartz_ratio(const LatticeFunction& u1, const LatticeFunction& u2,
                                        std::int64_t N0, const DyadicTriple& blocks) {
  if (blocks.N0 != N0) throw ValidationError("output block does not match the declared triple");
  if (!supported_in(u1, blocks.N1, blocks.L1) || !supported_in(u2, blocks.N2, blocks.L2))
    throw ValidationError("input support violates the declared blocks");
  const auto g = u1.geom();
  const auto out = convolve(u1, u2, Pattern::u_vbar, [&](FreqVec n) { return dyadic_block_of(n, g) == N0; });
  const double num = l2_norm(out);
  if (num == 0) return 0.0;
  return num / (bilinear_strichartz_bound(blocks) * l2_norm(u1) * l2_norm(u2));
}

inline double bilinear_strichartz_ratio(const SpacetimeField& u1, const SpacetimeField& u2, std::int64_t N0,
                                        const DyadicTriple& blocks) {
  return bilinear_strichartz_ratio(from_spacetime(u1), from_spacetime(u2), N0, blocks);
}

// ---------------------------------------------------------------------------
// Bilinear X^{s,b}

/// Restriction-norm ratio on a dense window (T = 1, so Twin >= 4).
inline double bilinear_xsb_ratio(const SpacetimeField& u, const SpacetimeField& v, const EstimateParams& p,
                                 Pattern pat, CutoffProfile::Shape shape = CutoffProfile::Shape::smooth_bump) {
  p.validate();
  require_same_shape(u, v);
  const XsbParams hi{p.s, 0.5 + p.delta2}, lo{p.s, -0.5 + p.delta1};
  const double den = xsb_restriction_norm_ub(u, hi, 1.0, shape) * xsb_restriction_norm_ub(v, hi, 1.0, shape);
  if (!(den > 0)) throw ValidationError("zero denominator in bilinear ratio");
  const auto prod = product_field(u, v, false, pat == Pattern::u_vbar);
  return xsb_restriction_norm_ub(prod, lo, 1.0, shape) / den;
}

/// Global-norm ratio on lattice functions (no time cutoff, exact convolution).
inline double bilinear_xsb_ratio(const LatticeFunction& u, const LatticeFunction& v, const EstimateParams& p,
                                 Pattern pat) {
  p.validate();
  const double den = xsb_norm(u, p.s, 0.5 + p.delta2) * xsb_norm(v, p.s, 0.5 + p.delta2);
  if (!(den > 0)) throw ValidationError("zero denominator in bilinear ratio");
  return xsb_norm(convolve(u, v, pat), p.s, -0.5 + p.delta1) / den;
}

// ---------------------------------------------------------------------------
// Duality form with per-case attribution

struct DualResult {
  cplx total{};
  std::array<cplx, kCaseCount> parts{};
  std::array<std::uint64_t, kCaseCount> terms{};
};

/// sum u^(1) conj(v^(2)) conj(w^) <n>^s <n1>^-s <n2>^-s
///     / (<sigma1>^{1/2+d2} <sigma2>^{1/2+d2} <sigma>^{1/2-d1}) dtau^2
/// over tau = tau1 -+ tau2, n = n1 -+ n2 (sign per pattern; v unconjugated for u*v).
inline DualResult dual_trilinear_decomposition(const LatticeFunction& u, const LatticeFunction& v,
                                               const LatticeFunction& w, const EstimateParams& p,
                                               Pattern pat = Pattern::u_vbar) {
  p.validate();
  require_compatible(u, v);
  require_compatible(u, w);
  const auto& g = u.geom();
  const double d2 = u.dtau() * u.dtau();
  const Convention conv = pat == Pattern::u_vbar ? Convention::difference : Convention::sum;
  DualResult r;
  if (w.empty()) return r;
  for (const auto& a : u.entries())
    for (const auto& b : v.entries()) {
      const LatticePoint q = pat == Pattern::u_vbar ? LatticePoint{a.p.k - b.p.k, a.p.n - b.p.n}
                                                    : LatticePoint{a.p.k + b.p.k, a.p.n + b.p.n};
      const cplx wv = w.at(q);
      if (wv == cplx{}) continue;
      const auto t = InteractionTriple::from_inputs(u.tau(a.p), a.p.n, u.tau(b.p), b.p.n, conv);
      const double wt = std::pow(bracket(t.sigma1(g)), 0.5 + p.delta2) *
                        std::pow(bracket(t.sigma2(g)), 0.5 + p.delta2) *
                        std::pow(bracket(t.sigma(g)), 0.5 - p.delta1);
      const double sw = p.s == 0 ? 1.0
                                 : std::pow((1 + norm_sq(t.n, g)) / ((1 + norm_sq(t.n1, g)) * (1 + norm_sq(t.n2, g))),
                                            p.s / 2);
      const cplx vv = pat == Pattern::u_vbar ? std::conj(b.v) : b.v;
      const cplx term = a.v * vv * std::conj(wv) * (sw * d2 / wt);
      const auto tag = std::size_t(classify_interaction(t, p, g));
      r.total += term;
      r.parts[tag] += term;
      ++r.terms[tag];
    }
  return r;
}

inline double dual_trilinear_form(const LatticeFunction& u, const LatticeFunction& v, const LatticeFunction& w,
                                  const EstimateParams& p, Pattern pat = Pattern::u_vbar) {
  return std::abs(dual_trilinear_decomposition(u, v, w, p, pat).total);
}

inline double dual_trilinear_form(const SpacetimeField& u, const SpacetimeField& v, const SpacetimeField& w,
                                  const EstimateParams& p, Pattern pat = Pattern::u_vbar) {
  return dual_trilinear_form(from_spacetime(u), from_spacetime(v), from_spacetime(w), p, pat);
}

// ---------------------------------------------------------------------------
// Trilinear form over [0,1] x T^2

/// int_0^1 e^{-i w t} dt.
inline cplx unit_time_integral(double w) {
  if (std::abs(w) < 1e-6) return {1.0 - w * w / 6, -w / 2};
  return (1.0 - std::exp(cplx(0, -w))) / cplx(0, w);
}

/// Fourier coefficients of a spatial field as a sparse list.
using ModeList = std::vector<std::pair<FreqVec, cplx>>;

inline ModeList mode_list(const SpatialField& f) {
  const auto& g = f.grid;
  const auto c = spatial_modes(f);
  ModeList out;
  for (std::size_t ix = 0; ix < g.Mx; ++ix)
    for (std::size_t iy = 0; iy < g.My; ++iy)
      if (c[g.index(ix, iy)] != cplx{}) out.push_back({g.freq(ix, iy), c[g.index(ix, iy)]});
  return out;
}

inline double l2_norm(const ModeList& m) {
  double s = 0;
  for (const auto& [n, c] : m) s += std::norm(c);
  return std::sqrt(s);
}

/// int_0^1 int prod_j (e^{it Delta} phi_j)^(*) dx dt over the normalized torus,
/// evaluated exactly in Fourier variables; conj[j] selects the conjugated factor.
inline cplx trilinear_form(const ModeList& f1, const ModeList& f2, const ModeList& f3, std::array<bool, 3> conj,
                           const TorusGeometry& g = {}) {
  struct Mode {
    FreqVec n;  // signed frequency of the factor
    cplx c;     // coefficient of the factor
    double w;   // time frequency: factor carries e^{-i w t}
  };
  auto modes = [&](const ModeList& f, bool cj) {
    std::vector<Mode> out;
    out.reserve(f.size());
    for (const auto& [n, v] : f) {
      if (v == cplx{}) continue;
      const double ns = norm_sq(n, g);
      out.push_back(cj ? Mode{-n, std::conj(v), -ns} : Mode{n, v, ns});
    }
    return out;
  };
  const auto m1 = modes(f1, conj[0]), m2 = modes(f2, conj[1]), m3 = modes(f3, conj[2]);
  std::unordered_map<std::uint64_t, cplx> third;
  for (const auto& m : m3) third[pack({0, m.n})] += m.c;
  cplx acc{};
  for (const auto& a : m1)
    for (const auto& b : m2) {
      const FreqVec need = -(a.n + b.n);
      if (std::abs(need.n1) >= 32768 || std::abs(need.n2) >= 32768) continue;
      const auto it = third.find(pack({0, need}));
      if (it == third.end()) continue;
      const double w3 = conj[2] ? -norm_sq(need, g) : norm_sq(need, g);
      acc += a.c * b.c * it->second * unit_time_integral(a.w + b.w + w3);
    }
  return acc;
}

inline cplx trilinear_form(const SpatialField& f1, const SpatialField& f2, const SpatialField& f3,
                           std::array<bool, 3> conj) {
  if (!(f1.grid == f2.grid) || !(f1.grid == f3.grid)) throw ValidationError("fields live on different grids");
  return trilinear_form(mode_list(f1), mode_list(f2), mode_list(f3), conj, f1.grid.geom);
}

inline double trilinear_ratio(const SpatialField& f1, const SpatialField& f2, const SpatialField& f3,
                              std::array<bool, 3> conj) {
  const double den = l2_norm(f1) * l2_norm(f2) * l2_norm(f3);
  if (!(den > 0)) return 0.0;
  return std::abs(trilinear_form(f1, f2, f3, conj)) / den;
}

// ---------------------------------------------------------------------------
// Modulation lemmas

/// Nonnegative lattice function with its declared block.
struct BlockField {
  LatticeFunction values;
  std::int64_t N = 1, L = 1;

  void validate() const {
    for (const auto& e : values.entries())
      if (e.v.imag() != 0 || e.v.real() < 0) throw ValidationError("block field values must be nonnegative reals");
    if (!supported_in(values, N, L)) throw ValidationError("block field support violates its declared block");
  }
};

/// Angular threshold as a function of (n, n2); the sum keeps |cos angle(n, n2)| < theta(n, n2).
using AngleThreshold = std::function<double(FreqVec, FreqVec)>;

/// dtau^2 sum f(tau1, n1) g(tau1 - tau, n1 - n) h(tau, n), optionally restricted
/// to |cos angle(n, n2)| < theta(n, n2).
inline double trilinear_block_sum(const LatticeFunction& f, const LatticeFunction& g, const LatticeFunction& h,
                                  const AngleThreshold& theta) {
  require_compatible(f, g);
  require_compatible(f, h);
  double acc = 0;
  for (const auto& a : f.entries())
    for (const auto& b : g.entries()) {
      const LatticePoint q{a.p.k - b.p.k, a.p.n - b.p.n};
      const double hv = h.at(q).real();
      if (hv == 0) continue;
      if (theta) {
        if (q.n.is_zero() || b.p.n.is_zero()) continue;
        const double c = double(dot(q.n, b.p.n)) / (norm(q.n) * norm(b.p.n));
        if (!(std::abs(c) < theta(q.n, b.p.n))) continue;
      }
      acc += a.v.real() * b.v.real() * hv;
    }
  return acc * f.dtau() * f.dtau();
}

inline double trilinear_block_sum(const LatticeFunction& f, const LatticeFunction& g, const LatticeFunction& h,
                                  std::optional<double> theta = std::nullopt) {
  if (!theta) return trilinear_block_sum(f, g, h, AngleThreshold{});
  const double t = *theta;
  return trilinear_block_sum(f, g, h, AngleThreshold([t](FreqVec, FreqVec) { return t; }));
}

/// kMuchLess / (|n|^{1-eps} |n2|^{1-eps}).
inline AngleThreshold resonant_angle_threshold(double eps) {
  return [eps](FreqVec n, FreqVec n2) {
    return kMuchLess / std::pow(norm(n) * norm(n2), 1 - eps);
  };
}

inline void require_comparable(std::int64_t N1, std::int64_t N2) {
  if (!(N1 == N2 || N1 == 2 * N2 || 2 * N1 == N2)) throw ValidationError("hypothesis N1 ~ N2 fails");
}

/// f in block (N1,L1), g in (N2,L2), h in (N0,L0); needs N0^2 < N2/8, Lmax >= N2.
inline double high_modulation_ratio(const BlockField& f, const BlockField& g, const BlockField& h,
                                    const DyadicTriple& b, const EstimateParams& p = {}) {
  for (const auto* x : {&f, &g, &h}) x->validate();
  if (f.N != b.N1 || f.L != b.L1 || g.N != b.N2 || g.L != b.L2 || h.N != b.N0 || h.L != b.L0)
    throw ValidationError("block fields do not match the declared triple");
  require_comparable(b.N1, b.N2);
  if (!(double(b.N0 * b.N0) < kMuchLess * double(b.N2))) throw ValidationError("hypothesis N0^2 << N2 fails");
  if (b.Lmax() < b.N2) throw ValidationError("hypothesis Lmax >= N2 fails");
  const double T = trilinear_block_sum(f.values, g.values, h.values);
  if (T == 0) return 0.0;
  const double k = p.kappa;
  const double den = std::pow(double(b.L1), 0.5 + k) * std::pow(double(b.L2), 0.5 + k) *
                     std::pow(double(b.L0), 0.25 + k) * std::pow(double(b.N2), -k) * l2_norm(f.values) *
                     l2_norm(g.values) * l2_norm(h.values);
  return T / den;
}

/// f in (N1,L1), g in (N2,L2), h on 1 <= |n|^2 << N2 with modulation block L0;
/// needs N1 ~ N2 and Lmax << N2.
inline double low_modulation_ratio(const BlockField& f, const BlockField& g, const LatticeFunction& h,
                                   const DyadicTriple& b, const AngleThreshold& theta) {
  f.validate();
  g.validate();
  if (f.N != b.N1 || f.L != b.L1 || g.N != b.N2 || g.L != b.L2) throw ValidationError("block fields do not match");
  require_comparable(b.N1, b.N2);
  if (!(double(b.Lmax()) < kMuchLess * double(b.N2))) throw ValidationError("hypothesis Lmax << N2 fails");
  if (!theta) throw ValidationError("angular threshold required");
  for (const auto& e : h.entries()) {
    const auto ns = norm_sq(e.p.n, h.geom());
    if (e.v.imag() != 0 || e.v.real() < 0) throw ValidationError("h must be nonnegative");
    if (ns < 1 || !(ns < kMuchLess * double(b.N2))) throw ValidationError("h support violates 1 <= |n|^2 << N2");
    if (modulation_block_of(h.tau(e.p), e.p.n, h.geom()) != b.L0) throw ValidationError("h modulation block mismatch");
  }
  const double T = trilinear_block_sum(f.values, g.values, h, theta);
  if (T == 0) return 0.0;
  return T / (std::pow(double(b.Lmed()), 0.375) * std::pow(double(b.Lmax()), 0.375) * l2_norm(f.values) *
              l2_norm(g.values) * l2_norm(h));
}

inline double low_modulation_ratio(const BlockField& f, const BlockField& g, const LatticeFunction& h,
                                   const DyadicTriple& b, double theta) {
  if (!(theta > 0)) throw ValidationError("theta must be positive");
  return low_modulation_ratio(f, g, h, b, AngleThreshold([theta](FreqVec, FreqVec) { return theta; }));
}

// ---------------------------------------------------------------------------
// Resonant fibers

struct Ball {
  FreqVec center;
  double radius = 1;
  bool contains(FreqVec n) const { return double(norm_sq_int(n - center)) <= radius * radius; }
};

struct ResonantFiberSpec {
  double tau = 0, tau1 = 0;
  FreqVec n;
  std::int64_t j1 = 0, j2 = 0;
  Ball J1, J2;
  DyadicTriple blocks;
  double theta = 0.1;
};

/// |{n1 : (tau1, n1) and (tau1 - tau, n1 - n) satisfy every fiber constraint}|.
inline std::int64_t resonant_fiber_size(const ResonantFiberSpec& s) {
  if (std::abs(s.j1 - s.j2) >= 2) return 0;
  const auto& b = s.blocks;
  const int R = int(std::ceil(s.J1.radius));
  std::int64_t count = 0;
  for (int a = s.J1.center.n1 - R; a <= s.J1.center.n1 + R; ++a)
    for (int c = s.J1.center.n2 - R; c <= s.J1.center.n2 + R; ++c) {
      const FreqVec n1{a, c};
      if (!s.J1.contains(n1)) continue;
      const double r1 = norm(n1);
      if (!(r1 > double(s.j1) && r1 <= double(s.j1 + 1))) continue;
      if (dyadic_block_of(n1) != b.N1 || modulation_block_of(s.tau1, n1) != b.L1) continue;
      const FreqVec n2 = n1 - s.n;
      if (n2.is_zero() || !s.J2.contains(n2)) continue;
      const double r2 = norm(n2);
      if (!(r2 > double(s.j2) && r2 <= double(s.j2 + 1))) continue;
      if (dyadic_block_of(n2) != b.N2 || modulation_block_of(s.tau1 - s.tau, n2) != b.L2) continue;
      if (s.n.is_zero()) continue;
      const double cs = double(dot(s.n, n2)) / (norm(s.n) * r2);
      if (!(std::abs(cs) < s.theta)) continue;
      ++count;
    }
  return count;
}

/// max(1, min(N0, Lmax / N0)).
inline double fiber_bound(const DyadicTriple& b) {
  return std::max(1.0, std::min(double(b.N0), double(b.Lmax()) / double(b.N0)));
}

// ---------------------------------------------------------------------------
// Angular checks

/// If |cos angle(n, n2)| < theta then the unsigned angle lies within arcsin(theta) of pi/2.
inline bool near_orthogonality_check(FreqVec n, FreqVec n2, double theta) {
  if (n.is_zero() || n2.is_zero()) throw ValidationError("vectors must be nonzero");
  if (!(theta > 0) || !(theta < 0.5)) throw ValidationError("theta must lie in (0, 1/2)");
  const double c = double(dot(n, n2)) / (norm(n) * norm(n2));
  if (!(std::abs(c) < theta)) return true;
  const double cross = double(n.n1) * n2.n2 - double(n.n2) * n2.n1;
  const double ang = std::atan2(std::abs(cross), double(dot(n, n2)));
  const double half = std::numbers::pi / 2, d = std::asin(theta);
  return ang >= half - d - 1e-12 && ang <= half + d + 1e-12;
}

struct SectorScanResult {
  std::int64_t N = 0;
  double width = 0;
  std::int64_t maxDistinct = 0;  // max over ell of |{ell2}|
  std::int64_t witnessEll = -1;
  std::uint64_t pairs = 0;
};

/// For n in P_N and 1/2 <= |n2|/|n| <= 2 with |cos angle(n, n2)| < width/8,
/// width = N^{-2+2 eps}, counts the distinct sectors of n2 for each sector of n.
inline SectorScanResult sector_pigeonhole_scan(std::int64_t N, double eps) {
  SectorScanResult r;
  r.N = N;
  r.width = std::pow(double(N), -2 + 2 * eps);
  const double thr = kMuchLess * r.width;
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> seen;
  for (auto n : spatial_block_points(N)) {
    if (n.is_zero()) continue;
    const double rn = norm(n);
    const std::int64_t ell = sector_index(n, r.width);
    const int R = int(std::floor(2 * rn)) + 1;
    const double dmax = thr * rn * 2 * rn;  // bound on |n . n2|
    const bool loopX = std::abs(n.n2) >= std::abs(n.n1);
    for (int u = -R; u <= R; ++u) {
      // solve |a x + b y| <= dmax for the other coordinate
      const double a = loopX ? n.n1 : n.n2, b = loopX ? n.n2 : n.n1;
      const double lo = (-dmax - a * u) / b, hi = (dmax - a * u) / b;
      for (auto v = std::int64_t(std::ceil(std::min(lo, hi))); v <= std::int64_t(std::floor(std::max(lo, hi))); ++v) {
        const FreqVec n2 = loopX ? FreqVec{u, int(v)} : FreqVec{int(v), u};
        if (n2.is_zero()) continue;
        const double r2 = norm(n2);
        if (r2 < rn / 2 || r2 > 2 * rn) continue;
        if (!(std::abs(double(dot(n, n2))) / (rn * r2) < thr)) continue;
        auto& v2 = seen[ell];
        const auto l2 = sector_index(n2, r.width);
        if (std::find(v2.begin(), v2.end(), l2) == v2.end()) v2.push_back(l2);
        ++r.pairs;
      }
    }
  }
  for (const auto& [ell, v] : seen)
    if (std::int64_t(v.size()) > r.maxDistinct || (std::int64_t(v.size()) == r.maxDistinct && ell < r.witnessEll))
      r.maxDistinct = std::int64_t(v.size()), r.witnessEll = ell;
  return r;
}

}  // namespace qnls
