#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qnls/estimates.hpp"

using namespace qnls;
using std::numbers::pi;

namespace {

const EstimateParams kDefault{};

// Decision tree written out as eleven independent predicates.
std::vector<CaseTag> predicate_tags(FreqVec n, FreqVec n1, FreqVec n2, double s0, double s1, double s2,
                                    std::int64_t N0, std::int64_t N2, std::int64_t Lmax) {
  const double eps = 0.1;
  const bool zero = n.is_zero() || n1.is_zero() || n2.is_zero();
  const double a = std::hypot(n.n1, n.n2), b = std::hypot(n2.n1, n2.n2);
  const double d = std::abs(double(n.n1) * n2.n1 + double(n.n2) * n2.n2);
  const bool nr = !zero && d >= std::pow(a, eps) * std::pow(b, eps);
  const bool res = !zero && !nr;
  const double w0 = std::abs(s0), w1 = std::abs(s1), w2 = std::abs(s2);
  const bool c1 = b >= std::sqrt(a) && b <= a * a;
  const bool c2 = a * a < b;
  const bool c3 = b * b < a;
  std::vector<CaseTag> out;
  auto add = [&](bool cond, CaseTag t) {
    if (cond) out.push_back(t);
  };
  add(zero, CaseTag::ZeroMode);
  add(nr && w0 >= w1 && w0 >= w2, CaseTag::NR_Case1);
  add(nr && w1 > w0 && w1 >= w2, CaseTag::NR_Case2);
  add(nr && w2 > w0 && w2 > w1, CaseTag::NR_Case3);
  add(res && c1 && b >= a / 2 && b <= 2 * a, CaseTag::R_1a);
  add(res && c1 && b < a / 2, CaseTag::R_1b);
  add(res && c1 && b > 2 * a, CaseTag::R_1c);
  add(res && c2 && Lmax >= N2, CaseTag::R_2a);
  add(res && c2 && Lmax < N2, CaseTag::R_2b);
  add(res && !c1 && !c2 && c3 && Lmax >= N0, CaseTag::R_3_high);
  add(res && !c1 && !c2 && c3 && Lmax < N0, CaseTag::R_3_low);
  return out;
}

LatticeFunction point_mass(double dtau, LatticePoint p, cplx v) {
  LatticeFunction f(dtau);
  f.add(p, v);
  return f;
}

}  // namespace

TEST(EstimateParams, Validation) {
  EXPECT_NO_THROW(kDefault.validate());
  EstimateParams p;
  p.delta1 = 0.11;  // > 2 delta2
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.delta1 = 0.04;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.eps = 0.4;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Classifier, Examples) {
  // n = (8,-8), |n.n2| = 64, largest modulation on the output
  auto t = InteractionTriple::from_inputs(-64, {8, 0}, -64, {0, 8});
  EXPECT_EQ(classify_interaction(t, kDefault), CaseTag::NR_Case1);
  // n = (1,0) orthogonal to n2 = (0,40), all modulations tiny
  t = InteractionTriple::from_inputs(-1601, {1, 40}, -1600, {0, 40});
  ASSERT_EQ(t.n, (FreqVec{1, 0}));
  EXPECT_EQ(classify_interaction(t, kDefault), CaseTag::R_2b);
  const auto b = DyadicTriple::of(t);
  EXPECT_LT(b.Lmax(), b.N2);
  t = InteractionTriple::from_inputs(3, {0, 0}, 1, {2, 5});
  EXPECT_EQ(classify_interaction(t, kDefault), CaseTag::ZeroMode);
  EXPECT_EQ(to_string(CaseTag::R_3_high), "R-3-high");
}

TEST(Classifier, TiesGoToLowestIndex) {
  StaticClass c;
  c.kind = StaticClass::Kind::nonresonant;
  EXPECT_EQ(finish_class(c, 5, -5, 5), CaseTag::NR_Case1);
  EXPECT_EQ(finish_class(c, 1, -5, 5), CaseTag::NR_Case2);
  EXPECT_EQ(finish_class(c, 1, 2, 5), CaseTag::NR_Case3);
}

TEST(Classifier, PartitionAgainstPredicates) {
  const int S = 4, tm = 6;
  std::array<std::uint64_t, kCaseCount> counts{};
  std::uint64_t total = 0;
  for (int a1 = -S; a1 <= S; ++a1)
    for (int b1 = -S; b1 <= S; ++b1)
      for (int a2 = -S; a2 <= S; ++a2)
        for (int b2 = -S; b2 <= S; ++b2)
          for (int t1 = -tm; t1 <= tm; ++t1)
            for (int t2 = -tm; t2 <= tm; ++t2) {
              const auto t = InteractionTriple::from_inputs(t1, {a1, b1}, t2, {a2, b2});
              const auto tag = classify_interaction(t, kDefault);
              const auto blk = DyadicTriple::of(t);
              const auto pred = predicate_tags(t.n, t.n1, t.n2, t.sigma(), t.sigma1(), t.sigma2(), blk.N0,
                                               blk.N2, blk.Lmax());
              ASSERT_EQ(pred.size(), 1u);
              ASSERT_EQ(pred[0], tag);
              ++counts[std::size_t(tag)];
              ++total;
            }
  const auto scan = decompose_scan(S, tm, kDefault);
  EXPECT_EQ(scan.total, total);
  EXPECT_EQ(scan.counts, counts);
  std::uint64_t sum = 0;
  for (auto c : scan.counts) sum += c;
  EXPECT_EQ(sum, scan.total);
}

TEST(Classifier, FullScanPartitionAndPhaseBound) {
  const auto scan = decompose_scan(16, 20, kDefault);
  std::uint64_t sum = 0;
  for (auto c : scan.counts) sum += c;
  EXPECT_EQ(sum, scan.total);
  EXPECT_EQ(scan.total, std::uint64_t(33 * 33) * (33 * 33) * 41 * 41);
  EXPECT_EQ(scan.phaseBoundViolations, 0u);
  for (auto tag : kAllCases) EXPECT_GT(scan.counts[std::size_t(tag)], 0u) << to_string(tag);
}

TEST(Classifier, SumConventionRelabels) {
  Rng rng(4);
  for (int k = 0; k < 500; ++k) {
    const FreqVec n1{int(rng.integer(-9, 9)), int(rng.integer(-9, 9))};
    const FreqVec n2{int(rng.integer(-9, 9)), int(rng.integer(-9, 9))};
    const double t1 = double(rng.integer(-50, 50)), t2 = double(rng.integer(-50, 50));
    const auto s = InteractionTriple::from_inputs(t1, n1, t2, n2, Convention::sum);
    const auto d = InteractionTriple::from_inputs(s.tau, s.n, t2, n2);
    EXPECT_EQ(classify_interaction(s, kDefault), classify_interaction(d, kDefault));
    EXPECT_TRUE(phase_lower_bound_holds(s) || classify_interaction(s, kDefault) != CaseTag::NR_Case1);
  }
}

TEST(BilinearStrichartz, ZeroAndSingleMode) {
  const double dtau = 0.5;
  const LatticePoint p1{10, {3, 1}}, p2{4, {1, 1}};
  const auto u1 = point_mass(dtau, p1, cplx(2, 1));
  const DyadicTriple blk = DyadicTriple::of(InteractionTriple::from_inputs(5.0, p1.n, 2.0, p2.n));
  EXPECT_EQ(blk.N0, 2);
  LatticeFunction zero(dtau);
  EXPECT_EQ(bilinear_strichartz_ratio(u1, zero, blk.N0, blk), 0.0);
  const auto u2 = point_mass(dtau, p2, cplx(0, -3));
  // one output point with value dtau/sqrt(2pi) * a * conj(b)
  const double num = dtau / std::sqrt(2 * pi) * std::abs(cplx(2, 1)) * 3 * std::sqrt(dtau);
  const double den = bilinear_strichartz_bound(blk) * std::abs(cplx(2, 1)) * std::sqrt(dtau) * 3 * std::sqrt(dtau);
  EXPECT_NEAR(bilinear_strichartz_ratio(u1, u2, blk.N0, blk), num / den, 1e-14);
  DyadicTriple wrong = blk;
  wrong.L1 = 64;
  EXPECT_THROW(bilinear_strichartz_ratio(u1, u2, blk.N0, wrong), ValidationError);
}

TEST(BilinearStrichartz, LatticeConvolutionMatchesDenseProduct) {
  const SpaceGrid g(16, 16);
  const TimeWindow w(2 * pi, 32);  // dtau = 1
  SpacetimeField u(g, w, Rep::fourier), v(g, w, Rep::fourier);
  Rng rng(2);
  // supports small enough that neither dealiasing nor tau wrap-around acts
  for (int k = -3; k <= 3; ++k)
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) {
        u.at(fft::bin_of(k, 32), fft::bin_of(a, 16), fft::bin_of(b, 16)) = rng.complex_normal();
        v.at(fft::bin_of(k, 32), fft::bin_of(a, 16), fft::bin_of(b, 16)) = rng.complex_normal();
      }
  const auto dense = from_spacetime(to_fourier(product_field(u, v, false, true)));
  const auto sparse = convolve(from_spacetime(u), from_spacetime(v), Pattern::u_vbar);
  double err = 0, ref = 0;
  for (const auto& e : sparse.entries()) {
    err = std::max(err, std::abs(e.v - dense.at(e.p)));
    ref = std::max(ref, std::abs(e.v));
  }
  EXPECT_LT(err, 1e-12 * ref);
  EXPECT_NEAR(l2_norm(sparse), l2_norm(dense), 1e-10 * l2_norm(dense));
  const auto denseUV = from_spacetime(to_fourier(product_field(u, v, false, false)));
  const auto sparseUV = convolve(from_spacetime(u), from_spacetime(v), Pattern::u_v);
  EXPECT_NEAR(l2_norm(sparseUV), l2_norm(denseUV), 1e-10 * l2_norm(denseUV));
}

TEST(BlockSampling, SupportAndDeterminism) {
  Rng a(5), b(5);
  const auto f = gaussian_block(16, 64, 1.0, a, 200);
  const auto h = gaussian_block(16, 64, 1.0, b, 200);
  EXPECT_EQ(f.size(), 200u);
  EXPECT_TRUE(supported_in(f, 16, 64));
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f.entries()[i].v, h.entries()[i].v);
  // a small block is taken whole
  const auto t = block_table(2, 1, 1.0);
  Rng c(1);
  EXPECT_EQ(std::int64_t(gaussian_block(2, 1, 1.0, c, 1000).size()), t->total());
  // the table agrees with direct enumeration
  std::int64_t direct = 0;
  for (int x = -3; x <= 3; ++x)
    for (int y = -3; y <= 3; ++y)
      for (int k = -40; k <= 40; ++k)
        if (dyadic_block_of({x, y}) == 2 && modulation_block_of(double(k), {x, y}) == 1) ++direct;
  EXPECT_EQ(direct, t->total());
}

TEST(BilinearXsb, RejectsZeroDenominator) {
  const SpaceGrid g(8, 8);
  const TimeWindow w(4.0, 64);
  const auto u = constant_field(g, w, 1.0);
  EXPECT_THROW(bilinear_xsb_ratio(u, SpacetimeField(g, w), kDefault, Pattern::u_vbar), ValidationError);
}

TEST(BilinearXsb, ConstantFieldsClosedForm) {
  const SpaceGrid g(8, 8);
  const TimeWindow w(4.0, 64);
  const auto one = constant_field(g, w, 1.0);
  // only the zero mode is present: every norm reduces to a weighted 1D norm of eta
  const CutoffProfile eta{CutoffProfile::Shape::smooth_bump, 1.0};
  auto eta_norm = [&](double b) {
    double acc = 0;
    for (std::size_t k = 0; k < w.Mt; ++k) {
      cplx c{};
      const double tau = w.tau(k);
      for (std::size_t j = 0; j < w.Mt; ++j) c += eta(w.time(j)) * std::exp(cplx(0, -tau * w.time(j)));
      c *= w.dt() / std::sqrt(2 * pi);
      acc += std::pow(1 + tau * tau, b) * std::norm(c);
    }
    return std::sqrt(acc * w.dtau());
  };
  const double expect = eta_norm(-0.5 + kDefault.delta1) / std::pow(eta_norm(0.5 + kDefault.delta2), 2);
  EXPECT_NEAR(bilinear_xsb_ratio(one, one, kDefault, Pattern::u_vbar), expect, 1e-10);
  EXPECT_NEAR(bilinear_xsb_ratio(one, one, kDefault, Pattern::u_v), expect, 1e-10);
}

TEST(BilinearXsb, LatticeSingleModes) {
  const double dtau = 1.0;
  const LatticePoint a{-7, {2, 1}}, b{3, {0, 2}};
  const auto u = point_mass(dtau, a, 1.5), v = point_mass(dtau, b, cplx(0, 2));
  const double s1 = -7 + 5, s2 = 3 + 4, s0 = -10 + 5;  // n = (2,-1)
  const double num = dtau / std::sqrt(2 * pi) * 1.5 * 2 * std::pow(1 + s0 * s0, (-0.5 + 0.08) / 2) * std::sqrt(dtau);
  const double den = 1.5 * std::pow(1 + s1 * s1, 0.55 / 2) * 2 * std::pow(1 + s2 * s2, 0.55 / 2) * dtau;
  EXPECT_NEAR(bilinear_xsb_ratio(u, v, kDefault, Pattern::u_vbar), num / den, 1e-14);
}

TEST(DualForm, ZeroSingleTermAndAttribution) {
  const double dtau = 1.0;
  const LatticePoint a{-7, {2, 1}}, b{3, {0, 2}}, q{-10, {2, -1}};
  const auto u = point_mass(dtau, a, 1.0), v = point_mass(dtau, b, 1.0);
  EXPECT_EQ(dual_trilinear_form(u, v, LatticeFunction(dtau), kDefault), 0.0);
  const auto w = point_mass(dtau, q, cplx(0, 1));
  const double s1 = -2, s2 = 7, s0 = -5;
  const double term = 1.0 / (std::pow(1 + s1 * s1, 0.55 / 2) * std::pow(1 + s2 * s2, 0.55 / 2) *
                             std::pow(1 + s0 * s0, 0.42 / 2));
  const auto r = dual_trilinear_decomposition(u, v, w, kDefault);
  EXPECT_NEAR(std::abs(r.total), term, 1e-15);
  const auto tag = classify_interaction(InteractionTriple::from_inputs(-7, a.n, 3, b.n), kDefault);
  EXPECT_EQ(r.terms[std::size_t(tag)], 1u);
  // random data: parts add up to the total
  Rng rng(8);
  const auto U = gaussian_block(8, 16, dtau, rng, 150), V = gaussian_block(4, 8, dtau, rng, 150);
  const auto W = convolve(U, V, Pattern::u_vbar);
  const auto R = dual_trilinear_decomposition(U, V, W, kDefault);
  cplx sum{};
  for (auto p : R.parts) sum += p;
  EXPECT_LT(std::abs(sum - R.total), 1e-10 * std::abs(R.total));
  EXPECT_GT(std::abs(R.total), 0.0);
}

TEST(Trilinear, SingleModeWitness) {
  const SpaceGrid g(8, 8);
  const auto v = trilinear_form(plane_wave(g, {1, 0}), plane_wave(g, {0, 1}), plane_wave(g, {1, -1}),
                                {false, true, true});
  EXPECT_NEAR(std::abs(v), std::sin(1.0), 1e-8);
  EXPECT_EQ(std::abs(trilinear_form(SpatialField(g), plane_wave(g, {0, 1}), plane_wave(g, {1, -1}),
                                    {false, true, true})),
            0.0);
}

TEST(Trilinear, MatchesSpacetimeQuadrature) {
  // the spectral value equals direct Gauss-Legendre quadrature of the
  // physical triple product (band-limited data, so space is exact)
  const SpaceGrid g(16, 16);
  const auto a = gaussian_data(g, 1, 0, 1, 2), b = gaussian_data(g, 2, 0, 1, 2), c = gaussian_data(g, 3, 0, 1, 2);
  const double x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                       0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  const double wt[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  for (int pat = 0; pat < 8; ++pat) {
    const std::array<bool, 3> cj{bool(pat & 1), bool(pat & 2), bool(pat & 4)};
    cplx q{};
    const int panels = 200;
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < 8; ++i) {
        const double t = (p + 0.5 + 0.5 * x[i]) / panels;
        const auto A = free_propagate(a, t), B = free_propagate(b, t), C = free_propagate(c, t);
        cplx m{};
        for (std::size_t j = 0; j < A.values.size(); ++j) {
          const cplx va = cj[0] ? std::conj(A.values[j]) : A.values[j];
          const cplx vb = cj[1] ? std::conj(B.values[j]) : B.values[j];
          const cplx vc = cj[2] ? std::conj(C.values[j]) : C.values[j];
          m += va * vb * vc;
        }
        q += m / double(A.values.size()) * (0.5 * wt[i] / panels);
      }
    EXPECT_NEAR(std::abs(trilinear_form(a, b, c, cj) - q), 0.0, 1e-9) << pat;
  }
}

TEST(HighModulation, ZeroSingleTermAndHypotheses) {
  const double dtau = 1.0;
  // n1 = (17,4) in P_32, n2 = (16,4) in P_32, n = (1,0) in P_1
  const LatticePoint a{-305 + 40, {17, 4}}, b{-272 + 0, {16, 4}};
  const LatticePoint q{a.k - b.k, a.n - b.n};
  const auto blk = DyadicTriple::of(InteractionTriple::from_inputs(double(a.k), a.n, double(b.k), b.n));
  ASSERT_EQ(blk.N1, 32);
  ASSERT_EQ(blk.N2, 32);
  ASSERT_GE(blk.Lmax(), blk.N2);
  BlockField f{point_mass(dtau, a, 2.0), blk.N1, blk.L1};
  BlockField g{point_mass(dtau, b, 3.0), blk.N2, blk.L2};
  BlockField h0{LatticeFunction(dtau), blk.N0, blk.L0};
  EXPECT_EQ(high_modulation_ratio(f, g, h0, blk), 0.0);
  BlockField h{point_mass(dtau, q, 0.5), blk.N0, blk.L0};
  const double k = 0.01;
  const double den = std::pow(double(blk.L1), 0.5 + k) * std::pow(double(blk.L2), 0.5 + k) *
                     std::pow(double(blk.L0), 0.25 + k) * std::pow(32.0, -k) * std::pow(dtau, 1.5);
  EXPECT_NEAR(high_modulation_ratio(f, g, h, blk), dtau * dtau / den, 1e-14);
  DyadicTriple bad = blk;
  bad.L1 = 1, bad.L0 = 1, bad.L2 = 1;
  f.L = g.L = h.L = 1;
  EXPECT_THROW(high_modulation_ratio(f, g, h, bad), ValidationError);
}

TEST(LowModulation, AngularCutoffAndOrthogonalPair) {
  const double dtau = 1.0;
  // n = (1,0) orthogonal to n2 = (0,40); n1 = (1,40)
  const LatticePoint a{-1601, {1, 40}}, b{-1600, {0, 40}};
  const LatticePoint q{a.k - b.k, a.n - b.n};
  const auto blk = DyadicTriple::of(InteractionTriple::from_inputs(double(a.k), a.n, double(b.k), b.n));
  BlockField f{point_mass(dtau, a, 2.0), blk.N1, blk.L1};
  BlockField g{point_mass(dtau, b, 1.0), blk.N2, blk.L2};
  const auto h = point_mass(dtau, q, 4.0);
  const double expect = dtau * dtau * 8 / (std::pow(double(blk.Lmed()), 0.375) *
                                           std::pow(double(blk.Lmax()), 0.375) * 8 * std::pow(dtau, 1.5));
  EXPECT_NEAR(low_modulation_ratio(f, g, h, blk, 0.01), expect, 1e-14);
  // a slightly tilted pair is removed by a small theta: n = (1,0), n.n2 = 1
  const LatticePoint b3{-1601, {1, 40}}, a3{-1604 + 1, {2, 40}};
  const LatticePoint q3{a3.k - b3.k, a3.n - b3.n};
  const auto blk3 = DyadicTriple::of(InteractionTriple::from_inputs(double(a3.k), a3.n, double(b3.k), b3.n));
  BlockField f3{point_mass(dtau, a3, 1.0), blk3.N1, blk3.L1};
  BlockField g3{point_mass(dtau, b3, 1.0), blk3.N2, blk3.L2};
  EXPECT_EQ(low_modulation_ratio(f3, g3, point_mass(dtau, q3, 1.0), blk3, 1e-4), 0.0);
  EXPECT_GT(low_modulation_ratio(f3, g3, point_mass(dtau, q3, 1.0), blk3, 0.1), 0.0);
}

TEST(ResonantFiber, ShellsAndEnumeration) {
  ResonantFiberSpec s;
  s.n = {3, 0};
  s.blocks = DyadicTriple(4, 64, 64, 64, 32, 32);
  s.j1 = 40, s.j2 = 43;
  EXPECT_EQ(resonant_fiber_size(s), 0);
  // n1 ~ (0,40) region: |n1|^2 - |n1 - n|^2 = 6 n1.x - 9
  s.j1 = 40, s.j2 = 40;
  s.J1 = {{1, 40}, 4.0};
  s.J2 = {{-2, 40}, 4.0};
  s.theta = 0.05;
  s.tau1 = -1601 + 20;
  s.tau = s.tau1 - (-1604 + 20);
  const auto k = resonant_fiber_size(s);
  // brute-force oracle over a large box
  std::int64_t brute = 0;
  for (int x = -80; x <= 80; ++x)
    for (int y = -80; y <= 80; ++y) {
      const FreqVec n1{x, y}, n2 = n1 - s.n;
      if (norm_sq_int(n1 - s.J1.center) > 16 || norm_sq_int(n2 - s.J2.center) > 16) continue;
      const double r1 = norm(n1), r2 = norm(n2);
      if (!(r1 > 40 && r1 <= 41 && r2 > 40 && r2 <= 41)) continue;
      if (dyadic_block_of(n1) != 64 || dyadic_block_of(n2) != 64) continue;
      if (modulation_block_of(s.tau1, n1) != 32 || modulation_block_of(s.tau1 - s.tau, n2) != 32) continue;
      if (!(std::abs(double(dot(s.n, n2))) / (3 * r2) < 0.05)) continue;
      ++brute;
    }
  EXPECT_EQ(k, brute);
  EXPECT_GT(k, 0);
  EXPECT_LE(double(k), 4 * fiber_bound(s.blocks));
  EXPECT_EQ(fiber_bound(s.blocks), 4.0);
}

TEST(NearOrthogonality, ExamplesAndExhaustiveScan) {
  EXPECT_TRUE(near_orthogonality_check({1, 0}, {0, 5}, 0.2));
  EXPECT_TRUE(near_orthogonality_check({1, 0}, {1, 0}, 0.1));
  EXPECT_THROW(near_orthogonality_check({0, 0}, {1, 0}, 0.1), ValidationError);
  std::vector<FreqVec> disc;
  for (int x = -64; x <= 64; ++x)
    for (int y = -64; y <= 64; ++y)
      if ((x || y) && x * x + y * y <= 64 * 64) disc.push_back({x, y});
  std::uint64_t active = 0, bad = 0;
  for (double th : {0.3, 0.1, 0.01})
    for (const auto& n : disc) {
      const double rn = norm(n);
      for (const auto& m : disc) {
        if (std::abs(double(dot(n, m))) >= th * rn * norm(m)) continue;
        ++active;
        if (!near_orthogonality_check(n, m, th)) ++bad;
      }
    }
  EXPECT_EQ(bad, 0u);
  EXPECT_GT(active, 0u);
}

TEST(SectorPigeonhole, DistinctSectorsBounded) {
  for (std::int64_t N : {16, 32, 64}) {
    const auto r = sector_pigeonhole_scan(N, 0.1);
    EXPECT_GT(r.pairs, 0u);
    EXPECT_LE(r.maxDistinct, 8) << N;
  }
}
