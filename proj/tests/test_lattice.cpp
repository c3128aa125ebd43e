#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "qnls/lattice.hpp"
#include "qnls/rng.hpp"

using namespace qnls;
using std::numbers::pi;

TEST(DyadicBlock, Examples) {
  EXPECT_EQ(dyadic_block_of({3, 0}), 4);
  EXPECT_EQ(dyadic_block_of({0, 0}), 1);
  EXPECT_EQ(dyadic_block_of({1, 1}), 2);
  EXPECT_EQ(dyadic_block_of({1, 0}), 1);
  EXPECT_EQ(dyadic_block_of({4, 0}), 4);
  EXPECT_EQ(dyadic_block_of({4, 1}), 8);
}

TEST(DyadicBlock, AnisotropicSymbol) {
  const TorusGeometry g(2.0, 1.0);
  EXPECT_DOUBLE_EQ(norm_sq({2, 1}, g), 2.0);
  EXPECT_EQ(dyadic_block_of({2, 1}, g), 2);
  EXPECT_THROW(TorusGeometry(0.0, 1.0), ValidationError);
}

TEST(DyadicBlock, PartitionOfLattice) {
  // every n != 0 lies in exactly one shell N/2 < |n| <= N
  for (int a = -40; a <= 40; ++a)
    for (int b = -40; b <= 40; ++b) {
      const FreqVec n{a, b};
      int hits = 0;
      for (std::int64_t N = 1; N <= 128; N *= 2) {
        const double r = std::sqrt(double(norm_sq_int(n)));
        const bool in = n.is_zero() ? N == 1 : (double(N) / 2 < r && r <= double(N));
        hits += in;
        if (in) EXPECT_EQ(dyadic_block_of(n), N);
      }
      EXPECT_EQ(hits, 1) << a << "," << b;
    }
}

TEST(ModulationBlock, Examples) {
  EXPECT_EQ(modulation_block_of(-5, {1, 0}), 4);
  EXPECT_EQ(modulation_block_of(-1, {1, 0}), 1);
  EXPECT_EQ(modulation_block_of(0, {2, 1}), 8);
  EXPECT_EQ(modulation_block_of(-4.5, {0, 0}), 8);
}

TEST(PhaseSum, Examples) {
  auto t = InteractionTriple::from_inputs(0, {1, 0}, 0, {0, 1});
  EXPECT_EQ(t.n, (FreqVec{1, -1}));
  EXPECT_DOUBLE_EQ(phase_sum(t), 2.0);
  auto z = InteractionTriple::from_inputs(0, {5, -3}, 0, {0, 0});
  EXPECT_DOUBLE_EQ(phase_sum(z), 0.0);
}

TEST(PhaseSum, RejectsBrokenConstraint) {
  auto t = InteractionTriple::from_inputs(0, {1, 0}, 0, {0, 1});
  t.n = {3, 3};
  EXPECT_THROW(phase_sum(t), ValidationError);
}

TEST(PhaseSum, SumConvention) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const FreqVec a{int(rng.integer(-30, 30)), int(rng.integer(-30, 30))};
    const FreqVec b{int(rng.integer(-30, 30)), int(rng.integer(-30, 30))};
    const auto t = InteractionTriple::from_inputs(double(rng.integer(-9, 9)), a, double(rng.integer(-9, 9)), b,
                                                  Convention::sum);
    EXPECT_EQ(phase_sum(t), double(2 * dot(a, b)));
  }
}

TEST(PhaseSum, IdentityIsEvenIntegerOnRandomTriples) {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const FreqVec a{int(rng.integer(-100, 100)), int(rng.integer(-100, 100))};
    const FreqVec b{int(rng.integer(-100, 100)), int(rng.integer(-100, 100))};
    const auto t = InteractionTriple::from_inputs(double(rng.integer(-50, 50)), a, double(rng.integer(-50, 50)), b);
    const double v = phase_sum(t);
    EXPECT_EQ(v, double(phase_closed_form(t)));
    EXPECT_EQ(std::fmod(v, 2.0), 0.0);
  }
}

TEST(DyadicTriple, OrderStatistics) {
  for (std::int64_t a = 1; a <= 64; a *= 2)
    for (std::int64_t b = 1; b <= 64; b *= 2)
      for (std::int64_t c = 1; c <= 64; c *= 2) {
        const DyadicTriple d(1, 1, 1, a, b, c);
        EXPECT_LE(d.Lmin(), d.Lmed());
        EXPECT_LE(d.Lmed(), d.Lmax());
        EXPECT_EQ(d.Lmin() * d.Lmed() * d.Lmax(), a * b * c);
      }
  EXPECT_THROW(DyadicTriple(3, 1, 1, 1, 1, 1), ValidationError);
}

TEST(SectorIndex, Examples) {
  EXPECT_EQ(sector_index({1, 0}, pi / 2), 0);
  EXPECT_EQ(sector_index({0, 1}, pi / 2), 1);
  // arg = 5pi/4 = 3.92699..., floor(392.699) = 392
  EXPECT_EQ(sector_index({-1, -1}, 0.01), 392);
  EXPECT_THROW(sector_index({0, 0}, 0.1), std::domain_error);
  EXPECT_THROW(sector_index({1, 0}, 7.0), ValidationError);
}

TEST(SectorIndex, SectorsPartitionNonzeroLattice) {
  for (double w : {0.37, 0.05, 2 * pi / 7}) {
    AngularSector probe{16, w, 0};
    const auto count = probe.count();
    for (int a = -16; a <= 16; ++a)
      for (int b = -16; b <= 16; ++b) {
        if (a == 0 && b == 0) continue;
        const FreqVec n{a, b};
        int hits = 0;
        for (std::int64_t l = 0; l < count; ++l) {
          const double lo = l * w, hi = (l + 1) * w;
          hits += (arg0(n) >= lo && arg0(n) < hi);
        }
        EXPECT_EQ(hits, 1);
        const auto idx = sector_index(n, w);
        EXPECT_GE(idx, 0);
        EXPECT_LT(idx, count);
        AngularSector s{dyadic_block_of(n), w, idx};
        EXPECT_TRUE(s.contains(n));
      }
  }
}

TEST(CountingBound, Examples) {
  EXPECT_NEAR(counting_bound({100, 1, 1, 0, pi / 4, 0}), 8 / pi + 1, 1e-12);
  EXPECT_NEAR(counting_bound({100, 1, 1, 0, pi / 4, 0}), 3.546, 1e-3);
  EXPECT_DOUBLE_EQ(counting_bound({100, 0, 0, 0, pi / 4, 0}), 1.0);
  EXPECT_NEAR(counting_bound({100, 2, 3, 0, 0.1, 0}), 93.0, 1e-9);
}

// Frozen values come from an independent full-square enumeration (python oracle).
TEST(CountingCount, DegenerateSliceIsEmpty) {
  EXPECT_EQ(counting_count({10.5, 1e-9, 1e-9, 0.5, pi / 4, 0}), 0);
}

TEST(CountingCount, EnumerationOracleValues) {
  const CountingInstance a{100, 1, 1, 0, pi / 4, 0};
  EXPECT_EQ(counting_count(a), 6);
  EXPECT_LE(double(counting_count(a)), 2.0 * counting_bound(a));
  EXPECT_EQ(counting_count({64, 1, 1, 32, pi / 4, 0.3}), 1);
  EXPECT_EQ(counting_count({64, 2, 0.5, 50, pi / 8, 1.1}), 3);
}

TEST(CountingCount, RotationSweep) {
  std::int64_t best = 0;
  for (int k = 0; k < 64; ++k)
    best = std::max(best, counting_count({64, 1, 1, 0, pi / 4, 2 * pi * k / 64}));
  EXPECT_EQ(best, 6);
  EXPECT_LE(double(best), 2.0 * counting_bound({64, 1, 1, 0, pi / 4, 0}));
  const int m32[8] = {6, 2, 2, 2, 2, 3, 3, 2};
  for (int k = 0; k < 8; ++k) EXPECT_EQ(counting_count({64, 1, 1, 32, pi / 4, 2 * pi * k / 64}), m32[k]);
}

TEST(CountingCount, HypothesisFlag) {
  EXPECT_FALSE((CountingInstance{16, 1, 1, 0, pi / 4, 0}.in_hypothesis()));
  EXPECT_TRUE((CountingInstance{4096, 0.5, 0.5, 100, pi / 4, 0}.in_hypothesis()));
  EXPECT_FALSE((CountingInstance{4096, 0.5, 0.5, 100, pi / 2, 0}.in_hypothesis()));
}
