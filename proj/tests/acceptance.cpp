// Acceptance run: one PASS/FAIL line per criterion. Tolerances and runtime
// limits are fixed here; the exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "qnls/probes.hpp"
#include "qnls/solver.hpp"

using namespace qnls;

namespace {

constexpr double kGrowthTol = 0.10;  // allowed growth over the last doubling
constexpr std::uint64_t kSeed = 7;

struct Verdict {
  bool ok = true;
  std::ostringstream note;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note << " [violated: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, double limitSeconds, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.ok = false;
    v.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limitSeconds) {
    v.ok = false;
    v.note << " [over time limit]";
  }
  if (!v.ok) ++failures;
  std::printf("%s %2d %s:%s (%.1fs of %.0fs)\n", v.ok ? "PASS" : "FAIL", id, name, v.note.str().c_str(), secs,
              limitSeconds);
  std::fflush(stdout);
}

void require_stable(Verdict& v, const RatioReport& r) {
  v.note << ' ' << r.constantLabel << " max=" << r.maxRatio << " growth=" << r.growth();
  v.require(std::isfinite(r.maxRatio) && r.maxRatio > 0, r.constantLabel + " finite and positive");
  v.require(r.stable(kGrowthTol), r.constantLabel + " stable");
}

SpatialField smooth_data(std::uint64_t seed, double l2) {
  return gaussian_data(SpaceGrid(16, 16), seed, 0.0, l2, 3, 2.0);
}

}  // namespace

int main() {
  std::printf("acceptance: growth tolerance %.2f, seed %llu\n", kGrowthTol, static_cast<unsigned long long>(kSeed));

  criterion(1, "phase identity, exhaustive |n_i|_inf <= 32", 10, [](Verdict& v) {
    std::uint64_t checked = 0, bad = 0;
    for (int a1 = -32; a1 <= 32; ++a1)
      for (int a2 = -32; a2 <= 32; ++a2)
        for (int b1 = -32; b1 <= 32; ++b1)
          for (int b2 = -32; b2 <= 32; ++b2) {
            const FreqVec n1{a1, a2}, n2{b1, b2};
            const double tau1 = double((a1 * 7 + b2 * 3) % 11), tau2 = double((a2 * 5 - b1) % 13);
            const auto d = InteractionTriple::from_inputs(tau1, n1, tau2, n2);
            const auto s = InteractionTriple::from_inputs(tau1, n1, tau2, n2, Convention::sum);
            bad += phase_sum(d) != double(-2 * dot(d.n, n2));
            bad += phase_sum(s) != double(2 * dot(n1, n2));
            checked += 2;
          }
    v.note << " triples=" << checked << " mismatches=" << bad;
    v.require(bad == 0, "zero error");
  });

  criterion(2, "counting sweep", 120, [](Verdict& v) {
    CountingSweepConfig c;
    c.seed = kSeed;
    const auto r = counting_sweep(c);
    v.note << " instances=" << r.trials;
    require_stable(v, r);
  });

  criterion(3, "bilinear Strichartz", 180, [](Verdict& v) {
    StrichartzSweepConfig c;
    c.seed = kSeed;
    const auto r = strichartz_sweep(c);
    v.require(r.trials == 10000 && c.Nmax == 64 && c.Lmax == 256, "sweep size");
    require_stable(v, r);
  });

  criterion(4, "bilinear X^{s,b} by case", 300, [](Verdict& v) {
    XsbSweepConfig c;
    c.Nlist = {1, 2, 4, 8, 16};
    c.Llist = {1, 4, 16};
    c.trialsPerPair = 1000;
    c.params.s = 0, c.params.eps = 0.1, c.params.delta2 = 0.05, c.params.delta1 = 0.08;
    c.seed = kSeed;
    const auto r = xsb_sweep(c);
    require_stable(v, r);
    double envelope = 0;
    for (auto& [k, x] : r.extra["cases"].items()) envelope = std::max(envelope, x["halfRangeMax"].get<double>());
    double worst = 0;
    for (auto& [k, x] : r.extra["cases"].items()) {
      const double m = x["max"].get<double>();
      worst = std::max(worst, m / envelope);
      v.require(std::isfinite(m) && m <= (1 + kGrowthTol) * envelope, "case " + k + " bounded by the envelope");
    }
    v.note << " cases=" << r.extra["cases"].size() << " worstCase/envelope=" << worst;
  });

  criterion(5, "trilinear form", 120, [](Verdict& v) {
    const double w = std::abs(trilinear_form(ModeList{{{1, 0}, 1.0}}, ModeList{{{0, 1}, 1.0}},
                                             ModeList{{{1, -1}, 1.0}}, {false, true, true}));
    v.note << " witnessError=" << std::abs(w - std::abs(std::sin(1.0)));
    v.require(std::abs(w - std::abs(std::sin(1.0))) <= 1e-8, "single-mode witness");
    TrilinearSweepConfig c;
    c.seed = kSeed;
    const auto r = trilinear_sweep(c);
    v.require(r.trials == 10000, "sweep size");
    require_stable(v, r);
  });

  criterion(6, "modulation lemmas and fibers", 180, [](Verdict& v) {
    ModulationSweepConfig c;
    c.seed = kSeed;
    v.require(c.N2max == 256, "N2 range");
    const auto m = modulation_sweeps(c);
    for (const auto* r : {&m.high, &m.low, &m.fiber}) require_stable(v, *r);
  });

  criterion(7, "L^4 probe", 120, [](Verdict& v) {
    L4Config c;
    c.seed = kSeed;
    c.svals = {0.0, 0.2};
    const auto r = l4_loss_probe(c);
    const auto& loss = r.series[0];
    const auto& ctl = r.series[1];
    v.note << " s=0 slope=" << loss.slope << " s=0.2 max=" << ctl.fullRangeMax << " growth=" << ctl.growth();
    v.require(std::isfinite(ctl.fullRangeMax) && ctl.growth() <= 1 + kGrowthTol, "s=0.2 bounded and stable");
    v.require(loss.nondecreasing, "s=0 sequence nondecreasing");
  });

  criterion(8, "solver oracles", 60, [](Verdict& v) {
    const SpaceGrid g(16, 16);
    SolverConfig cfg;
    cfg.grid = g, cfg.dt = 1e-3, cfg.storeStates = false;
    cfg.Tend = 1.2;
    const auto a = evolve(cfg, SpatialField(g, cplx(0, -1)));
    const double ta = a.blowup ? a.blowup->Tstar : NAN;
    v.require(std::abs(ta - 1.0) <= 0.01, "T* of -i");
    cfg.Tend = 2.0;
    const auto b = evolve(cfg, SpatialField(g, cplx(1, 0)));
    const double tb = b.blowup ? b.blowup->Tstar : NAN;
    v.require(std::abs(tb - std::numbers::pi / 2) <= 0.02 * std::numbers::pi / 2, "T* of 1");
    cfg.grid = SpaceGrid(4, 4), cfg.Tend = 5.0;
    const auto c = evolve(cfg, SpatialField(cfg.grid, cplx(0, 1)));
    double worst = c.blowup ? INFINITY : 0.0;
    for (std::size_t k = 0; k < c.times.size(); ++k)
      worst = std::max(worst, std::abs(c.meanTrace[k] - cplx(0, 1 / (1 + c.times[k]))));
    v.require(worst <= 1e-6 && c.times.size() == 5001, "i/(1+t) on [0,5]");
    const double slope = strang_convergence_slope(smooth_data(3, 0.5), 0.5, 0.05, 3);
    v.require(std::abs(slope - 2) <= 0.1, "Strang slope");
    v.note << " T*(-i)=" << ta << " T*(1)=" << tb << " decayErr=" << worst << " slope=" << slope;
  });

  criterion(9, "mean structure laws", 60, [](Verdict& v) {
    double drift = 0, rise = 0, law = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto u0 = smooth_data(seed, 0.3 * double(seed));
      SolverConfig cfg;
      cfg.grid = u0.grid, cfg.dt = 1e-3, cfg.Tend = 0.5, cfg.storeStates = false;
      const auto tr = evolve(cfg, u0);
      v.require(!tr.blowup, "no blow-up on the test window");
      for (std::size_t k = 1; k < tr.times.size(); ++k) {
        drift = std::max(drift, std::abs(tr.meanTrace[k].real() - tr.meanTrace[0].real()));
        rise = std::max(rise, tr.meanTrace[k].imag() - tr.meanTrace[k - 1].imag());
      }
      law = std::max(law, mean_derivative_check(tr));
    }
    v.note << " reDrift=" << drift << " maxImIncrease=" << rise << " meanLawErr=" << law;
    v.require(drift <= 1e-10, "Re mean conserved");
    v.require(rise <= 0, "Im mean nonincreasing");
    v.require(law <= 1e-3, "mean law");
  });

  criterion(10, "Picard contraction for small data", 120, [](Verdict& v) {
    const auto u0 = smooth_data(21, 0.1);
    PicardConfig pc;
    pc.T = 0.1, pc.Mt = 256, pc.iterations = 6;
    const auto [u, rep] = picard_iterate(u0, pc);
    double worstRatio = 0;
    for (double r : rep.ratios) worstRatio = std::max(worstRatio, r);
    v.require(!rep.diverged && !rep.ratios.empty() && worstRatio <= 0.5, "ratios <= 1/2");
    SolverConfig cfg;
    cfg.grid = u0.grid, cfg.dt = 1e-3, cfg.Tend = 0.1;
    const auto tr = evolve(cfg, u0);
    double gap = 0;
    for (double t : {0.05, 0.1})
      gap = std::max(gap, l2_norm(picard_state_at(u, t) - tr.states[std::size_t(std::llround(t / cfg.dt))]));
    v.require(gap <= 1e-4, "agreement with split-step");
    v.note << " maxRatio=" << worstRatio << " splitGap=" << gap;
  });

  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures;
}
