#pragma once

// Seeded sweep drivers. Each driver runs independent trials on a worker pool,
// keeps every outcome in its own slot, and merges them into a RatioReport in
// index order, so results do not depend on the thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "qnls/estimates.hpp"
#include "qnls/fft.hpp"
#include "qnls/lattice.hpp"
#include "qnls/lattice_fn.hpp"
#include "qnls/parallel.hpp"
#include "qnls/rng.hpp"

namespace qnls {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const EstimateParams& p) {
  return ojson{{"eps", p.eps},       {"delta1", p.delta1}, {"delta2", p.delta2},
               {"s", p.s},           {"c_nr", p.c_nr},     {"kappa", p.kappa}};
}

inline ojson blocks_json(const DyadicTriple& b) {
  return ojson{{"N0", b.N0}, {"N1", b.N1}, {"N2", b.N2}, {"L0", b.L0}, {"L1", b.L1}, {"L2", b.L2}};
}

/// One trial: its ratio, whether it lies in the half sweep range, and a descriptor.
struct TrialOutcome {
  double ratio = 0;
  bool inHalf = true;
  ojson blocks = ojson::object();
  std::vector<double> extras;  // per-driver side channels (e.g. per-case ratios)
};

struct RatioReport {
  std::string estimate;
  std::string constantLabel;
  ojson params = ojson::object();
  std::uint64_t trials = 0;
  double maxRatio = 0;
  std::uint64_t witnessSeed = 0;
  ojson witnessBlocks = ojson::object();
  std::vector<std::pair<double, double>> quantiles;
  ojson sweepRange = ojson::object();
  double halfRangeMax = 0;  // max over trials inside the half range
  ojson extra = ojson::object();

  /// maxRatio / halfRangeMax; 1 when both vanish.
  double growth() const {
    if (halfRangeMax > 0) return maxRatio / halfRangeMax;
    return maxRatio > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  bool stable(double tol = 0.10) const { return std::isfinite(maxRatio) && growth() <= 1.0 + tol; }

  ojson to_json() const {
    ojson q = ojson::array();
    for (auto [p, v] : quantiles) q.push_back(ojson::array({p, v}));
    return ojson{{"estimate", estimate},
                 {"constantLabel", constantLabel},
                 {"params", params},
                 {"trials", trials},
                 {"maxRatio", maxRatio},
                 {"witnessSeed", witnessSeed},
                 {"witnessBlocks", witnessBlocks},
                 {"quantiles", q},
                 {"sweepRange", sweepRange},
                 {"halfRangeMax", halfRangeMax},
                 {"growth", std::isfinite(growth()) ? ojson(growth()) : ojson("inf")},
                 {"stable", stable()},
                 {"extra", extra}};
  }
};

inline constexpr std::array<double, 4> kReportQuantiles = {0.5, 0.9, 0.99, 1.0};

/// Nearest-rank quantile of a sorted sample.
inline double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  auto r = std::size_t(std::ceil(q * double(sorted.size())));
  r = std::clamp<std::size_t>(r, 1, sorted.size());
  return sorted[r - 1];
}

/// Merges outcomes in index order; the witness is the first trial attaining the max.
inline RatioReport aggregate(std::string estimate, std::string label, ojson params, ojson range,
                             const std::vector<TrialOutcome>& out, const std::vector<std::uint64_t>& seeds) {
  RatioReport r;
  r.estimate = std::move(estimate);
  r.constantLabel = std::move(label);
  r.params = std::move(params);
  r.sweepRange = std::move(range);
  r.trials = out.size();
  std::vector<double> v;
  v.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out[i].ratio;
    if (!std::isfinite(x)) throw std::runtime_error("non-finite ratio in trial " + std::to_string(i));
    v.push_back(x);
    if (i == 0 || x > r.maxRatio) {
      r.maxRatio = x;
      r.witnessSeed = seeds[i];
      r.witnessBlocks = out[i].blocks;
    }
    if (out[i].inHalf) r.halfRangeMax = std::max(r.halfRangeMax, x);
  }
  std::sort(v.begin(), v.end());
  for (double q : kReportQuantiles) r.quantiles.push_back({q, nearest_rank(v, q)});
  return r;
}

/// Runs fn(rng, index) for every trial with seed mix_seed(seed, index).
template <class Fn>
std::pair<std::vector<TrialOutcome>, std::vector<std::uint64_t>> run_trials(std::size_t trials, std::uint64_t seed,
                                                                            unsigned threads, Fn&& fn) {
  std::vector<TrialOutcome> out(trials);
  std::vector<std::uint64_t> seeds(trials);
  for (std::size_t i = 0; i < trials; ++i) seeds[i] = mix_seed(seed, i);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng(seeds[i]);
    out[i] = fn(rng, i);
  });
  return {std::move(out), std::move(seeds)};
}

inline std::vector<std::int64_t> dyadics_up_to(std::int64_t hi) {
  std::vector<std::int64_t> v;
  for (std::int64_t x = 1; x <= hi; x *= 2) v.push_back(x);
  return v;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[std::size_t(rng.integer(0, std::int64_t(v.size()) - 1))];
}

inline FreqVec random_point(Rng& rng, std::int64_t N) { return pick(rng, spatial_block_points(N)); }

// ---------------------------------------------------------------------------
// Counting sweep

struct CountingSweepConfig {
  std::vector<std::int64_t> Nlist = {16, 32, 64, 128, 256};
  int rotations = 64;
  std::vector<double> mus = {0.5, 1.0, 2.0};
  std::vector<double> nus = {0.5, 1.0, 2.0};
  std::vector<double> alphas = {std::numbers::pi / 16, std::numbers::pi / 8, std::numbers::pi / 4};
  std::vector<double> stripAngles = {0.5, 1.0, 2.0};  // M = N cos(a * alpha) - nu / 2
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    if (Nlist.empty() || rotations < 1 || mus.empty() || nus.empty() || alphas.empty() || stripAngles.empty())
      throw ValidationError("counting sweep needs nonempty ranges");
    for (auto N : Nlist)
      if (!is_dyadic(N)) throw ValidationError("counting sweep N must be dyadic");
  }
};

inline std::vector<CountingInstance> counting_instances(const CountingSweepConfig& c) {
  std::vector<CountingInstance> v;
  for (auto N : c.Nlist)
    for (int r = 0; r < c.rotations; ++r)
      for (double mu : c.mus)
        for (double nu : c.nus)
          for (double a : c.alphas)
            for (double sa : c.stripAngles) {
              CountingInstance ci;
              ci.N = double(N), ci.mu = mu, ci.nu = nu, ci.alphaAngle = a;
              ci.rotation = 2 * std::numbers::pi * (double(r) + 0.5) / double(c.rotations);
              ci.M = std::max(0.0, double(N) * std::cos(sa * a) - nu / 2);
              v.push_back(ci);
            }
  return v;
}

inline ojson to_json(const CountingInstance& c) {
  return ojson{{"N", c.N}, {"mu", c.mu}, {"nu", c.nu}, {"M", c.M}, {"alpha", c.alphaAngle}, {"rotation", c.rotation}};
}

/// count / bound over the whole grid of instances; the half range is N <= max(N)/2.
/// The in-hypothesis subset is summarized in `extra`.
inline RatioReport counting_sweep(const CountingSweepConfig& c) {
  c.validate();
  auto inst = counting_instances(c);
  {
    // one seeded phase for the whole rotation grid, so every N sees the same angles
    Rng rng(c.seed);
    const double off = 2 * std::numbers::pi / double(c.rotations) * (rng.uniform() - 0.5);
    for (auto& ci : inst) ci.rotation += off;
  }
  const auto Nmax = *std::max_element(c.Nlist.begin(), c.Nlist.end());
  std::vector<TrialOutcome> out(inst.size());
  std::vector<std::uint64_t> seeds(inst.size(), c.seed);
  parallel_for(inst.size(), resolve_threads(c.threads), [&](std::size_t i) {
    const auto& ci = inst[i];
    const auto cnt = counting_count(ci);
    auto& o = out[i];
    o.ratio = double(cnt) / counting_bound(ci);
    o.inHalf = 2 * ci.N <= double(Nmax);
    o.blocks = to_json(ci);
    o.blocks["count"] = cnt;
    o.blocks["bound"] = counting_bound(ci);
    o.extras = {ci.in_hypothesis() ? 1.0 : 0.0};
  });
  ojson range{{"Nlist", c.Nlist}, {"rotations", c.rotations}, {"mu", c.mus},
              {"nu", c.nus},      {"alpha", c.alphas},       {"stripAngles", c.stripAngles}};
  auto r = aggregate("counting", "C_count", ojson{{"seed", c.seed}}, range, out, seeds);
  double hypMax = 0, hypHalf = 0;
  std::uint64_t hypCount = 0;
  for (const auto& o : out)
    if (o.extras[0] > 0) {
      ++hypCount;
      hypMax = std::max(hypMax, o.ratio);
      if (o.inHalf) hypHalf = std::max(hypHalf, o.ratio);
    }
  r.extra = ojson{{"inHypothesisInstances", hypCount}, {"inHypothesisMax", hypMax}, {"inHypothesisHalfMax", hypHalf}};
  return r;
}


// ---------------------------------------------------------------------------
// Input families shared by the bilinear sweeps

enum class Family { gaussian, cap, single };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::cap: return "flat-cap";
    case Family::single: return "single-point";
  }
  return "?";
}

/// One sample field in block (N, L): Gaussian on a random subset, a flat cap
/// about a random point, or a single lattice point.
inline LatticeFunction family_field(Family fam, std::int64_t N, std::int64_t L, double dtau, std::size_t budget,
                                    Rng& rng) {
  switch (fam) {
    case Family::gaussian: return gaussian_block(N, L, dtau, rng, budget);
    case Family::cap: {
      const FreqVec c = random_point(rng, N);
      const double r = rng.uniform(0.0, std::max(1.0, double(N) / 4));
      auto f = flat_cap(N, L, dtau, c, r, budget);
      if (!f.empty()) return f;
      [[fallthrough]];
    }
    case Family::single: {
      const auto t = block_table(N, L, dtau);
      LatticeFunction f(dtau);
      f.add(t->point(rng.integer(0, t->total() - 1)), 1.0);
      return f;
    }
  }
  throw std::logic_error("unknown family");
}

// ---------------------------------------------------------------------------
// Bilinear Strichartz sweep

struct StrichartzSweepConfig {
  std::int64_t Nmax = 64;
  std::int64_t Lmax = 256;
  double dtau = 0.5;
  std::size_t trials = 10000;
  std::size_t budget = 128;  // points per sampled field
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    if (!is_dyadic(Nmax) || !is_dyadic(Lmax) || Nmax < 2) throw ValidationError("Nmax, Lmax must be dyadic, Nmax >= 2");
    if (!(dtau > 0) || trials == 0 || budget == 0) throw ValidationError("bad Strichartz sweep configuration");
  }
};

/// Ratio of ||P_N0 (u1 conj(u2))|| to the block bound; the output block is
/// the one hit by a random pair of input points. Half range: every N <= Nmax/2.
inline RatioReport strichartz_sweep(const StrichartzSweepConfig& c) {
  c.validate();
  const auto Ns = dyadics_up_to(c.Nmax), Ls = dyadics_up_to(c.Lmax);
  auto [out, seeds] = run_trials(c.trials, c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const auto fam = Family(i % 3);
    DyadicTriple b;
    b.N1 = pick(rng, Ns), b.N2 = pick(rng, Ns), b.L1 = pick(rng, Ls), b.L2 = pick(rng, Ls);
    const auto u1 = family_field(fam, b.N1, b.L1, c.dtau, c.budget, rng);
    const auto u2 = family_field(fam, b.N2, b.L2, c.dtau, c.budget, rng);
    const auto& e1 = u1.entries()[std::size_t(rng.integer(0, std::int64_t(u1.size()) - 1))];
    const auto& e2 = u2.entries()[std::size_t(rng.integer(0, std::int64_t(u2.size()) - 1))];
    b.N0 = std::min(dyadic_block_of(e1.p.n - e2.p.n), c.Nmax);
    b.L0 = 1;
    TrialOutcome o;
    o.ratio = bilinear_strichartz_ratio(u1, u2, b.N0, b);
    o.inHalf = 2 * std::max({b.N0, b.N1, b.N2}) <= c.Nmax;
    o.blocks = blocks_json(b);
    o.blocks.erase("L0");
    o.blocks["family"] = to_string(fam);
    return o;
  });
  ojson params{{"dtau", c.dtau}, {"budget", c.budget}, {"seed", c.seed}};
  ojson range{{"Nmax", c.Nmax}, {"Lmax", c.Lmax}, {"halfRange", ojson{{"Nmax", c.Nmax / 2}, {"Lmax", c.Lmax}}}};
  return aggregate("bilinear-strichartz", "C_bs", params, range, out, seeds);
}

// ---------------------------------------------------------------------------
// Bilinear X^{s,b} sweep with per-case attribution

struct XsbSweepConfig {
  std::vector<std::int64_t> Nlist = {1, 2, 4, 8};
  std::vector<std::int64_t> Llist = {1, 4, 16};
  std::size_t trialsPerPair = 10;
  std::size_t budget = 48;
  double dtau = 0.5;
  EstimateParams params{};
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    params.validate();
    if (Nlist.empty() || Llist.empty() || trialsPerPair == 0 || budget == 0 || !(dtau > 0))
      throw ValidationError("bad bilinear sweep configuration");
    for (auto x : Nlist)
      if (!is_dyadic(x)) throw ValidationError("Nlist entries must be dyadic");
    for (auto x : Llist)
      if (!is_dyadic(x)) throw ValidationError("Llist entries must be dyadic");
  }
  std::size_t blocks() const { return Nlist.size() * Llist.size(); }
  std::size_t trials() const { return blocks() * blocks() * 2 * trialsPerPair; }
};

/// Weighted inputs U, V and the extremal dual W for the pair (u, v): with these,
/// total / (sqrt(2 pi) |U| |V| |W|) reproduces the bilinear ratio and each
/// case part is that ratio's share from one CaseTag.
struct DualWitness {
  LatticeFunction U, V, W;
};

inline DualWitness dual_witness(const LatticeFunction& u, const LatticeFunction& v, const EstimateParams& p,
                                Pattern pat) {
  return {weighted(u, p.s, 0.5 + p.delta2), weighted(v, p.s, 0.5 + p.delta2),
          weighted(convolve(u, v, pat), p.s, -0.5 + p.delta1)};
}

/// Per-case ratios |part| / (sqrt(2 pi) |U| |V| |W|), in kAllCases order.
inline std::array<double, kCaseCount> case_ratios(const DualWitness& d, const EstimateParams& p, Pattern pat,
                                                  double* total = nullptr) {
  std::array<double, kCaseCount> r{};
  const double den = std::sqrt(2 * std::numbers::pi) * l2_norm(d.U) * l2_norm(d.V) * l2_norm(d.W);
  if (!(den > 0)) {
    if (total) *total = 0;
    return r;
  }
  const auto dec = dual_trilinear_decomposition(d.U, d.V, d.W, p, pat);
  for (std::size_t k = 0; k < kCaseCount; ++k) r[k] = dec.terms[k] ? std::abs(dec.parts[k]) / den : -1.0;
  if (total) *total = std::abs(dec.total) / den;
  return r;
}

/// Every ordered pair of blocks from Nlist x Llist, both patterns, trialsPerPair
/// trials each. extras hold the 11 case ratios (-1 when a case is absent).
/// Half range: N1, N2 <= max(Nlist)/2.
inline RatioReport xsb_sweep(const XsbSweepConfig& c) {
  c.validate();
  const auto nb = c.blocks();
  const auto Nmax = *std::max_element(c.Nlist.begin(), c.Nlist.end());
  auto [out, seeds] = run_trials(c.trials(), c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const std::size_t rep = i % c.trialsPerPair, rest = i / c.trialsPerPair;
    const auto pat = (rest % 2) ? Pattern::u_v : Pattern::u_vbar;
    const std::size_t pair = rest / 2, b1 = pair / nb, b2 = pair % nb;
    const auto N1 = c.Nlist[b1 / c.Llist.size()], L1 = c.Llist[b1 % c.Llist.size()];
    const auto N2 = c.Nlist[b2 / c.Llist.size()], L2 = c.Llist[b2 % c.Llist.size()];
    const auto fam = Family(rep % 3);
    const auto u = family_field(fam, N1, L1, c.dtau, c.budget, rng);
    const auto v = family_field(fam, N2, L2, c.dtau, c.budget, rng);
    TrialOutcome o;
    o.ratio = bilinear_xsb_ratio(u, v, c.params, pat);
    const auto cr = case_ratios(dual_witness(u, v, c.params, pat), c.params, pat);
    o.extras.assign(cr.begin(), cr.end());
    o.inHalf = 2 * std::max(N1, N2) <= Nmax;
    o.blocks = ojson{{"N1", N1}, {"L1", L1}, {"N2", N2}, {"L2", L2}, {"pattern", to_string(pat)},
                     {"family", to_string(fam)}};
    return o;
  });
  auto params = to_json(c.params);
  params["dtau"] = c.dtau;
  params["budget"] = c.budget;
  params["seed"] = c.seed;
  ojson range{{"Nlist", c.Nlist}, {"Llist", c.Llist}, {"trialsPerPair", c.trialsPerPair},
              {"patterns", ojson::array({to_string(Pattern::u_vbar), to_string(Pattern::u_v)})},
              {"halfRange", ojson{{"Nmax", Nmax / 2}}}};
  auto r = aggregate("bilinear-xsb", "C_bi", params, range, out, seeds);

  ojson cases = ojson::object();
  for (std::size_t k = 0; k < kCaseCount; ++k) {
    double mx = 0, half = 0;
    std::uint64_t present = 0;
    for (const auto& o : out) {
      const double x = o.extras[k];
      if (x < 0) continue;
      ++present;
      mx = std::max(mx, x);
      if (o.inHalf) half = std::max(half, x);
    }
    cases[to_string(kAllCases[k])] = ojson{{"trials", present}, {"max", mx}, {"halfRangeMax", half}};
  }
  r.extra["cases"] = cases;
  return r;
}


// ---------------------------------------------------------------------------
// Trilinear sweep

struct TrilinearSweepConfig {
  std::int64_t Nmax = 64;
  std::size_t trials = 10000;
  std::size_t modes = 48;  // modes per sampled factor
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    if (!is_dyadic(Nmax) || Nmax < 2 || trials == 0 || modes == 0)
      throw ValidationError("bad trilinear sweep configuration");
  }
};

enum class ModeFamily { gaussian, line, single };

inline std::string to_string(ModeFamily f) {
  switch (f) {
    case ModeFamily::gaussian: return "gaussian";
    case ModeFamily::line: return "lattice-line";
    case ModeFamily::single: return "single-mode";
  }
  return "?";
}

/// Gaussian coefficients on random modes of P_N, unit amplitudes along a lattice
/// line c + m d, or one mode. `dir` receives the line direction.
inline ModeList sample_modes(ModeFamily fam, std::int64_t N, std::size_t K, Rng& rng, FreqVec* dir = nullptr) {
  ModeList m;
  const auto& pts = spatial_block_points(N);
  switch (fam) {
    case ModeFamily::gaussian: {
      if (pts.size() <= K) {
        for (auto n : pts) m.push_back({n, rng.complex_normal()});
        break;
      }
      std::unordered_map<std::uint64_t, bool> used;
      while (m.size() < K) {
        const auto n = pick(rng, pts);
        if (used.emplace(pack({0, n}), true).second) m.push_back({n, rng.complex_normal()});
      }
      break;
    }
    case ModeFamily::line: {
      static const std::vector<FreqVec> dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}, {2, -1}, {1, -2}};
      FreqVec d = pick(rng, dirs);
      if (dir && !dir->is_zero()) d = FreqVec{-dir->n2, dir->n1};  // perpendicular to the previous line
      if (dir) *dir = d;
      const FreqVec c = pick(rng, pts);
      const auto len = std::min<std::int64_t>(std::int64_t(K), std::max<std::int64_t>(1, N));
      for (std::int64_t j = 0; j < len; ++j) m.push_back({c + FreqVec{int(j) * d.n1, int(j) * d.n2}, 1.0});
      break;
    }
    case ModeFamily::single: m.push_back({pick(rng, pts), 1.0}); break;
  }
  return m;
}

/// The third factor maximizing |trilinear form| for fixed f1, f2 and pattern.
inline ModeList extremal_third(const ModeList& f1, const ModeList& f2, std::array<bool, 3> conj) {
  std::unordered_map<std::uint64_t, cplx> A;
  std::vector<std::uint64_t> order;
  for (const auto& [n1, c1] : f1)
    for (const auto& [n2, c2] : f2) {
      const FreqVec s1 = conj[0] ? -n1 : n1, s2 = conj[1] ? -n2 : n2;
      const cplx a = conj[0] ? std::conj(c1) : c1, b = conj[1] ? std::conj(c2) : c2;
      const double w1 = conj[0] ? -norm_sq(n1) : norm_sq(n1), w2 = conj[1] ? -norm_sq(n2) : norm_sq(n2);
      const FreqVec m3 = -(s1 + s2);
      const double w3 = conj[2] ? -norm_sq(m3) : norm_sq(m3);
      const auto key = pack({0, m3});
      auto [it, fresh] = A.try_emplace(key, cplx{});
      if (fresh) order.push_back(key);
      it->second += a * b * unit_time_integral(w1 + w2 + w3);
    }
  ModeList out;
  for (auto key : order) {
    const FreqVec m3 = unpack(key).n;
    const cplx a = A[key];
    if (a == cplx{}) continue;
    out.push_back(conj[2] ? std::pair{-m3, a} : std::pair{m3, std::conj(a)});
  }
  return out;
}

/// |form| / prod ||phi_j|| over random patterns and families; the third factor
/// is the dual extremizer. Half range: N1, N2 <= Nmax/2.
inline RatioReport trilinear_sweep(const TrilinearSweepConfig& c) {
  c.validate();
  const auto Ns = dyadics_up_to(c.Nmax);
  auto [out, seeds] = run_trials(c.trials, c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const std::array<bool, 3> conj = {bool(i & 1), bool(i & 2), bool(i & 4)};
    const auto fam = ModeFamily((i / 8) % 3);
    const auto N1 = pick(rng, Ns), N2 = pick(rng, Ns);
    FreqVec dir{};
    const auto f1 = sample_modes(fam, N1, c.modes, rng, &dir);
    if (rng.uniform() < 0.5) dir = FreqVec{};  // half the line pairs are unconstrained
    const auto f2 = sample_modes(fam, N2, c.modes, rng, &dir);
    const auto f3 = extremal_third(f1, f2, conj);
    TrialOutcome o;
    const double den = l2_norm(f1) * l2_norm(f2) * l2_norm(f3);
    o.ratio = den > 0 ? std::abs(trilinear_form(f1, f2, f3, conj)) / den : 0.0;
    o.inHalf = 2 * std::max(N1, N2) <= c.Nmax;
    o.blocks = ojson{{"N1", N1}, {"N2", N2}, {"conj", ojson::array({conj[0], conj[1], conj[2]})},
                     {"family", to_string(fam)}};
    return o;
  });
  ojson range{{"Nmax", c.Nmax}, {"patterns", 8}, {"halfRange", ojson{{"Nmax", c.Nmax / 2}}}};
  return aggregate("trilinear", "C_tri", ojson{{"modes", c.modes}, {"seed", c.seed}}, range, out, seeds);
}

// ---------------------------------------------------------------------------
// Modulation lemmas and resonant fibers

struct ModulationSweepConfig {
  std::int64_t N2min = 16, N2max = 256;
  std::size_t trials = 2000;        // high and low sweeps
  std::size_t fiberTrials = 20000;  // fiber sizes are small integers, so the max needs many draws
  std::size_t budget = 64;          // points of f (high) or triples (low)
  double dtau = 1.0;
  EstimateParams params{};
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    params.validate();
    if (!is_dyadic(N2min) || !is_dyadic(N2max) || N2min < 16 || N2max < 2 * N2min)
      throw ValidationError("need dyadic 16 <= N2min, 2 N2min <= N2max");
    if (trials == 0 || fiberTrials == 0 || budget == 0 || !(dtau > 0))
      throw ValidationError("bad modulation sweep configuration");
  }
  std::vector<std::int64_t> n2_values() const {
    std::vector<std::int64_t> v;
    for (auto x = N2min; x <= N2max; x *= 2) v.push_back(x);
    return v;
  }
};

inline LatticeFunction positive_copy(const LatticeFunction& f, Rng& rng, bool flat) {
  return f.mapped([&](const LatticeFunction::Entry&) { return cplx(flat ? 1.0 : std::abs(rng.normal()) + 1e-3); });
}

/// Uniform sigma in the modulation block L (either sign when L > 1).
inline double random_sigma(Rng& rng, std::int64_t L) {
  if (L == 1) return rng.uniform(-1.0, 1.0);
  const double m = rng.uniform(double(L) / 2, double(L));
  return rng.uniform() < 0.5 ? -m : m;
}

/// A lattice point n2 with |n2| in P_N2 and |cos angle(n, n2)| below theta(n, n2),
/// searched near the line through 0 perpendicular to n.
inline std::optional<FreqVec> near_perpendicular(Rng& rng, FreqVec n, std::int64_t N2, const AngleThreshold& theta) {
  const double rn = norm(n);
  const double r = rng.uniform(double(N2) / 2, double(N2));
  const double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double cx = sgn * r * -double(n.n2) / rn, cy = sgn * r * double(n.n1) / rn;
  std::vector<FreqVec> hits;
  const int R = 6;
  for (int a = -R; a <= R; ++a)
    for (int b = -R; b <= R; ++b) {
      const FreqVec p{int(std::lround(cx)) + a, int(std::lround(cy)) + b};
      if (p.is_zero() || dyadic_block_of(p) != N2) continue;
      const double cs = std::abs(double(dot(n, p))) / (rn * norm(p));
      if (cs < theta(n, p)) hits.push_back(p);
    }
  if (hits.empty()) return std::nullopt;
  return pick(rng, hits);
}

inline FreqVec random_nonzero_in_disc(Rng& rng, double r2max) {
  const int R = int(std::floor(std::sqrt(r2max)));
  for (;;) {
    const FreqVec n{int(rng.integer(-R, R)), int(rng.integer(-R, R))};
    const auto q = norm_sq_int(n);
    if (q >= 1 && double(q) < r2max) return n;
  }
}

struct ModulationReports {
  RatioReport high, low, fiber;
  ojson to_json() const { return ojson{{"high", high.to_json()}, {"low", low.to_json()}, {"fiber", fiber.to_json()}}; }
};

/// High-modulation trials: N1 ~ N2, N0^2 < N2/8, Lmax >= N2. f and h are sampled
/// in their blocks; g sits on differences of f and h points, so the sum is nonzero.
inline RatioReport high_modulation_sweep(const ModulationSweepConfig& c) {
  c.validate();
  const auto N2s = c.n2_values();
  auto [out, seeds] = run_trials(c.trials, c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const bool flat = i % 2;
    TrialOutcome o;
    for (int attempt = 0; attempt < 20; ++attempt) {
      DyadicTriple b;
      b.N2 = pick(rng, N2s);
      std::vector<std::int64_t> n1s = {b.N2};
      if (b.N2 / 2 >= 1) n1s.push_back(b.N2 / 2);
      if (2 * b.N2 <= c.N2max) n1s.push_back(2 * b.N2);
      b.N1 = pick(rng, n1s);
      std::vector<std::int64_t> n0s;
      for (std::int64_t x = 1; double(x * x) < kMuchLess * double(b.N2); x *= 2) n0s.push_back(x);
      b.N0 = pick(rng, n0s);
      const auto Ls = dyadics_up_to(4 * b.N2);
      b.L0 = pick(rng, Ls), b.L1 = pick(rng, Ls);
      const auto h0 = gaussian_block(b.N0, b.L0, c.dtau, rng, c.budget / 4);
      const auto f0 = gaussian_block(b.N1, b.L1, c.dtau, rng, c.budget);
      // candidate g points grouped by modulation block
      std::map<std::int64_t, std::vector<LatticePoint>> byL;
      for (const auto& a : f0.entries())
        for (int r = 0; r < 4; ++r) {
          const auto& e = h0.entries()[std::size_t(rng.integer(0, std::int64_t(h0.size()) - 1))];
          const LatticePoint q{a.p.k - e.p.k, a.p.n - e.p.n};
          if (dyadic_block_of(q.n) != b.N2) continue;
          byL[modulation_block_of(double(q.k) * c.dtau, q.n)].push_back(q);
        }
      std::int64_t bestL = -1;
      std::size_t best = 0;
      for (const auto& [L, v] : byL)
        if (std::max({b.L0, b.L1, L}) >= b.N2 && v.size() > best) bestL = L, best = v.size();
      if (bestL < 0) continue;
      b.L2 = bestL;
      LatticeFunction g0(c.dtau);
      for (const auto& q : byL[bestL])
        if (g0.at(q) == cplx{}) g0.add(q, 1.0);
      BlockField f{positive_copy(f0, rng, flat), b.N1, b.L1}, g{positive_copy(g0, rng, flat), b.N2, b.L2},
          h{positive_copy(h0, rng, flat), b.N0, b.L0};
      o.ratio = high_modulation_ratio(f, g, h, b, c.params);
      o.inHalf = 2 * std::max(b.N1, b.N2) <= c.N2max;
      o.blocks = blocks_json(b);
      o.blocks["family"] = flat ? "flat" : "gaussian-modulus";
      return o;
    }
    o.blocks = ojson{{"empty", true}};
    return o;
  });
  auto params = to_json(c.params);
  params["dtau"] = c.dtau, params["budget"] = c.budget, params["seed"] = c.seed;
  ojson range{{"N2min", c.N2min}, {"N2max", c.N2max}, {"halfRange", ojson{{"N2max", c.N2max / 2}}}};
  return aggregate("high-modulation", "C_high", params, range, out, seeds);
}

/// Low-modulation trials: triples (tau, n), (tau1, n1), (tau1 - tau, n1 - n) with
/// 1 <= |n|^2 < N2/8, n2 nearly perpendicular to n and Lmax < N2/8; even trials
/// reuse one n for every triple.
inline RatioReport low_modulation_sweep(const ModulationSweepConfig& c) {
  c.validate();
  const auto N2s = c.n2_values();
  const auto theta = resonant_angle_threshold(c.params.eps);
  auto [out, seeds] = run_trials(c.trials, c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const bool sharedN = i % 2 == 0, flat = (i / 2) % 2;
    DyadicTriple b;
    b.N2 = pick(rng, N2s);
    const auto Ls = dyadics_up_to(std::max<std::int64_t>(1, b.N2 / 16));
    b.L0 = pick(rng, Ls), b.L1 = pick(rng, Ls), b.L2 = 0, b.N1 = 0;
    const double r2max = kMuchLess * double(b.N2);
    const FreqVec fixedN = random_nonzero_in_disc(rng, r2max);
    LatticeFunction f0(c.dtau), g0(c.dtau), h0(c.dtau);
    for (std::size_t t = 0; t < 4 * c.budget && f0.size() < c.budget; ++t) {
      const FreqVec n = sharedN ? fixedN : random_nonzero_in_disc(rng, r2max);
      const auto n2o = near_perpendicular(rng, n, b.N2, theta);
      if (!n2o) continue;
      const FreqVec n2 = *n2o, n1 = n + n2;
      const auto N1 = dyadic_block_of(n1);
      if (b.N1 == 0 && !(N1 == b.N2 || N1 == 2 * b.N2 || 2 * N1 == b.N2)) continue;
      if (b.N1 != 0 && N1 != b.N1) continue;
      const auto k0 = std::int64_t(std::lround((random_sigma(rng, b.L0) - norm_sq(n)) / c.dtau));
      const auto k1 = std::int64_t(std::lround((random_sigma(rng, b.L1) - norm_sq(n1)) / c.dtau));
      if (modulation_block_of(double(k0) * c.dtau, n) != b.L0) continue;
      if (modulation_block_of(double(k1) * c.dtau, n1) != b.L1) continue;
      const auto L2 = modulation_block_of(double(k1 - k0) * c.dtau, n2);
      if (b.L2 == 0 && !(double(std::max({b.L0, b.L1, L2})) < kMuchLess * double(b.N2))) continue;
      if (b.L2 != 0 && L2 != b.L2) continue;
      b.N1 = N1, b.L2 = L2;
      for (auto [fn, p] : {std::pair{&f0, LatticePoint{k1, n1}}, std::pair{&g0, LatticePoint{k1 - k0, n2}},
                           std::pair{&h0, LatticePoint{k0, n}}})
        if (fn->at(p) == cplx{}) fn->add(p, 1.0);
    }
    TrialOutcome o;
    if (f0.empty()) {
      o.blocks = ojson{{"empty", true}, {"N2", b.N2}};
      o.inHalf = 2 * b.N2 <= c.N2max;
      return o;
    }
    b.N0 = dyadic_block_of(h0.entries().front().p.n);
    BlockField f{positive_copy(f0, rng, flat), b.N1, b.L1}, g{positive_copy(g0, rng, flat), b.N2, b.L2};
    o.ratio = low_modulation_ratio(f, g, positive_copy(h0, rng, flat), b, theta);
    o.inHalf = 2 * std::max(b.N1, b.N2) <= c.N2max;
    o.blocks = blocks_json(b);
    o.blocks["family"] = std::string(sharedN ? "shared-n" : "spread-n") + (flat ? "/flat" : "/gaussian-modulus");
    o.blocks["triples"] = f0.size();
    return o;
  });
  auto params = to_json(c.params);
  params["dtau"] = c.dtau, params["budget"] = c.budget, params["seed"] = c.seed;
  params["theta"] = "1/8 |n|^-(1-eps) |n2|^-(1-eps)";
  ojson range{{"N2min", c.N2min}, {"N2max", c.N2max}, {"halfRange", ojson{{"N2max", c.N2max / 2}}}};
  return aggregate("low-modulation", "C_low", params, range, out, seeds);
}

/// Fiber trials: a seeded resonant pair (n1*, n1* - n) fixes shells, covering
/// balls and modulations, so every fiber is nonempty; ratio = size / bound.
/// Even trials use the pointwise resonant angle, odd trials the wide angle 1/8.
inline RatioReport fiber_sweep(const ModulationSweepConfig& c) {
  c.validate();
  const auto N2s = c.n2_values();
  const auto theta = resonant_angle_threshold(c.params.eps);
  const AngleThreshold wide = [](FreqVec, FreqVec) { return kMuchLess; };
  auto [out, seeds] = run_trials(c.fiberTrials, c.seed, resolve_threads(c.threads), [&](Rng& rng, std::size_t i) {
    const auto& th = i % 2 ? wide : theta;
    TrialOutcome o;
    for (int attempt = 0; attempt < 50; ++attempt) {
      DyadicTriple b;
      b.N2 = pick(rng, N2s);
      std::vector<std::int64_t> n0s;
      for (std::int64_t x = 1; double(x * x) < kMuchLess * double(b.N2); x *= 2) n0s.push_back(x);
      b.N0 = pick(rng, n0s);
      FreqVec n;
      do n = random_point(rng, b.N0);
      while (n.is_zero());
      const auto n2o = near_perpendicular(rng, n, b.N2, th);
      if (!n2o) continue;
      const FreqVec n2 = *n2o, n1 = n + n2;
      b.N1 = dyadic_block_of(n1);
      const auto Ls = dyadics_up_to(std::max<std::int64_t>(1, b.N2 / 16));
      b.L1 = pick(rng, Ls), b.L2 = pick(rng, Ls);
      const double tau1 = random_sigma(rng, b.L1) - norm_sq(n1);
      const double tau2 = random_sigma(rng, b.L2) - norm_sq(n2);
      if (modulation_block_of(tau1, n1) != b.L1 || modulation_block_of(tau2, n2) != b.L2) continue;
      b.L0 = modulation_block_of(tau1 - tau2, n);
      ResonantFiberSpec s;
      s.tau = tau1 - tau2, s.tau1 = tau1, s.n = n, s.blocks = b;
      s.j1 = std::int64_t(std::ceil(norm(n1))) - 1;
      s.j2 = std::int64_t(std::ceil(norm(n2))) - 1;
      const double off = rng.uniform(0.0, double(b.N0) / 2), ang = rng.uniform(0.0, 2 * std::numbers::pi);
      s.J1 = Ball{n1 + FreqVec{int(std::lround(off * std::cos(ang))), int(std::lround(off * std::sin(ang)))},
                  double(b.N0)};
      s.J2 = Ball{s.J1.center - n, double(b.N0)};
      s.theta = th(n, n2);
      const auto size = resonant_fiber_size(s);
      o.ratio = double(size) / fiber_bound(b);
      o.inHalf = 2 * std::max(b.N1, b.N2) <= c.N2max;
      o.blocks = blocks_json(b);
      o.blocks["n"] = ojson::array({n.n1, n.n2});
      o.blocks["j1"] = s.j1, o.blocks["j2"] = s.j2, o.blocks["size"] = size, o.blocks["theta"] = s.theta;
      o.blocks["family"] = i % 2 ? "wide-angle" : "resonant-angle";
      return o;
    }
    o.blocks = ojson{{"empty", true}};
    return o;
  });
  auto params = to_json(c.params);
  params["seed"] = c.seed;
  params["theta"] = "1/8 |n|^-(1-eps) |n2*|^-(1-eps) (even trials), 1/8 (odd trials)";
  ojson range{{"N2min", c.N2min}, {"N2max", c.N2max}, {"halfRange", ojson{{"N2max", c.N2max / 2}}}};
  return aggregate("resonant-fiber", "C_fib", params, range, out, seeds);
}

inline ModulationReports modulation_sweeps(const ModulationSweepConfig& c) {
  return {high_modulation_sweep(c), low_modulation_sweep(c), fiber_sweep(c)};
}


// ---------------------------------------------------------------------------
// L^4 contrast probe

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n), 0.0), w(x);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1, p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[std::size_t(i)] = z;
    w[std::size_t(i)] = 2 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

/// ||eta||_{H^b(R)} for the smooth bump equal to 1 on [-1, 1], from a fine FFT.
inline double cutoff_hb_norm(double b, const CutoffProfile& eta = {}) {
  const double Twin = 16 * eta.T;
  const std::size_t Mt = 1 << 14;
  const double dt = Twin / double(Mt);
  std::vector<cplx> v(Mt);
  for (std::size_t j = 0; j < Mt; ++j) v[j] = eta(-Twin / 2 + double(j) * dt);
  fft::transform_all(v, {Mt}, false);
  const double dtau = 2 * std::numbers::pi / Twin, c = dt / std::sqrt(2 * std::numbers::pi);
  double acc = 0;
  for (std::size_t m = 0; m < Mt; ++m) {
    const double tau = double(fft::signed_freq(m, Mt)) * dtau;
    acc += std::pow(bracket(tau), 2 * b) * std::norm(c * v[m]);
  }
  return std::sqrt(acc * dtau);
}

/// Separable initial data phi(x, y) = F(x) G(y) given by 1-d coefficient lists.
struct SeparableData {
  std::vector<std::pair<int, cplx>> F, G;
  std::string family;
};

/// int_T |e^{it d_x^2} F|^4 dx (normalized) on a grid large enough to be exact.
class QuarticEvaluator {
 public:
  explicit QuarticEvaluator(const std::vector<std::pair<int, cplx>>& modes) : modes_(modes) {
    int W = 1;
    for (auto& [k, c] : modes_) W = std::max(W, std::abs(k));
    P_ = 1;
    while (P_ < std::size_t(4 * W + 1)) P_ *= 2;
    buf_.resize(P_);
  }
  double operator()(double t) {
    std::fill(buf_.begin(), buf_.end(), cplx{});
    for (auto& [k, c] : modes_)
      buf_[fft::bin_of(k, P_)] += c * std::exp(cplx(0, -double(k) * double(k) * t));
    fft::transform_all(buf_, {P_}, true);
    double acc = 0;
    for (auto v : buf_) acc += std::norm(v) * std::norm(v);
    return acc / double(P_);
  }

 private:
  std::vector<std::pair<int, cplx>> modes_;
  std::size_t P_ = 1;
  std::vector<cplx> buf_;
};

/// (int_0^1 int_{T^2} |e^{it Delta} phi|^4)^{1/4}, composite Gauss-Legendre in t.
inline double l4_free_norm(const SeparableData& d) {
  int kmin = 1 << 30, kmax = 0;
  for (const auto* v : {&d.F, &d.G})
    for (auto& [k, c] : *v) kmin = std::min(kmin, std::abs(k)), kmax = std::max(kmax, std::abs(k));
  const double omega = 4.0 * (double(kmax) * kmax - double(kmin) * kmin);
  const int panels = int(std::ceil(omega / 4)) + 1;
  static const auto gl = gauss_legendre(16);
  QuarticEvaluator A(d.F), B(d.G);
  double acc = 0;
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p)
    for (std::size_t q = 0; q < gl.first.size(); ++q) {
      const double t = h * (p + 0.5 * (gl.first[q] + 1));
      acc += 0.5 * h * gl.second[q] * A(t) * B(t);
    }
  return std::pow(acc, 0.25);
}

/// ||phi||_{H^s} for separable data.
inline double separable_hs_norm(const SeparableData& d, double s) {
  double acc = 0;
  for (auto& [k, a] : d.F)
    for (auto& [l, b] : d.G) acc += std::pow(1.0 + double(k) * k + double(l) * l, s) * std::norm(a) * std::norm(b);
  return std::sqrt(acc);
}

/// Families at frequency scale N: one mode, the square box [N/4, N/2)^2, the
/// 1-d box times one mode, and separable Gaussians on the box.
inline std::vector<SeparableData> l4_families(std::int64_t N, std::size_t gaussians, Rng& rng) {
  const int lo = int(std::max<std::int64_t>(1, N / 4)), hi = int(std::max<std::int64_t>(lo + 1, N / 2));
  std::vector<std::pair<int, cplx>> box, one = {{int(3 * N / 4), 1.0}}, zero = {{0, 1.0}};
  for (int k = lo; k < hi; ++k) box.push_back({k, 1.0});
  std::vector<SeparableData> v = {{one, zero, "single-mode"}, {box, box, "box"}, {box, one, "box-times-mode"}};
  for (std::size_t g = 0; g < gaussians; ++g) {
    SeparableData d;
    d.family = "gaussian";
    for (int k = lo; k < hi; ++k) d.F.push_back({k, rng.complex_normal()}), d.G.push_back({k, rng.complex_normal()});
    v.push_back(std::move(d));
  }
  return v;
}

struct L4Config {
  std::vector<std::int64_t> Nlist = {8, 16, 32, 64, 128};
  double b = 0.6;
  std::vector<double> svals = {0.0, 0.2};
  std::size_t gaussians = 4;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const {
    if (!(b > 0.5)) throw ValidationError("l4 probe needs b > 1/2");
    if (Nlist.empty() || svals.empty()) throw ValidationError("l4 probe needs N and s values");
    for (auto N : Nlist)
      if (!is_dyadic(N) || N < 4) throw ValidationError("l4 probe N must be dyadic and >= 4");
    for (double s : svals)
      if (!(s >= 0)) throw ValidationError("l4 probe s must be nonnegative");
  }
};

struct L4Series {
  double s = 0;
  std::vector<std::pair<std::int64_t, double>> maxRatio;  // (N, max ratio)
  std::vector<std::string> witness;                       // family attaining the max
  double slope = 0;                                       // least-squares slope of log max vs log N
  bool nondecreasing = true;
  double halfRangeMax = 0, fullRangeMax = 0;

  double growth() const { return halfRangeMax > 0 ? fullRangeMax / halfRangeMax : 1.0; }
  ojson to_json() const {
    ojson pts = ojson::array();
    for (std::size_t i = 0; i < maxRatio.size(); ++i)
      pts.push_back(ojson{{"N", maxRatio[i].first}, {"maxRatio", maxRatio[i].second}, {"witness", witness[i]}});
    return ojson{{"s", s},
                 {"series", pts},
                 {"slope", slope},
                 {"nondecreasing", nondecreasing},
                 {"halfRangeMax", halfRangeMax},
                 {"maxRatio", fullRangeMax},
                 {"growth", growth()}};
  }
};

struct L4Report {
  double b = 0;
  double cutoffNorm = 0;
  std::vector<L4Series> series;
  ojson to_json(const L4Config& c) const {
    ojson s = ojson::array();
    for (const auto& x : series) s.push_back(x.to_json());
    return ojson{{"estimate", "l4-strichartz"},
                 {"constantLabel", "C_lin"},
                 {"params", ojson{{"b", b}, {"gaussians", c.gaussians}, {"seed", c.seed}}},
                 {"sweepRange", ojson{{"Nlist", c.Nlist}, {"s", c.svals}}},
                 {"cutoffHbNorm", cutoffNorm},
                 {"results", s}};
  }
};

/// ||eta e^{it Delta} phi||_{L^4([0,1] x T^2)} / ||eta e^{it Delta} phi||_{X^{s,b}}
/// per N, maximized over the families. Exploratory: no threshold is applied here.
inline L4Report l4_loss_probe(const L4Config& c) {
  c.validate();
  L4Report r;
  r.b = c.b;
  r.cutoffNorm = cutoff_hb_norm(c.b);
  struct Item {
    std::size_t Ni;
    SeparableData d;
    double l4 = 0;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < c.Nlist.size(); ++i) {
    Rng rng(mix_seed(c.seed, i));
    for (auto& d : l4_families(c.Nlist[i], c.gaussians, rng)) items.push_back({i, std::move(d)});
  }
  parallel_for(items.size(), resolve_threads(c.threads), [&](std::size_t k) { items[k].l4 = l4_free_norm(items[k].d); });
  const auto Nmax = *std::max_element(c.Nlist.begin(), c.Nlist.end());
  for (double s : c.svals) {
    L4Series ser;
    ser.s = s;
    ser.maxRatio.assign(c.Nlist.size(), {0, 0.0});
    ser.witness.assign(c.Nlist.size(), "");
    for (std::size_t i = 0; i < c.Nlist.size(); ++i) ser.maxRatio[i].first = c.Nlist[i];
    for (const auto& it : items) {
      const double ratio = it.l4 / (r.cutoffNorm * separable_hs_norm(it.d, s));
      if (ratio > ser.maxRatio[it.Ni].second) ser.maxRatio[it.Ni].second = ratio, ser.witness[it.Ni] = it.d.family;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(c.Nlist.size());
    for (std::size_t i = 0; i < c.Nlist.size(); ++i) {
      const double x = std::log(double(c.Nlist[i])), y = std::log(ser.maxRatio[i].second);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      if (i > 0 && ser.maxRatio[i].second < ser.maxRatio[i - 1].second) ser.nondecreasing = false;
      ser.fullRangeMax = std::max(ser.fullRangeMax, ser.maxRatio[i].second);
      if (2 * c.Nlist[i] <= Nmax) ser.halfRangeMax = std::max(ser.halfRangeMax, ser.maxRatio[i].second);
    }
    ser.slope = n > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    r.series.push_back(std::move(ser));
  }
  return r;
}

}  // namespace qnls
