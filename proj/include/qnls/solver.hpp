#pragma once

// Time evolution for i u_t + Delta u = |u|^2: Strang splitting with an exact
// pointwise nonlinear flow, a Picard/Duhamel iteration, and blow-up detection.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnls/field.hpp"

namespace qnls {

/// Raised when a nonlinear substep would cross a pointwise singularity.
struct BlowupSignal : std::runtime_error {
  std::size_t index;  // grid point with the earliest singularity
  double tLocal;      // singularity time measured from the start of the step
  BlowupSignal(std::size_t i, double t)
      : std::runtime_error("pointwise singularity inside nonlinear step at grid index " +
                           std::to_string(i) + " (after " + std::to_string(t) + ")"),
        index(i),
        tLocal(t) {}
};

/// Singularity time of b' = -(a^2 + b^2) from b(0) = b; +inf if none.
inline double pointwise_blowup_time(cplx u) {
  const double a = std::abs(u.real()), b = u.imag();
  if (a == 0.0) return b < 0 ? -1.0 / b : std::numeric_limits<double>::infinity();
  // written to stay accurate as a -> 0 with b < 0 (limit -1/b)
  if (b < 0) return std::atan(a / -b) / a;
  return (std::numbers::pi - std::atan2(a, b)) / a;
}

/// Exact flow of u' = -i|u|^2 over time h at one point (h below the singularity).
inline cplx pointwise_flow(cplx u, double h) {
  const double a = u.real(), b = u.imag();
  const double x = a * h;
  const double c = std::cos(x);
  const double S = std::abs(x) < 1e-8 ? 1.0 - x * x / 6 : std::sin(x) / x;
  // b(h) = a tan(arctan(b/a) - a h), rearranged so a = 0 needs no special case
  return {a, (b * c - a * a * h * S) / (c + b * h * S)};
}

/// Nonlinear substep u' = -i|u|^2 solved in closed form at every grid point.
inline SpatialField nonlinear_substep_exact(const SpatialField& u, double dt) {
  if (!(dt >= 0)) throw ValidationError("nonlinear substep needs dt >= 0");
  SpatialField r = u;
  std::size_t worst = 0;
  double tmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double ts = pointwise_blowup_time(u.values[i]);
    if (ts < tmin) tmin = ts, worst = i;
  }
  if (dt >= tmin) throw BlowupSignal(worst, tmin);
  for (auto& v : r.values) v = pointwise_flow(v, dt);
  return r;
}

/// Half free step, exact nonlinear step, half free step.
inline SpatialField strang_step(const SpatialField& u, double dt, bool nonlinear = true,
                                bool dealiasOutput = false) {
  auto v = free_propagate(u, dt / 2);
  if (nonlinear) v = nonlinear_substep_exact(v, dt);
  if (dealiasOutput) v = dealias(v);
  return free_propagate(v, dt / 2);
}

/// Exact solution for spatially constant data.
inline cplx mean_ode_oracle(cplx u0, double t) {
  if (!(t >= 0)) throw ValidationError("oracle time must be nonnegative");
  const double ts = pointwise_blowup_time(u0);
  if (t >= ts)
    throw ValidationError("time " + std::to_string(t) + " is at or past the singularity T*=" +
                          std::to_string(ts));
  return pointwise_flow(u0, t);
}

/// Sufficient condition for finite-time blow-up: Im mean < 0 or Re mean != 0.
inline bool blowup_criterion(const SpatialField& u0, double tol = 1e-12) {
  const cplx m = u0.mean();
  return m.imag() < -tol || std::abs(m.real()) > tol;
}

// ---------------------------------------------------------------------------
// Split-step trajectories

struct SolverConfig {
  enum class Method { strang, picard };
  SpaceGrid grid{};
  double dt = 1e-3;
  double Tend = 1.0;
  Method method = Method::strang;
  double blowupCap = 1e6;
  bool dealias = false;
  bool nonlinear = true;    // false gives the free flow (splitting consistency)
  double s = 1.0;           // Sobolev index of the recorded H^s trace
  bool storeStates = true;
  double dtMin = 1e-6;      // floor of the step-halving refinement

  void validate(const SpatialField& u0) const {
    if (!(dt > 0) || !(Tend > 0)) throw ValidationError("dt and Tend must be positive");
    if (dt > Tend) throw ValidationError("dt must not exceed Tend");
    if (!(dtMin > 0) || dtMin > dt) throw ValidationError("dtMin must lie in (0, dt]");
    if (!(blowupCap > l2_norm(u0)) || !(blowupCap > sup_norm(u0)))
      throw ValidationError("blowupCap must exceed the size of the initial data");
    if (!(u0.grid == grid)) throw ValidationError("initial data lives on a different grid");
  }
};

inline std::string to_string(SolverConfig::Method m) {
  return m == SolverConfig::Method::strang ? "strang" : "picard";
}

struct BlowupRecord {
  double Tstar = 0;   // midpoint of the bracket
  double lower = 0;   // last time reached stably
  double upper = 0;   // first time known to fail
  std::string reason;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpatialField> states;
  std::vector<cplx> meanTrace;
  std::vector<double> l2Trace;
  std::vector<double> hsTrace;
  std::optional<BlowupRecord> blowup;

  void write_csv(std::ostream& os) const {
    os << "t,re_mean,im_mean,l2,hs\n";
    os.precision(17);
    for (std::size_t k = 0; k < times.size(); ++k)
      os << times[k] << ',' << meanTrace[k].real() << ',' << meanTrace[k].imag() << ','
         << l2Trace[k] << ',' << hsTrace[k] << '\n';
  }
};

namespace detail {

inline void record(Trajectory& tr, const SolverConfig& cfg, double t, const SpatialField& u) {
  tr.times.push_back(t);
  tr.meanTrace.push_back(u.mean());
  tr.l2Trace.push_back(l2_norm(u));
  tr.hsTrace.push_back(hs_norm(u, cfg.s));
  if (cfg.storeStates) tr.states.push_back(u);
}

/// One step that fails on a singularity or on exceeding the cap.
inline std::optional<SpatialField> guarded_step(const SpatialField& u, double h, const SolverConfig& cfg,
                                                std::string& why) {
  try {
    auto v = strang_step(u, h, cfg.nonlinear, cfg.dealias);
    if (!(sup_norm(v) <= cfg.blowupCap) || !(hs_norm(v, cfg.s) <= cfg.blowupCap)) {
      why = "norm exceeded blowupCap";
      return std::nullopt;
    }
    return v;
  } catch (const BlowupSignal&) {
    why = "pointwise singularity in nonlinear substep";
    return std::nullopt;
  }
}

}  // namespace detail

struct PicardConfig;
inline Trajectory evolve_picard(const SolverConfig& cfg, const SpatialField& u0);

/// Fixed-step Strang evolution on [0, Tend]; stops with a blow-up record and a
/// step-halving estimate of T* when a step fails.
inline Trajectory evolve(const SolverConfig& cfg, const SpatialField& u0) {
  cfg.validate(u0);
  if (cfg.method == SolverConfig::Method::picard) return evolve_picard(cfg, u0);
  Trajectory tr;
  SpatialField u = u0;
  detail::record(tr, cfg, 0.0, u);
  const auto steps = std::size_t(std::llround(std::ceil(cfg.Tend / cfg.dt - 1e-9)));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t0 = double(k - 1) * cfg.dt;
    std::string why;
    auto next = detail::guarded_step(u, cfg.dt, cfg, why);
    if (!next) {
      // refine from the last stable state with halved steps
      double h = cfg.dt, tc = t0;
      SpatialField cur = u;
      std::size_t budget = 1 << 20;
      while (h / 2 >= cfg.dtMin && budget > 0) {
        h /= 2;
        while (budget > 0) {
          --budget;
          std::string w;
          auto v = detail::guarded_step(cur, h, cfg, w);
          if (!v) break;
          cur = std::move(*v);
          tc += h;
        }
      }
      tr.blowup = BlowupRecord{tc + h / 2, tc, tc + h, why};
      return tr;
    }
    u = std::move(*next);
    detail::record(tr, cfg, double(k) * cfg.dt, u);
  }
  return tr;
}

/// Max relative error between the centered difference of the mean and -i ||u||^2.
inline double mean_derivative_check(const Trajectory& tr) {
  const auto n = tr.times.size();
  if (n < 3) throw ValidationError("mean law check needs at least three samples");
  double worst = 0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const cplx d = (tr.meanTrace[k + 1] - tr.meanTrace[k - 1]) / (tr.times[k + 1] - tr.times[k - 1]);
    const cplx rhs = cplx(0, -tr.l2Trace[k] * tr.l2Trace[k]);
    const double scale = std::abs(rhs);
    const double err = std::abs(d - rhs);
    if (scale == 0) {
      if (err != 0) worst = std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, err / scale);
  }
  return worst;
}

/// Log-log slope of the Strang error at time T against a dt/16 reference,
/// for step sizes dt0, dt0/2, ..., dt0/2^(levels-1).
inline double strang_convergence_slope(const SpatialField& u0, double T, double dt0, int levels = 3) {
  auto run = [&](double dt) {
    SpatialField u = u0;
    const auto steps = std::size_t(std::llround(T / dt));
    for (std::size_t k = 0; k < steps; ++k) u = strang_step(u, dt);
    return u;
  };
  const double dtRef = dt0 / std::pow(2.0, levels - 1) / 16;
  const auto ref = run(dtRef);
  std::vector<double> lx, ly;
  for (int l = 0; l < levels; ++l) {
    const double dt = dt0 / std::pow(2.0, l);
    lx.push_back(std::log(dt));
    ly.push_back(std::log(l2_norm(run(dt) - ref)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= double(lx.size()), my /= double(ly.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Picard iteration on the Duhamel map

struct PicardConfig {
  double T = 0.1;
  int iterations = 12;
  double eps = 0.1;
  CutoffProfile::Shape cutoff = CutoffProfile::Shape::smooth_bump;
  std::size_t Mt = 256;  // samples on the window [-2T, 2T)

  void validate() const {
    if (!(T > 0) || T > 1) throw ValidationError("Picard T must lie in (0, 1]");
    if (iterations < 1) throw ValidationError("Picard needs at least one iteration");
    if (!(eps > 0) || !(eps < 0.25)) throw ValidationError("eps must lie in (0, 1/4)");
    if (!fft::is_pow2(Mt) || Mt < 8) throw ValidationError("Picard Mt must be a power of two >= 8");
  }
  TimeWindow window() const { return TimeWindow(4 * T, Mt); }
};

struct PicardReport {
  std::vector<double> differences;  // d_k
  std::vector<double> ratios;       // d_{k+1} / d_k
  bool diverged = false;
  int iterationsRun = 0;
};

namespace detail {

/// phi0 = int_0^h e^{zs} ds and phi1 = int_0^h s e^{zs} ds (h may be negative).
inline std::pair<cplx, cplx> exp_moments(cplx z, double h) {
  const cplx x = z * h;
  if (std::abs(x) < 0.05) {
    cplx p0{}, p1{}, term = 1.0;
    double fact = 1.0;
    for (int k = 0; k <= 8; ++k) {
      if (k > 0) fact *= k, term *= x;
      p0 += term / (fact * (k + 1));
      p1 += term / (fact * (k + 2));
    }
    return {h * p0, h * h * p1};
  }
  const cplx e = std::exp(x);
  return {(e - 1.0) / z, h * e / z - (e - 1.0) / (z * z)};
}

}  // namespace detail

/// Gamma(u)(t) = e^{it Delta}u0 - i int_0^t e^{i(t-t')Delta} |u|^2(t') dt' on the
/// window samples, with F^ interpolated linearly between samples.
inline SpacetimeField duhamel_map(const SpatialField& u0, const SpacetimeField& u) {
  const auto& g = u0.grid;
  const auto& w = u.window;
  const std::size_t Mt = w.Mt, M = g.size();
  const std::size_t j0 = Mt / 2;  // t = 0
  // F^(t_j, n) from pointwise |u|^2
  std::vector<std::vector<cplx>> F(Mt);
  const auto P = as_physical(u);
  for (std::size_t j = 0; j < Mt; ++j) {
    SpatialField sl(g);
    for (std::size_t i = 0; i < M; ++i) sl.values[i] = std::norm(P.coeffs[j * M + i]);
    F[j] = spatial_modes(sl);
  }
  const auto c0 = spatial_modes(u0);
  SpacetimeField out(g, w);
  std::vector<std::vector<cplx>> G(Mt, std::vector<cplx>(M));
  const double h = w.dt();
  for (std::size_t ix = 0; ix < g.Mx; ++ix)
    for (std::size_t iy = 0; iy < g.My; ++iy) {
      const std::size_t i = g.index(ix, iy);
      const double om = norm_sq(g.freq(ix, iy), g.geom);
      const cplx z(0, -om);
      for (int dir : {+1, -1}) {
        const double hs = dir * h;
        const auto [p0, p1] = detail::exp_moments(z, hs);
        const cplx step = std::exp(z * hs);
        cplx D = 0;
        std::size_t j = j0;
        G[j][i] = c0[i];
        while (dir > 0 ? j + 1 < Mt : j > 0) {
          const std::size_t jn = dir > 0 ? j + 1 : j - 1;
          D = step * D + F[jn][i] * p0 + (F[j][i] - F[jn][i]) * (p1 / hs);
          const double t = w.time(jn);
          G[jn][i] = std::exp(z * t) * c0[i] - cplx(0, 1) * D;
          j = jn;
        }
      }
    }
  for (std::size_t j = 0; j < Mt; ++j) {
    auto s = G[j];
    fft::transform_all(s, {g.Mx, g.My}, true);
    std::copy(s.begin(), s.end(), out.coeffs.begin() + std::ptrdiff_t(j * M));
  }
  return out;
}

/// Iterates u^{k+1} = eta * Gamma(u^k) from u^0 = eta * e^{it Delta} u0 and
/// records d_k in the X^{0,1/2+eps} cutoff norm.
inline std::pair<SpacetimeField, PicardReport> picard_iterate(const SpatialField& u0,
                                                              const PicardConfig& cfg) {
  cfg.validate();
  const auto w = cfg.window();
  const CutoffProfile eta{cfg.cutoff, cfg.T};
  const XsbParams p{0.0, 0.5 + cfg.eps};
  SpacetimeField u = apply_cutoff(free_evolution_field(u0, w), eta);
  PicardReport rep;
  int rising = 0;
  for (int k = 0; k < cfg.iterations; ++k) {
    SpacetimeField next = apply_cutoff(duhamel_map(u0, u), eta);
    const double d = xsb_restriction_norm_ub(next - u, p, cfg.T, cfg.cutoff);
    if (!rep.differences.empty()) {
      const double prev = rep.differences.back();
      rep.ratios.push_back(prev > 0 ? d / prev : 0.0);
      rising = d > prev ? rising + 1 : 0;
    }
    rep.differences.push_back(d);
    u = std::move(next);
    rep.iterationsRun = k + 1;
    if (rising >= 3) {
      rep.diverged = true;
      break;
    }
    if (d == 0) break;
  }
  return {u, rep};
}

/// Spatial state of a Picard iterate at the window sample nearest to t.
inline SpatialField picard_state_at(const SpacetimeField& u, double t) {
  const auto& w = u.window;
  const double j = (t - w.time(0)) / w.dt();
  const auto jr = std::llround(j);
  if (jr < 0 || jr >= std::int64_t(w.Mt) || std::abs(j - double(jr)) > 1e-6)
    throw ValidationError("time is not a sample of the Picard window");
  return time_slice(u, std::size_t(jr));
}

inline Trajectory evolve_picard(const SolverConfig& cfg, const SpatialField& u0) {
  PicardConfig pc;
  pc.T = cfg.Tend;
  // sample spacing close to dt, window [-2T, 2T)
  std::size_t Mt = 8;
  while (4 * cfg.Tend / double(Mt) > cfg.dt && Mt < (1u << 16)) Mt *= 2;
  pc.Mt = Mt;
  pc.validate();
  const auto [u, rep] = picard_iterate(u0, pc);
  Trajectory tr;
  const auto& w = u.window;
  for (std::size_t j = w.Mt / 2; j < w.Mt && w.time(j) <= cfg.Tend + 1e-12; ++j)
    detail::record(tr, cfg, w.time(j), time_slice(u, j));
  return tr;
}

}  // namespace qnls
