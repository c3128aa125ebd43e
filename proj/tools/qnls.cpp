// qnls: command-line runner for the solver and the estimate sweeps.
// Exit codes: 0 success, 2 validation or usage error, 3 failed assertion, 1 internal error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnls/initial_data.hpp"
#include "qnls/probes.hpp"
#include "qnls/solver.hpp"

using namespace qnls;

namespace {

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  double tol = 0.10;
  EstimateParams params{};
};

struct Outcome {
  ojson result = ojson::object();
  std::vector<std::string> failures;
  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

ojson params_json(const Common& c, ojson extra) {
  ojson p = to_json(c.params);
  p["tol"] = c.tol;
  for (auto it = extra.begin(); it != extra.end(); ++it) p[it.key()] = it.value();
  return p;
}

std::string csv_path(const std::string& explicitCsv, const std::string& out, const std::string& fallback) {
  if (!explicitCsv.empty()) return explicitCsv;
  if (!out.empty()) {
    const auto dot = out.rfind('.');
    const auto slash = out.find_last_of('/');
    const bool hasExt = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (hasExt ? out.substr(0, dot) : out) + ".csv";
  }
  return fallback;
}

void open_or_fail(std::ofstream& f, const std::string& path) {
  f.open(path);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
}

int emit(const std::string& command, const Common& c, const ojson& params, const Outcome& o) {
  ojson j;
  j["command"] = command;
  j["seed"] = c.seed;
  j["params"] = params;
  j["result"] = o.result;
  j["status"] = o.failures.empty() ? "pass" : "fail";
  j["failures"] = o.failures;
  const std::string text = j.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f;
    open_or_fail(f, c.out);
    f << text;
  }
  for (const auto& m : o.failures) std::cerr << "assertion failed: " << m << '\n';
  return o.failures.empty() ? 0 : 3;
}

void check_report(Outcome& o, const RatioReport& r, double tol) {
  o.check(std::isfinite(r.maxRatio), r.constantLabel + " is not finite");
  o.check(r.stable(tol), r.constantLabel + " grows by " + std::to_string(r.growth()) + " over the last doubling");
}

SolverConfig::Method parse_method(const std::string& m) {
  if (m == "strang") return SolverConfig::Method::strang;
  if (m == "picard") return SolverConfig::Method::picard;
  throw ValidationError("unknown method '" + m + "'");
}

std::vector<std::int64_t> dyadic_range(std::int64_t lo, std::int64_t hi, const char* what) {
  if (!is_dyadic(lo) || !is_dyadic(hi) || lo > hi)
    throw ValidationError(std::string(what) + " range must be dyadic and ordered");
  std::vector<std::int64_t> v;
  for (auto x = lo; x <= hi; x *= 2) v.push_back(x);
  return v;
}

void add_common(CLI::App* sub, Common& c, bool estimates) {
  sub->add_option("--seed", c.seed, "Base seed");
  sub->add_option("--threads", c.threads, "Worker threads (fallback: QNLS_THREADS)");
  sub->add_option("--out", c.out, "Write the JSON report here instead of stdout");
  sub->add_option("--tol", c.tol, "Allowed growth over the last doubling");
  if (estimates) {
    sub->add_option("--eps", c.params.eps, "Angle exponent epsilon");
    sub->add_option("--delta1", c.params.delta1, "Output modulation offset delta1");
    sub->add_option("--delta2", c.params.delta2, "Input modulation offset delta2");
    sub->add_option("--s", c.params.s, "Sobolev index");
    sub->add_option("--c-nr", c.params.c_nr, "Nonresonant threshold constant");
    sub->add_option("--kappa", c.params.kappa, "Modulation split exponent kappa");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral lab for the quadratic NLS i u_t + Lap u = |u|^2 on the 2-torus"};
  app.require_subcommand(1);
  Common c;
  std::string u0Spec, method = "strang", csv;
  InitialDataOptions ido;
  std::size_t grid = 16;
  double dt = 1e-3, Tend = 1.0, dtMin = 1e-6, cap = 1e6;
  bool dealias = false;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Split-step evolution with blow-up detection");
  add_common(sim, c, false);
  sim->add_option("--u0", u0Spec, "Initial data: const:<z>, mode:<n1>,<n2>:<amp>, gauss:<seed>:<s>")->required();
  sim->add_option("--grid", grid, "Grid size per direction (power of two)");
  sim->add_option("--dt", dt, "Time step");
  sim->add_option("--Tend", Tend, "Final time");
  sim->add_option("--method", method, "strang or picard");
  sim->add_flag("--dealias", dealias, "Apply the 2/3 rule");
  sim->add_option("--norm", ido.norm, "H^s norm of gauss data");
  sim->add_option("--band", ido.band, "Frequency band of gauss data");
  sim->add_option("--decay", ido.decay, "Modulus decay of gauss data");
  sim->add_option("--csv", csv, "Trace CSV path");
  sim->add_option("--dt-min", dtMin, "Smallest refinement step");
  sim->add_option("--cap", cap, "Blow-up norm cap");

  // picard
  double T = 0.1, picEps = 0.1;
  int iterations = 8;
  std::size_t Mt = 256;
  auto* pic = app.add_subcommand("picard", "Picard iteration on the Duhamel map");
  add_common(pic, c, false);
  pic->add_option("--u0", u0Spec, "Initial data (default gauss:<seed>:0 with norm 0.1)");
  pic->add_option("--T", T, "Time horizon");
  pic->add_option("--iterations", iterations, "Number of iterations");
  pic->add_option("--Mt", Mt, "Time samples on [-2T, 2T)");
  pic->add_option("--b-eps", picEps, "Modulation exponent offset, b = 1/2 + b-eps");
  pic->add_option("--grid", grid, "Grid size per direction");
  pic->add_option("--dt", dt, "Split-step comparison step");
  pic->add_option("--norm", ido.norm, "L2 norm of gauss data");

  // blowup-scan
  double amp = 1.0;
  int phases = 16;
  auto* scan = app.add_subcommand("blowup-scan", "Blow-up time of constant data around a circle");
  add_common(scan, c, false);
  scan->add_option("--amp", amp, "Modulus of the constant data");
  scan->add_option("--phases", phases, "Number of phases on the circle");
  scan->add_option("--Tend", Tend, "Final time");
  scan->add_option("--dt", dt, "Time step");
  scan->add_option("--grid", grid, "Grid size per direction");
  scan->add_option("--csv", csv, "Trace CSV path");

  // verify-counting
  std::int64_t Nmin = 16, Nmax = 256;
  int rotations = 64;
  auto* cnt = app.add_subcommand("verify-counting", "Lattice points in a thin cap");
  add_common(cnt, c, false);
  cnt->add_option("--Nmin", Nmin, "Smallest N");
  cnt->add_option("--Nmax", Nmax, "Largest N");
  cnt->add_option("--rotations", rotations, "Rotations per instance");

  // verify-bilinear-strichartz
  StrichartzSweepConfig sc;
  auto* bs = app.add_subcommand("verify-bilinear-strichartz", "Bilinear block estimate");
  add_common(bs, c, false);
  bs->add_option("--Nmax", sc.Nmax, "Largest frequency block");
  bs->add_option("--Lmax", sc.Lmax, "Largest modulation block");
  bs->add_option("--trials", sc.trials, "Number of trials");
  bs->add_option("--budget", sc.budget, "Points per sampled field");

  // verify-bilinear-xsb
  XsbSweepConfig xc;
  std::int64_t xNmax = 16, xLmax = 64;
  xc.trialsPerPair = 100;
  auto* bx = app.add_subcommand("verify-bilinear-xsb", "Bilinear X^{s,b} estimate by case");
  add_common(bx, c, true);
  bx->add_option("--Nmax", xNmax, "Largest frequency block");
  bx->add_option("--Lmax", xLmax, "Largest modulation block (blocks 1, 4, 16, ...)");
  bx->add_option("--trials-per-pair", xc.trialsPerPair, "Trials per block pair and pattern");
  bx->add_option("--budget", xc.budget, "Points per sampled field");

  // verify-trilinear
  TrilinearSweepConfig tc;
  auto* tri = app.add_subcommand("verify-trilinear", "Trilinear form on the unit time interval");
  add_common(tri, c, false);
  tri->add_option("--Nmax", tc.Nmax, "Largest frequency block");
  tri->add_option("--trials", tc.trials, "Number of trials");
  tri->add_option("--modes", tc.modes, "Modes per factor");

  // verify-modulation-lemmas
  ModulationSweepConfig mc;
  auto* mod = app.add_subcommand("verify-modulation-lemmas", "High/low modulation and fiber bounds");
  add_common(mod, c, true);
  mod->add_option("--N2min", mc.N2min, "Smallest N2");
  mod->add_option("--N2max", mc.N2max, "Largest N2");
  mod->add_option("--trials", mc.trials, "Trials for the high and low sweeps");
  mod->add_option("--fiber-trials", mc.fiberTrials, "Trials for the fiber sweep");

  // decompose-cases
  int scanRadius = 16, tauMax = 20;
  auto* dec = app.add_subcommand("decompose-cases", "Classify every interaction in a box");
  add_common(dec, c, true);
  dec->add_option("--scan", scanRadius, "Frequency box radius");
  dec->add_option("--tau", tauMax, "Integer modulation range");

  // l4-probe
  L4Config lc;
  std::int64_t lNmax = 128;
  double sControl = 0.2;
  auto* l4 = app.add_subcommand("l4-probe", "L^4 Strichartz loss at s = 0 and a control s");
  add_common(l4, c, false);
  l4->add_option("--Nmax", lNmax, "Largest N");
  l4->add_option("--b", lc.b, "Modulation exponent b > 1/2");
  l4->add_option("--gaussians", lc.gaussians, "Random Gaussian families per N");
  l4->add_option("--s-control", sControl, "Control Sobolev index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  auto* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    if (!(c.tol >= 0)) throw ValidationError("tol must be nonnegative");
    c.params.validate();
    Outcome o;

    if (cmd == "simulate") {
      const SpaceGrid g(grid, grid);
      const auto u0 = parse_initial_data(u0Spec, g, ido);
      SolverConfig cfg;
      cfg.grid = g, cfg.dt = dt, cfg.Tend = Tend, cfg.method = parse_method(method);
      cfg.dealias = dealias, cfg.dtMin = dtMin, cfg.blowupCap = cap, cfg.storeStates = false;
      const auto tr = evolve(cfg, u0);
      const std::string path = csv_path(csv, c.out, "qnls_trace.csv");
      std::ofstream f;
      open_or_fail(f, path);
      tr.write_csv(f);
      const ojson params = params_json(c, ojson{{"u0", u0Spec}, {"grid", grid}, {"dt", dt}, {"Tend", Tend},
                                                {"method", method}, {"dealias", dealias}, {"norm", ido.norm},
                                                {"band", ido.band}, {"decay", ido.decay}, {"dtMin", dtMin},
                                                {"cap", cap}});
      const cplx m0 = u0.mean();
      o.result["initialMean"] = {m0.real(), m0.imag()};
      o.result["blowupCriterion"] = blowup_criterion(u0);
      if (tr.blowup) {
        o.result["blowup"] = ojson{{"Tstar", tr.blowup->Tstar}, {"lower", tr.blowup->lower},
                                   {"upper", tr.blowup->upper}, {"reason", tr.blowup->reason}};
      } else {
        o.result["blowup"] = nullptr;
      }
      const bool constant = sup_norm(u0 - SpatialField(g, m0)) == 0;
      if (constant) {
        const double ts = pointwise_blowup_time(m0);
        o.result["closedFormTstar"] = std::isfinite(ts) ? ojson(ts) : ojson(nullptr);
      }
      o.result["samples"] = tr.times.size();
      o.result["finalTime"] = tr.times.back();
      const cplx mf = tr.meanTrace.back();
      o.result["finalMean"] = {mf.real(), mf.imag()};
      o.result["finalL2"] = tr.l2Trace.back();
      if (tr.times.size() >= 3) o.result["meanLawError"] = mean_derivative_check(tr);
      double reDrift = 0;
      bool imMonotone = true;
      for (std::size_t k = 0; k < tr.meanTrace.size(); ++k) {
        reDrift = std::max(reDrift, std::abs(tr.meanTrace[k].real() - m0.real()));
        if (k > 0 && tr.meanTrace[k].imag() > tr.meanTrace[k - 1].imag() + 1e-14) imMonotone = false;
      }
      o.result["reMeanDrift"] = reDrift;
      o.result["imMeanNonincreasing"] = imMonotone;
      o.result["csv"] = path;
      return emit(cmd, c, params, o);
    }

    if (cmd == "picard") {
      const SpaceGrid g(grid, grid);
      InitialDataOptions po = ido;
      if (u0Spec.empty()) {
        u0Spec = "gauss:" + std::to_string(c.seed) + ":0";
        if (!pic->count("--norm")) po.norm = 0.1;
        po.band = 3, po.decay = 2.0;
      }
      const auto u0 = parse_initial_data(u0Spec, g, po);
      PicardConfig pc;
      pc.T = T, pc.iterations = iterations, pc.Mt = Mt, pc.eps = picEps;
      const auto [u, rep] = picard_iterate(u0, pc);
      SolverConfig cfg;
      cfg.grid = g, cfg.dt = dt, cfg.Tend = T;
      const auto tr = evolve(cfg, u0);
      const double splitDiff = l2_norm(picard_state_at(u, T) - tr.states.back());
      const ojson params = params_json(c, ojson{{"u0", u0Spec}, {"grid", grid}, {"T", T}, {"iterations", iterations},
                                                {"Mt", Mt}, {"bEps", picEps}, {"dt", dt}, {"norm", po.norm},
                                                {"cutoff", to_string(pc.cutoff)}});
      o.result["initialL2"] = l2_norm(u0);
      o.result["differences"] = rep.differences;
      o.result["ratios"] = rep.ratios;
      o.result["diverged"] = rep.diverged;
      o.result["iterationsRun"] = rep.iterationsRun;
      o.result["splitStepL2Difference"] = splitDiff;
      o.check(!rep.diverged, "Picard iteration diverged");
      return emit(cmd, c, params, o);
    }

    if (cmd == "blowup-scan") {
      if (phases < 1) throw ValidationError("phases must be positive");
      if (!(amp > 0)) throw ValidationError("amp must be positive");
      const SpaceGrid g(grid, grid);
      const std::string path = csv_path(csv, c.out, "qnls_blowup_scan.csv");
      std::ofstream f;
      open_or_fail(f, path);
      f << "phase,re,im,closed_form_tstar,detected_tstar,rel_error\n";
      f.precision(17);
      ojson rows = ojson::array();
      double worst = 0;
      for (int k = 0; k < phases; ++k) {
        const double phi = 2 * std::numbers::pi * k / phases;
        const cplx z = std::polar(amp, phi);
        SolverConfig cfg;
        cfg.grid = g, cfg.dt = dt, cfg.Tend = Tend, cfg.storeStates = false;
        cfg.dtMin = std::min(1e-6, dt);
        const auto tr = evolve(cfg, SpatialField(g, z));
        const double exact = pointwise_blowup_time(z);
        const bool expect = std::isfinite(exact) && exact < Tend;
        const double got = tr.blowup ? tr.blowup->Tstar : std::numeric_limits<double>::infinity();
        double err = 0;
        if (expect) err = std::abs(got - exact) / exact;
        else if (tr.blowup) err = std::numeric_limits<double>::infinity();
        worst = std::max(worst, err);
        f << phi << ',' << z.real() << ',' << z.imag() << ',' << exact << ',' << got << ',' << err << '\n';
        rows.push_back(ojson{{"phase", phi},
                             {"closedForm", std::isfinite(exact) ? ojson(exact) : ojson(nullptr)},
                             {"detected", tr.blowup ? ojson(got) : ojson(nullptr)},
                             {"relError", std::isfinite(err) ? ojson(err) : ojson(nullptr)}});
      }
      const ojson params = params_json(c, ojson{{"amp", amp}, {"phases", phases}, {"Tend", Tend}, {"dt", dt}, {"grid", grid}});
      o.result["rows"] = rows;
      o.result["maxRelError"] = std::isfinite(worst) ? ojson(worst) : ojson(nullptr);
      o.result["csv"] = path;
      o.check(worst <= 0.02, "detected blow-up time off by more than 2%");
      return emit(cmd, c, params, o);
    }

    if (cmd == "verify-counting") {
      CountingSweepConfig cc;
      cc.Nlist = dyadic_range(Nmin, Nmax, "N");
      cc.rotations = rotations, cc.seed = c.seed, cc.threads = c.threads;
      const auto r = counting_sweep(cc);
      o.result = r.to_json();
      check_report(o, r, c.tol);
      return emit(cmd, c, params_json(c, ojson{{"Nmin", Nmin}, {"Nmax", Nmax}, {"rotations", rotations}}), o);
    }

    if (cmd == "verify-bilinear-strichartz") {
      sc.seed = c.seed, sc.threads = c.threads;
      const auto r = strichartz_sweep(sc);
      o.result = r.to_json();
      check_report(o, r, c.tol);
      return emit(cmd, c,
                  params_json(c, ojson{{"Nmax", sc.Nmax}, {"Lmax", sc.Lmax}, {"trials", sc.trials},
                                       {"budget", sc.budget}, {"dtau", sc.dtau}}),
                  o);
    }

    if (cmd == "verify-bilinear-xsb") {
      xc.Nlist = dyadic_range(1, xNmax, "N");
      if (!is_dyadic(xLmax)) throw ValidationError("Lmax must be dyadic");
      xc.Llist.clear();
      for (std::int64_t L = 1; L <= xLmax; L *= 4) xc.Llist.push_back(L);
      xc.params = c.params, xc.seed = c.seed, xc.threads = c.threads;
      const auto r = xsb_sweep(xc);
      o.result = r.to_json();
      check_report(o, r, c.tol);
      double envelope = 0;
      for (auto& [k, v] : r.extra["cases"].items()) envelope = std::max(envelope, v["halfRangeMax"].get<double>());
      for (auto& [k, v] : r.extra["cases"].items())
        o.check(v["max"].get<double>() <= (1 + c.tol) * envelope, "case " + k + " exceeds the half-range envelope");
      o.result["caseEnvelope"] = envelope;
      return emit(cmd, c,
                  params_json(c, ojson{{"Nmax", xNmax}, {"Lmax", xLmax}, {"trialsPerPair", xc.trialsPerPair},
                                       {"budget", xc.budget}, {"dtau", xc.dtau}}),
                  o);
    }

    if (cmd == "verify-trilinear") {
      tc.seed = c.seed, tc.threads = c.threads;
      const auto r = trilinear_sweep(tc);
      // e^{ix}, conj e^{iy}, conj e^{i(x-y)}: the time phase is 2t
      const double witness = std::abs(trilinear_form(ModeList{{{1, 0}, 1.0}}, ModeList{{{0, 1}, 1.0}},
                                                     ModeList{{{1, -1}, 1.0}}, {false, true, true}));
      o.result = r.to_json();
      o.result["singleModeWitness"] = ojson{{"value", witness}, {"expected", std::abs(std::sin(1.0))}};
      check_report(o, r, c.tol);
      o.check(std::abs(witness - std::abs(std::sin(1.0))) <= 1e-8, "single-mode witness mismatch");
      return emit(cmd, c, params_json(c, ojson{{"Nmax", tc.Nmax}, {"trials", tc.trials}, {"modes", tc.modes}}), o);
    }

    if (cmd == "verify-modulation-lemmas") {
      mc.params = c.params, mc.seed = c.seed, mc.threads = c.threads;
      const auto m = modulation_sweeps(mc);
      o.result = m.to_json();
      for (const auto* r : {&m.high, &m.low, &m.fiber}) check_report(o, *r, c.tol);
      return emit(cmd, c,
                  params_json(c, ojson{{"N2min", mc.N2min}, {"N2max", mc.N2max}, {"trials", mc.trials},
                                       {"fiberTrials", mc.fiberTrials}, {"budget", mc.budget}, {"dtau", mc.dtau}}),
                  o);
    }

    if (cmd == "decompose-cases") {
      if (scanRadius < 1 || tauMax < 0) throw ValidationError("scan must be positive and tau nonnegative");
      const auto r = decompose_scan(scanRadius, tauMax, c.params);
      ojson counts;
      std::uint64_t sum = 0;
      for (std::size_t k = 0; k < kCaseCount; ++k) counts[to_string(kAllCases[k])] = r.counts[k], sum += r.counts[k];
      o.result["counts"] = counts;
      o.result["total"] = r.total;
      o.result["sum"] = sum;
      o.result["phaseBoundViolations"] = r.phaseBoundViolations;
      o.check(sum == r.total, "case counts do not sum to the total");
      o.check(r.phaseBoundViolations == 0, "phase identity violated");
      return emit(cmd, c, params_json(c, ojson{{"scan", scanRadius}, {"tau", tauMax}}), o);
    }

    if (cmd == "l4-probe") {
      lc.Nlist = dyadic_range(8, lNmax, "N");
      lc.svals = {0.0, sControl};
      lc.seed = c.seed, lc.threads = c.threads;
      const auto r = l4_loss_probe(lc);
      o.result = r.to_json(lc);
      const auto& ctl = r.series[1];
      o.check(std::isfinite(ctl.fullRangeMax) && ctl.growth() <= 1 + c.tol,
              "control series grows by " + std::to_string(ctl.growth()));
      return emit(cmd, c, params_json(c, ojson{{"Nmax", lNmax}, {"b", lc.b}, {"gaussians", lc.gaussians},
                                               {"sControl", sControl}}),
                  o);
    }
    throw ValidationError("unknown command");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
