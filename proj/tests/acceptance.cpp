// Acceptance gate.  Each criterion prints exactly one pass/fail line with its
// measured quantities and wall time; the binary exits nonzero if any fails.
// Tolerances and budgets are pinned here on purpose: do not loosen them to
// make a failing build green.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qspde/diagnostics.hpp"
#include "qspde/dynamics.hpp"
#include "qspde/experiments.hpp"
#include "qspde/generators.hpp"
#include "qspde/ledger.hpp"
#include "qspde/noise.hpp"
#include "qspde/solver.hpp"
#include "qspde/state.hpp"

namespace {

using namespace qspde;

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "qspde_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

// 1. Rotation/alignment cancellation identity at quadrature level: the two
// pairings sum to zero relative to either term, on random band-limited tuples.
Outcome criterion_identity() {
  double worst = 0.0;
  for (const TorusGrid& g : {TorusGrid(2, 32), TorusGrid(3, 16)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(trial);
      const SpectralField f = random_band_limited(g, 1, 3, 1.0, seed);
      const SpectralField qp = expand_s03(random_band_limited(g, 5, 3, 1.0, seed + 101));
      const SpectralField q = expand_s03(random_band_limited(g, 5, 3, 1.0, seed + 202));
      const SpectralField u = random_band_limited(g, g.dim, 3, 1.0, seed + 303);
      const std::array<double, 2> t = lemma24_terms(f, qp, q, u);
      const double scale = std::max(std::abs(t[0]), std::abs(t[1]));
      worst = std::max(worst, std::abs(t[0] + t[1]) / std::max(scale, 1e-300));
    }
  }
  return {worst <= 1e-11, "max relative residual " + fmt(worst) + " (tol 1e-11)"};
}

// 2. The alignment field stays symmetric trace-free along a noisy run.
Outcome criterion_s03() {
  const TorusGrid g(2, 32);
  const MaterialConstants mc;
  InitialCondition ic;
  ic.kind = "random";
  ic.r_amplitude = 0.05;
  ic.amplitude = 0.05;
  ic.q_amplitude = 0.05;
  ic.seed = 21;
  const SymmetricState init = make_initial_state(ic, g, mc);

  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 0.5;
  cfg.noise.kind = NoiseKind::diagonal_multiplicative;
  cfg.noise.sigma = 0.1;
  cfg.noise.modes = 8;
  cfg.cutoff.R = 20.0;  // gate open: the noise actually feeds the velocity
  cfg.stop_levels = {1e9};
  const WienerPath path(31, cfg.noise.modes, cfg.dt, cfg.horizon);
  const Trajectory traj = run(init, cfg, path);
  if (traj.stopped) return {false, "run stopped at t=" + fmt(traj.stop_time)};

  double defect = 0.0, scale = 0.0;
  for (const LedgerRow& row : traj.ledger) {
    defect = std::max(defect, std::max(row.q_trace, row.q_asym));
    scale = std::max(scale, row.q_w3inf);
  }
  const SymmetricState& fin = traj.states.back();
  const double fin_scale = fin.Q.sup_norm_wk_inf(0);
  const double fin_defect = std::max(q_trace_defect(fin.Q), q_asym_defect(fin.Q));
  const bool ok = defect <= 1e-10 * scale && fin_defect <= 1e-10 * fin_scale;
  return {ok, "max defect " + fmt(defect) + " vs 1e-10*||Q|| = " + fmt(1e-10 * scale)};
}

// 3. The density mass integral is conserved pathwise; only the O(dt^2)
// quadrature term of the explicit step can drift it.
Outcome criterion_mass() {
  const TorusGrid g(2, 32);
  const MaterialConstants mc;
  InitialCondition ic;
  ic.kind = "random";
  ic.r_amplitude = 5e-4;
  ic.amplitude = 5e-4;
  ic.q_amplitude = 5e-4;
  ic.seed = 33;
  const SymmetricState init = make_initial_state(ic, g, mc);

  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.noise.kind = NoiseKind::diagonal_multiplicative;
  cfg.noise.sigma = 5e-4;
  cfg.noise.modes = 8;
  cfg.stop_levels = {1e9};
  cfg.save_every = 50;
  const WienerPath path(47, cfg.noise.modes, cfg.dt, cfg.horizon);
  const Trajectory traj = run(init, cfg, path);
  if (traj.stopped) return {false, "run stopped at t=" + fmt(traj.stop_time)};

  const int k0[3] = {0, 0, 0};
  auto mass = [&](const SymmetricState& st) {
    return detail::norm_constant(g) * desymmetrize(st.r, mc).coeff(0, k0).real();
  };
  const double m0 = mass(traj.states.front());
  double drift = 0.0;
  for (const SymmetricState& st : traj.states) drift = std::max(drift, std::abs(mass(st) - m0));
  const double rel = drift / std::abs(m0);
  return {rel <= 1e-9, "relative drift " + fmt(rel) + " over " +
                           std::to_string(traj.states.size()) + " checkpoints (tol 1e-9)"};
}

// 4. Closed gate: density and velocity freeze bitwise, the alignment field
// follows the exact heat decay of its single mode.
Outcome criterion_freeze() {
  const TorusGrid g(2, 32);
  const MaterialConstants mc;
  InitialCondition ic;
  ic.kind = "single-mode";
  ic.amplitude = 0.0;
  ic.q_amplitude = 0.05;
  ic.mode[0] = 2;
  ic.mode[1] = 1;
  const SymmetricState init = make_initial_state(ic, g, mc);

  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 0.1;
  cfg.scheme = TimeScheme::exp_euler;
  cfg.cutoff.R = 1e-6;  // norms sit far above the gate, so phi == 0
  cfg.stop_levels = {1e9};
  const WienerPath path(1, 1, cfg.dt, cfg.horizon);
  const Trajectory traj = run(init, cfg, path);
  if (traj.stopped) return {false, "run stopped"};

  const SymmetricState& fin = traj.states.back();
  const double ru_diff = std::max(detail::sup_coeff_diff(init.r, fin.r),
                                  detail::sup_coeff_diff(init.u, fin.u));
  const double k2 = static_cast<double>(ic.mode[0] * ic.mode[0] + ic.mode[1] * ic.mode[1]);
  const double decay = std::exp(-mc.Gamma * mc.L * k2 * (fin.t - init.t));
  double err = 0.0, scale = 0.0;
  for (int c = 0; c < 9; ++c)
    for (std::size_t i = 0; i < g.points(); ++i) {
      err = std::max(err, std::abs(fin.Q.at(c, i) - decay * init.Q.at(c, i)));
      scale = std::max(scale, std::abs(init.Q.at(c, i)));
    }
  const double q_rel = err / (decay * scale);
  const bool ok = ru_diff == 0.0 && q_rel <= 1e-6;
  return {ok, "r,u sup diff " + fmt(ru_diff) + " (want 0), heat-decay rel err " + fmt(q_rel) +
                  " (tol 1e-6)"};
}

// 5. Two-sided exponential density envelope: the fitter recovers the exact
// rate 1/2 of uniform compression div u = -1 at gamma = 2, and random runs
// never leave their fitted envelope.
Outcome criterion_density_bound() {
  // dr/dt = -((gamma-1)/2) r div u = r/2, so r(t) = r0 e^{t/2} exactly.
  std::vector<LedgerRow> rows(101);
  for (int i = 0; i <= 100; ++i) {
    LedgerRow& row = rows[static_cast<std::size_t>(i)];
    row.t = 0.01 * i;
    row.min_r = row.max_r = 2.0 * std::exp(0.5 * row.t);
    row.phi = 1.0;
    row.u_w2inf = 1.0;
  }
  const LowerBoundFit uniform = audit_lower_bound(rows, 2.0, 2);
  const bool fit_ok = std::abs(uniform.c_hat - 0.5) <= 0.025 && uniform.violations == 0;

  const TorusGrid g(2, 16);
  const MaterialConstants mc;
  int violations = 0;
  for (int i = 0; i < 20; ++i) {
    InitialCondition ic;
    ic.kind = "random";
    ic.r_amplitude = 0.02;
    ic.amplitude = 0.02;
    ic.q_amplitude = 0.02;
    ic.seed = 400 + static_cast<std::uint64_t>(i);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 0.05;
    cfg.noise.kind = NoiseKind::diagonal_multiplicative;
    cfg.noise.sigma = 0.02;
    cfg.noise.modes = 8;
    cfg.cutoff.R = 8.0;  // the fitter needs open-gate rows
    cfg.stop_levels = {1e9};
    const WienerPath path(500 + static_cast<std::uint64_t>(i), cfg.noise.modes, cfg.dt,
                          cfg.horizon);
    const Trajectory traj = run(make_initial_state(ic, g, mc), cfg, path);
    if (traj.stopped) return {false, "random run " + std::to_string(i) + " stopped"};
    violations += audit_lower_bound(traj.ledger, mc.gamma, g.dim).violations;
  }
  return {fit_ok && violations == 0,
          "fitted rate " + fmt(uniform.c_hat) + " (want 0.5 within 5%), envelope violations " +
              std::to_string(violations) + " over 20 runs"};
}

// 6. Pathwise agreement of the explicit step and the 3-sweep inner iteration
// on one noise realization.
Outcome criterion_uniqueness() {
  const TorusGrid g(2, 32);
  MaterialConstants mc;
  mc.upsilon = 3e-3;
  mc.lambda = 3e-3;
  InitialCondition ic;
  ic.kind = "random";
  ic.r_amplitude = 3e-3;
  ic.amplitude = 3e-3;
  ic.q_amplitude = 3e-3;
  ic.seed = 61;
  const SymmetricState init = make_initial_state(ic, g, mc);

  SolverConfig cfg;
  cfg.dt = 5e-5;
  cfg.horizon = 0.1;
  cfg.noise.kind = NoiseKind::diagonal_multiplicative;
  cfg.noise.sigma = 1e-5;
  cfg.noise.modes = 8;
  cfg.stop_levels = {1e9};
  cfg.fixed_point.tol = 0.0;
  const WienerPath path(71, cfg.noise.modes, cfg.dt, cfg.horizon);

  cfg.fixed_point.max_iters = 1;
  const Trajectory explicit_run = run(init, cfg, path);
  cfg.fixed_point.max_iters = 3;
  const Trajectory iterated_run = run(init, cfg, path);
  if (explicit_run.stopped || iterated_run.stopped) return {false, "a variant stopped"};

  const double diff =
      detail::state_sup_diff(explicit_run.states.back(), iterated_run.states.back());
  return {diff <= 1e-8, "sup coefficient difference " + fmt(diff) + " at t=0.1 (tol 1e-8)"};
}

// 7. Temporal self-convergence on the pinned dt ladder, against a common
// fine-step reference with refinement-consistent noise.
Outcome criterion_convergence() {
  ExperimentSpec spec;
  spec.name = "acc7det";
  spec.grid = TorusGrid(2, 16);
  spec.solver.horizon = 0.1;
  spec.solver.stop_levels = {1e9};
  spec.ic.kind = "single-mode";
  spec.ic.amplitude = 0.1;
  spec.ic.q_amplitude = 0.2;
  spec.ic.mode[0] = 1;
  spec.ic.mode[1] = 1;
  spec.dt_ladder = {4e-3, 2e-3, 1e-3, 5e-4};
  spec.ref_dt = 1.25e-4;
  spec.out_dir = (scratch_dir() / "c7").string();
  const ConvergenceReport det = convergence_study(spec);
  if (!det.order) return {false, "deterministic ladder produced no order (non-monotone)"};

  // sigma large enough that the sqrt(dt) noise error dominates the O(dt)
  // deterministic error on this ladder; otherwise the fit reads the wrong slope
  spec.name = "acc7stoch";
  spec.solver.noise.kind = NoiseKind::diagonal_multiplicative;
  spec.solver.noise.sigma = 0.5;
  spec.solver.noise.modes = 8;
  spec.noise_seed = 73;
  spec.converge_paths = 16;
  const ConvergenceReport stoch = convergence_study(spec);
  if (!stoch.order) return {false, "stochastic ladder produced no order (non-monotone)"};

  const bool ok = *det.order >= 0.9 && *stoch.order >= 0.45;
  return {ok, "deterministic order " + fmt(*det.order) + " (need >= 0.9), strong order " +
                  fmt(*stoch.order) + " (need >= 0.45)"};
}

// 8. Calibrated inequality constants are reproducible: two independent
// 200-sample ensembles agree within 10% and no sample exceeds its constant.
Outcome criterion_calibration() {
  ExperimentSpec a;
  a.name = "acc8a";
  a.grid = TorusGrid(2, 32);
  a.audit_samples = 200;
  a.audit_seed = 1001;
  a.audit_s = 4;
  a.audit_r_amplitude = 0.05;
  a.out_dir = (scratch_dir() / "c8").string();
  ExperimentSpec b = a;
  b.name = "acc8b";
  b.audit_seed = 2002;
  fs::create_directories(a.out_dir);

  bool all_pass = true;
  double worst_change = 0.0;
  std::string worst_label = "none";
  auto compare = [&](const char* label, double va, double vb) {
    const double change = rel_change(va, vb);
    if (change > worst_change) {
      worst_change = change;
      worst_label = label;
    }
  };
  // Sampling bands wide enough that the 200-sample max self-averages over many
  // modes; narrow bands make the max statistic a one-mode lottery.
  const std::pair<std::string, int> kinds[] = {
      {"commutator", 5}, {"moser", 4}, {"composition", 5}};
  for (const auto& [kind, kmax] : kinds) {
    a.audit_kmax = kmax;
    b.audit_kmax = kmax;
    const AuditRecord ra = detail::audit_samples_batch(a, kind);
    const AuditRecord rb = detail::audit_samples_batch(b, kind);
    all_pass = all_pass && ra.pass && rb.pass;
    if (kind == "composition") {
      compare("composition-norm", ra.metrics.at("norm_max_ratio"), rb.metrics.at("norm_max_ratio"));
      compare("composition-diff", ra.metrics.at("diff_max_ratio"), rb.metrics.at("diff_max_ratio"));
    } else {
      compare(kind.c_str(), ra.metrics.at("max_ratio"), rb.metrics.at("max_ratio"));
    }
  }
  const bool ok = all_pass && worst_change <= 0.10;
  return {ok, "worst ensemble change " + fmt(worst_change) + " (" + worst_label +
                  ", tol 0.10), all samples within constants: " + (all_pass ? "yes" : "no")};
}

// 9. A single fitted growth constant certifies the discrete energy inequality
// at every step of a noise-free run, stably under dt refinement.
Outcome criterion_energy_ledger() {
  const TorusGrid g(2, 16);
  const MaterialConstants mc;
  InitialCondition ic;
  ic.kind = "random";
  ic.r_amplitude = 0.1;
  ic.amplitude = 0.1;
  ic.q_amplitude = 0.3;
  ic.seed = 91;
  const SymmetricState init = make_initial_state(ic, g, mc);

  auto fit_at = [&](double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.horizon = 0.25;
    cfg.cutoff.R = 20.0;  // open-gate rows make the fitted constant nontrivial
    cfg.stop_levels = {1e9};
    const WienerPath path(1, 1, cfg.dt, cfg.horizon);
    const Trajectory traj = run(init, cfg, path);
    if (traj.stopped) throw std::runtime_error("energy ledger run stopped");
    return energy_ledger_check(traj.ledger);
  };
  const LedgerCheck coarse = fit_at(1e-3);
  const LedgerCheck fine = fit_at(5e-4);
  const double change = rel_change(coarse.c_hat, fine.c_hat);
  const bool ok = coarse.ok && fine.ok && change <= 0.10;
  return {ok, "fitted constants " + fmt(coarse.c_hat) + " / " + fmt(fine.c_hat) + " (change " +
                  fmt(change) + ", tol 0.10), slack nonnegative: " +
                  ((coarse.ok && fine.ok) ? "yes" : "no")};
}

// 10. Bit-identical ledgers from identical configuration and seed at a fixed
// thread count.
Outcome criterion_determinism() {
  const char* saved = std::getenv("QSPDE_THREADS");
  const std::string saved_value = saved ? saved : "";
  setenv("QSPDE_THREADS", "2", 1);

  ExperimentSpec spec;
  spec.name = "acc10";
  spec.grid = TorusGrid(2, 16);
  spec.solver.dt = 1e-3;
  spec.solver.horizon = 0.05;
  spec.solver.noise.kind = NoiseKind::diagonal_multiplicative;
  spec.solver.noise.sigma = 0.05;
  spec.solver.noise.modes = 8;
  spec.solver.stop_levels = {1e9};
  spec.ic.kind = "random";
  spec.ic.r_amplitude = 0.05;
  spec.ic.amplitude = 0.05;
  spec.ic.q_amplitude = 0.05;
  spec.paths = 3;
  spec.write_snapshots = false;

  spec.out_dir = (scratch_dir() / "c10a").string();
  const RunManifest first = run_experiment(spec);
  spec.out_dir = (scratch_dir() / "c10b").string();
  const RunManifest second = run_experiment(spec);

  if (saved)
    setenv("QSPDE_THREADS", saved_value.c_str(), 1);
  else
    unsetenv("QSPDE_THREADS");

  bool ok = first.trajectories.size() == second.trajectories.size() && !first.trajectories.empty();
  int matched = 0;
  for (std::size_t i = 0; ok && i < first.trajectories.size(); ++i) {
    const TrajectoryRecord& ta = first.trajectories[i];
    const TrajectoryRecord& tb = second.trajectories[i];
    ok = ta.status == "completed" && tb.status == "completed" && !ta.ledger_hash.empty() &&
         ta.ledger_hash == tb.ledger_hash;
    if (ok) ++matched;
  }
  return {ok, std::to_string(matched) + "/" + std::to_string(first.trajectories.size()) +
                  " ledger hashes identical across reruns"};
}

struct Criterion {
  int id;
  const char* label;
  double budget_seconds;
  std::function<Outcome()> fn;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "cancellation identity", 10.0, criterion_identity},
      {2, "symmetric trace-free preservation", 60.0, criterion_s03},
      {3, "mass conservation", 120.0, criterion_mass},
      {4, "closed-gate freeze and heat decay", 10.0, criterion_freeze},
      {5, "density envelope", 120.0, criterion_density_bound},
      {6, "pathwise uniqueness", 120.0, criterion_uniqueness},
      {7, "temporal self-convergence", 600.0, criterion_convergence},
      {8, "calibrated constant stability", 300.0, criterion_calibration},
      {9, "energy ledger certificate", 300.0, criterion_energy_ledger},
      {10, "ledger determinism", 60.0, criterion_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = out.pass && in_budget;
    if (!pass) ++failures;
    std::printf("criterion %2d %-36s %s  %s  [%.1fs, budget %.0fs]\n", c.id, c.label,
                pass ? "PASS" : "FAIL", out.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
  }
  std::printf("acceptance: %d of %zu criteria FAILED\n", failures, criteria.size());
  return 1;
}
