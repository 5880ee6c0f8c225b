#pragma once

// Time integration: Euler-Maruyama stepping with an optional inner
// fixed-point iteration on the velocity drift, an optional integrating
// factor on the stiff linear operators, Galerkin projection of the
// velocity, density-floor step rejection, and stopping-level detection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspde/dynamics.hpp"
#include "qspde/ledger.hpp"
#include "qspde/noise.hpp"
#include "qspde/state.hpp"
#include "qspde/truncation.hpp"

namespace qspde {

enum class TimeScheme { euler, exp_euler };

struct FixedPointOptions {
  int max_iters = 1;  // 1 reproduces the plain explicit step
  double tol = 0.0;   // sup-coefficient tolerance; 0 runs all iterations
};

struct SolverConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  TimeScheme scheme = TimeScheme::euler;
  GalerkinLevel galerkin{0};  // velocity subspace; 0 disables the projection
  FixedPointOptions fixed_point;
  CutoffProfile cutoff{1.0};
  ClampProfile clamp{};
  NoiseModel noise{};
  DynamicsOptions dynamics{};
  double density_floor = 1e-8;
  std::vector<double> stop_levels;  // empty: geometric ladder 2, 4, ..., 256
  int ledger_s = 2;
  int save_every = 0;  // state snapshot cadence in steps; 0 keeps endpoints only

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (!(horizon >= 0.0)) throw std::invalid_argument("SolverConfig: horizon must be >= 0");
    if (fixed_point.max_iters < 1)
      throw std::invalid_argument("SolverConfig: fixed_point.max_iters must be >= 1");
    if (!(density_floor > 0.0))
      throw std::invalid_argument("SolverConfig: density_floor must be > 0");
    if (ledger_s < 0) throw std::invalid_argument("SolverConfig: ledger_s must be >= 0");
    if (save_every < 0) throw std::invalid_argument("SolverConfig: save_every must be >= 0");
    for (double l : stop_levels)
      if (!(l > 0.0)) throw std::invalid_argument("SolverConfig: stop levels must be > 0");
    noise.validate();
  }

  std::vector<double> levels() const {
    if (!stop_levels.empty()) return stop_levels;
    std::vector<double> l;
    for (double v = 2.0; v <= 256.0; v *= 2.0) l.push_back(v);
    return l;
  }
};

// Explicit heat stability bound for the alignment diffusion; the
// integrating-factor scheme handles that operator exactly.
inline void check_stability(const SolverConfig& cfg, const TorusGrid& g,
                            const MaterialConstants& mc) {
  if (cfg.scheme == TimeScheme::exp_euler) return;
  const double cut = static_cast<double>(g.dealias_cut());
  const double k2max = static_cast<double>(g.dim) * cut * cut;
  if (cfg.dt * mc.Gamma * mc.L * k2max > 2.0)
    throw std::invalid_argument(
        "SolverConfig: dt violates the explicit diffusion stability bound; "
        "reduce dt or switch to the exp-euler scheme");
}

struct StopCheck {
  bool fired = false;
  std::string criterion;  // "u", "Q", or "density"
  double value = 0.0;
};

// Checks the stopping criteria in a fixed order: velocity W^{2,inf} norm,
// alignment W^{3,inf} norm, then the reciprocal density bound.
inline StopCheck detect_stop(const SymmetricState& st, double level) {
  const double un = st.u.sup_norm_wk_inf(2);
  if (un >= level) return StopCheck{true, "u", un};
  const double qn = st.Q.sup_norm_wk_inf(3);
  if (qn >= level) return StopCheck{true, "Q", qn};
  const double mr = min_r(st.r);
  if (mr <= 1.0 / level) return StopCheck{true, "density", mr};
  return StopCheck{};
}

namespace detail {

// exp of the viscous operator over one step, modewise: the compressive part
// (parallel to k) decays at rate (2*upsilon+lambda)|k|^2, the solenoidal
// remainder at upsilon|k|^2.  Both multipliers are even in k, so conjugate
// symmetry of real fields is preserved.
inline SpectralField lame_exponential(const SpectralField& u, double coef_perp, double coef_par) {
  const TorusGrid& g = u.grid();
  const int d = g.dim;
  SpectralField out = u;
  for (std::size_t i = 0; i < u.points(); ++i) {
    int idx[3];
    g.unflatten(i, idx);
    double k[3] = {0.0, 0.0, 0.0};
    double k2 = 0.0;
    for (int ax = 0; ax < d; ++ax) {
      k[ax] = static_cast<double>(g.wavenumber(idx[ax]));
      k2 += k[ax] * k[ax];
    }
    if (k2 == 0.0) continue;
    const double ep = std::exp(-coef_perp * k2);
    const double el = std::exp(-coef_par * k2);
    std::complex<double> dot(0.0, 0.0);
    for (int ax = 0; ax < d; ++ax) dot += k[ax] * out.at(ax, i);
    dot /= k2;
    for (int ax = 0; ax < d; ++ax) {
      const std::complex<double> par = dot * k[ax];
      const std::complex<double> perp = out.at(ax, i) - par;
      out.at(ax, i) = ep * perp + el * par;
    }
  }
  return out;
}

inline SpectralField heat_exponential(const SpectralField& f, double coef) {
  const TorusGrid& g = f.grid();
  SpectralField out = f;
  for (std::size_t i = 0; i < f.points(); ++i) {
    int idx[3];
    g.unflatten(i, idx);
    double k2 = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) {
      const double k = static_cast<double>(g.wavenumber(idx[ax]));
      k2 += k * k;
    }
    const double e = std::exp(-coef * k2);
    for (int c = 0; c < f.components(); ++c) out.at(c, i) *= e;
  }
  return out;
}

inline double mean_value(const RealField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.points(); ++i) s += f.at(0, i);
  return s / static_cast<double>(f.points());
}

inline double sup_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double worst = 0.0;
  for (int c = 0; c < a.components(); ++c)
    for (std::size_t i = 0; i < a.points(); ++i)
      worst = std::max(worst, std::abs(a.at(c, i) - b.at(c, i)));
  return worst;
}

}  // namespace detail

struct StepResult {
  SymmetricState state;
  double phi = 0.0;
  int fp_iters = 0;
  bool fp_converged = true;
  bool rejected = false;
  SpectralField noise_term;  // gated noise increment actually added to u
};

// One time step.  The gate value, the density, the alignment field, and the
// noise increment are all frozen at the left endpoint; only the velocity
// drift is re-evaluated by the inner fixed-point iteration, with the
// coefficient clamp applied to every candidate.  A closed gate freezes r and
// u bitwise and leaves only the alignment diffusion active.
inline StepResult step(const SymmetricState& st, const std::vector<double>& dw,
                       const SolverConfig& cfg) {
  const TorusGrid& g = st.grid();
  const MaterialConstants& mc = st.consts;
  const double dt = cfg.dt;
  const double phi = phi_R(st, cfg.cutoff);

  StepResult res{SymmetricState(g, mc), phi, 0, true, false, SpectralField(g, g.dim)};
  SymmetricState& next = res.state;
  next.t = st.t + dt;

  const SpectralField dQ = rhs_q_tensor(st, phi);
  if (cfg.scheme == TimeScheme::euler) {
    SpectralField incr = dQ;
    incr *= dt;
    next.Q = st.Q;
    next.Q += incr;
  } else {
    SpectralField heat = st.Q.laplacian();
    heat *= mc.Gamma * mc.L;
    SpectralField inner = dQ;
    inner -= heat;
    inner *= dt;
    inner += st.Q;
    next.Q = detail::heat_exponential(inner, mc.Gamma * mc.L * dt);
  }

  if (phi == 0.0) {
    next.r = st.r;
    next.u = st.u;
    return res;
  }

  SpectralField dr = rhs_mass(st, phi);
  dr *= dt;
  next.r = st.r;
  next.r += dr;
  if (min_r(next.r) <= cfg.density_floor) {
    res.rejected = true;
    next = st;
    return res;
  }

  if (cfg.noise.kind != NoiseKind::off) {
    res.noise_term = apply_noise(cfg.noise, st.u, dw);
    res.noise_term *= phi;
  }

  // v_{j+1} = P_n[u + dt * drift(r, clamp(v_j), Q) + noise], v_0 = u.
  const double d_bar =
      cfg.scheme == TimeScheme::exp_euler ? detail::mean_value(coeff_D(st.r, mc)) : 0.0;
  const double visc_coef = phi * d_bar * dt;
  SymmetricState probe(g, mc);
  probe.r = st.r;
  probe.Q = st.Q;
  probe.t = st.t;
  SpectralField v = st.u;
  double last_diff = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.fixed_point.max_iters; ++it) {
    probe.u = clamp_coefficients(v, cfg.clamp);
    SpectralField drift = rhs_momentum_drift(probe, phi, cfg.dynamics);
    if (cfg.scheme == TimeScheme::exp_euler) {
      SpectralField stiff = lame(probe.u, mc.upsilon, mc.lambda);
      stiff *= phi * d_bar;
      drift -= stiff;
    }
    drift *= dt;
    SpectralField cand = st.u;
    cand += drift;
    cand += res.noise_term;
    if (cfg.scheme == TimeScheme::exp_euler)
      cand = detail::lame_exponential(cand, mc.upsilon * visc_coef,
                                      (2.0 * mc.upsilon + mc.lambda) * visc_coef);
    if (cfg.galerkin.active()) cand = cand.galerkin_project(cfg.galerkin);
    res.fp_iters = it + 1;
    last_diff = detail::sup_coeff_diff(cand, v);
    v = cand;
    if (cfg.fixed_point.tol > 0.0 && last_diff < cfg.fixed_point.tol) break;
  }
  res.fp_converged = cfg.fixed_point.tol <= 0.0 || last_diff < cfg.fixed_point.tol;
  next.u = v;
  return res;
}

struct StopEvent {
  double t = 0.0;
  double level = 0.0;
  std::string criterion;
  double value = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SymmetricState> states;
  std::vector<LedgerRow> ledger;
  std::vector<StopEvent> crossings;
  bool stopped = false;
  bool step_rejected = false;
  double stop_time = 0.0;
  std::string stop_criterion;
  double stop_level = 0.0;
};

// Integrate to the horizon, recording one ledger row per accepted transition
// (evaluated at its left endpoint) plus a terminal row, so consecutive rows
// give exact per-step increments.  Each stopping level's first crossing is
// recorded; the run halts when the top level fires, or when a step would
// push the density through the floor.
inline Trajectory run(const SymmetricState& initial, const SolverConfig& cfg,
                      const WienerPath& path) {
  cfg.validate();
  check_stability(cfg, initial.grid(), initial.consts);
  const std::vector<double> levels = cfg.levels();
  const std::size_t nsteps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  if (cfg.noise.kind != NoiseKind::off) {
    if (std::abs(path.dt() - cfg.dt) > 1e-12 * cfg.dt)
      throw std::invalid_argument("run: noise path step does not match dt");
    if (path.steps() < nsteps) throw std::invalid_argument("run: noise path shorter than horizon");
    if (path.k_modes < cfg.noise.modes)
      throw std::invalid_argument("run: noise path carries fewer modes than the model");
  }

  Trajectory traj;
  SymmetricState st = initial;
  std::size_t level_idx = 0;

  traj.times.push_back(st.t);
  traj.states.push_back(st);

  for (std::size_t i = 0; i < nsteps; ++i) {
    // screen the pre-step state, so a supercritical initial state stops at t0
    while (level_idx < levels.size()) {
      const StopCheck sc = detect_stop(st, levels[level_idx]);
      if (!sc.fired) break;
      traj.crossings.push_back(StopEvent{st.t, levels[level_idx], sc.criterion, sc.value});
      ++level_idx;
    }
    if (level_idx >= levels.size()) {
      traj.stopped = true;
      traj.stop_time = st.t;
      traj.stop_criterion = traj.crossings.back().criterion;
      traj.stop_level = traj.crossings.back().level;
      break;
    }

    std::vector<double> dw;
    if (cfg.noise.kind != NoiseKind::off) dw = sample_increments(path, i);
    const StepResult sr = step(st, dw, cfg);
    if (sr.rejected) {
      traj.stopped = true;
      traj.step_rejected = true;
      traj.stop_time = st.t;
      traj.stop_criterion = "density-floor";
      traj.stop_level = cfg.density_floor;
      break;
    }

    LedgerRow row = make_ledger_row(st, sr.phi, cfg.ledger_s);
    if (cfg.noise.kind != NoiseKind::off)
      row.noise_pairing = noise_energy_pairing(st.u, sr.noise_term, cfg.ledger_s);
    traj.ledger.push_back(row);

    st = sr.state;
    if (cfg.save_every > 0 && (i + 1) % static_cast<std::size_t>(cfg.save_every) == 0) {
      traj.times.push_back(st.t);
      traj.states.push_back(st);
    }
  }

  traj.ledger.push_back(make_ledger_row(st, phi_R(st, cfg.cutoff), cfg.ledger_s));
  if (traj.times.back() != st.t) {
    traj.times.push_back(st.t);
    traj.states.push_back(st);
  }
  return traj;
}

}  // namespace qspde
