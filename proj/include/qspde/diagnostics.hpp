#pragma once

// Numerical audits of the estimate toolbox: the advection commutator and
// product bounds, the composition bounds on the viscosity weight, the
// two-sided exponential density envelope, the discrete energy inequality,
// and ensemble moment statistics.  Constants are calibrated empirically as
// maxima over declared random ensembles; the contract is stability of the
// calibrated value, not a particular number.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspde/ledger.hpp"
#include "qspde/state.hpp"

namespace qspde {

struct AuditSample {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool degenerate = false;    // vanishing right-hand side, ratio not defined
  bool inconsistent = false;  // vanishing right-hand side with lhs above tolerance
};

namespace detail {

inline AuditSample make_sample(double lhs, double rhs) {
  AuditSample s;
  s.lhs = lhs;
  s.rhs = rhs;
  if (rhs == 0.0) {
    s.degenerate = true;
    s.inconsistent = lhs > 1e-12;
  } else {
    s.ratio = lhs / rhs;
  }
  return s;
}

// (u . grad) v pointwise, dealiased.
inline SpectralField convection(const SpectralField& u, const SpectralField& v) {
  const TorusGrid& g = u.grid();
  if (g != v.grid()) throw std::invalid_argument("convection: grid mismatch");
  const RealField ur = u.to_collocation();
  RealField acc(g, v.components());
  for (int ax = 0; ax < g.dim; ++ax) {
    const RealField dv = v.derivative(ax).to_collocation();
    for (int c = 0; c < v.components(); ++c)
      for (std::size_t i = 0; i < g.points(); ++i) acc.at(c, i) += ur.at(ax, i) * dv.at(c, i);
  }
  return SpectralField::from_collocation(acc).dealias();
}

// sup over the grid of the Frobenius gradient magnitude.
inline double grad_sup(const SpectralField& f) {
  const TorusGrid& g = f.grid();
  std::vector<double> acc(g.points(), 0.0);
  for (int ax = 0; ax < g.dim; ++ax) {
    const RealField d = f.derivative(ax).to_collocation();
    for (int c = 0; c < f.components(); ++c)
      for (std::size_t i = 0; i < g.points(); ++i) acc[i] += d.at(c, i) * d.at(c, i);
  }
  double worst = 0.0;
  for (double v : acc) worst = std::max(worst, v);
  return std::sqrt(worst);
}

}  // namespace detail

// || d^a (u.grad v) - u.grad d^a v || summed over |a| <= s, against the
// bracket ||grad u||_inf ||v||_{s,2} + ||grad v||_inf ||u||_{s,2}.
inline AuditSample audit_commutator(const SpectralField& u, const SpectralField& v, int s) {
  const TorusGrid& g = u.grid();
  if (u.components() != g.dim) throw std::invalid_argument("audit_commutator: u must be a velocity");
  if (!(s > g.dim / 2.0 + 1.0))
    throw std::invalid_argument("audit_commutator: requires s > d/2 + 1");
  const SpectralField conv = detail::convection(u, v);
  double lhs = 0.0;
  for (const auto& alpha : multi_indices(g.dim, s)) {
    SpectralField a = conv.partial(alpha);
    a -= detail::convection(u, v.partial(alpha));
    lhs += std::sqrt(a.l2_norm_sq());
  }
  const double rhs = detail::grad_sup(u) * v.sobolev_norm(s) + detail::grad_sup(v) * u.sobolev_norm(s);
  return detail::make_sample(lhs, rhs);
}

// ||uv||_{s,2} against ||u||_inf ||v||_{s,2} + ||v||_inf ||u||_{s,2}.
inline AuditSample audit_moser(const SpectralField& u, const SpectralField& v, int s) {
  if (s < 0) throw std::invalid_argument("audit_moser: s must be >= 0");
  const double lhs = dealias_multiply(u, v).sobolev_norm(s);
  const double rhs = u.sup_norm_wk_inf(0) * v.sobolev_norm(s) + v.sup_norm_wk_inf(0) * u.sobolev_norm(s);
  return detail::make_sample(lhs, rhs);
}

struct CompositionAudit {
  AuditSample norm_bound;  // ||D(r1)||_{s,2} <= C ||r1||_{s,2}
  AuditSample diff_bound;  // ||D(r1)-D(r2)||_{s,2} <= C max_j||r_j||_{s,2} ||r1-r2||_{s,2}
};

// Both fields must take values in [1/range, range] pointwise.
inline CompositionAudit audit_composition_D(const SpectralField& r1, const SpectralField& r2,
                                            int s, const MaterialConstants& mc, double range) {
  if (!(range >= 1.0)) throw std::invalid_argument("audit_composition_D: range must be >= 1");
  for (const SpectralField* r : {&r1, &r2}) {
    const RealField col = r->to_collocation();
    for (std::size_t i = 0; i < col.points(); ++i) {
      const double v = col.at(0, i);
      if (v < 1.0 / range || v > range)
        throw std::invalid_argument("audit_composition_D: field outside [1/R, R]");
    }
  }
  const SpectralField d1 = SpectralField::from_collocation(coeff_D(r1, mc));
  const SpectralField d2 = SpectralField::from_collocation(coeff_D(r2, mc));
  CompositionAudit out;
  out.norm_bound = detail::make_sample(d1.sobolev_norm(s), r1.sobolev_norm(s));
  SpectralField dd = d1;
  dd -= d2;
  SpectralField dr = r1;
  dr -= r2;
  const double pair_norm = std::max(r1.sobolev_norm(s), r2.sobolev_norm(s));
  out.diff_bound = detail::make_sample(dd.sobolev_norm(s), pair_norm * dr.sobolev_norm(s));
  return out;
}

struct LowerBoundFit {
  double c_hat = 0.0;  // smallest envelope rate covering the realized extremes
  double c_env = 0.0;  // rate implied by the realized gated velocity bound
  int violations = 0;  // rows outside the fitted envelope (none expected)
};

// Fits the smallest c with exp(-c t) inf r0 <= r(t) and sup r(t) <= exp(c t) sup r0
// along the ledger, then re-checks the envelope with the fitted rate.
inline LowerBoundFit audit_lower_bound(const std::vector<LedgerRow>& rows, double gamma, int dim) {
  if (rows.size() < 2) throw std::invalid_argument("audit_lower_bound: need at least 2 rows");
  int gated = 0;
  for (const LedgerRow& row : rows)
    if (row.phi > 0.0) ++gated;
  if (gated < 10) throw std::invalid_argument("audit_lower_bound: need >= 10 steps with open gate");
  const double t0 = rows.front().t;
  const double min0 = rows.front().min_r;
  const double max0 = rows.front().max_r;
  if (!(min0 > 0.0)) throw std::invalid_argument("audit_lower_bound: nonpositive initial density");

  LowerBoundFit fit;
  for (const LedgerRow& row : rows) {
    const double t = row.t - t0;
    if (t <= 0.0) continue;
    if (!(row.min_r > 0.0)) throw std::invalid_argument("audit_lower_bound: nonpositive density");
    fit.c_hat = std::max(fit.c_hat, std::log(row.max_r / max0) / t);
    fit.c_hat = std::max(fit.c_hat, std::log(min0 / row.min_r) / t);
    // divergence bound realized under the gate: |div u| <= sqrt(d) |grad u|_F
    fit.c_env = std::max(fit.c_env, 0.5 * (gamma - 1.0) * std::sqrt(static_cast<double>(dim)) *
                                        row.phi * row.u_w2inf);
  }
  fit.c_hat = std::max(fit.c_hat, 0.0);
  for (const LedgerRow& row : rows) {
    const double t = row.t - t0;
    if (t < 0.0) continue;
    const double lower = std::exp(-fit.c_hat * t) * min0;
    const double upper = std::exp(fit.c_hat * t) * max0;
    if (row.min_r < lower * (1.0 - 1e-9) || row.max_r > upper * (1.0 + 1e-9)) ++fit.violations;
  }
  return fit;
}

struct LedgerCheck {
  double c_hat = 0.0;            // fitted growth constant
  std::vector<double> residual;  // dE + dt*diss - noise pairing, per transition
  std::vector<double> slack;     // c_hat * E * dt - residual, per transition
  bool ok = true;                // every slack nonnegative up to rounding
};

// Discrete form of the a-priori energy inequality: for each transition,
// dE + dt*dissipation - realized noise increment <= c_hat * E * dt with a
// single fitted constant over the whole run.
inline LedgerCheck energy_ledger_check(const std::vector<LedgerRow>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("energy_ledger_check: need at least 2 rows");
  LedgerCheck check;
  const std::size_t m = rows.size() - 1;
  check.residual.resize(m);
  std::vector<double> denom(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double dt = rows[i + 1].t - rows[i].t;
    if (!(dt > 0.0)) throw std::invalid_argument("energy_ledger_check: nonincreasing time");
    const double de = rows[i + 1].energy() - rows[i].energy();
    check.residual[i] = de + dt * rows[i].dissipation() - rows[i].noise_pairing;
    denom[i] = rows[i].energy() * dt;
    if (denom[i] > 0.0) check.c_hat = std::max(check.c_hat, check.residual[i] / denom[i]);
  }
  check.slack.resize(m);
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(check.residual[i]));
  for (std::size_t i = 0; i < m; ++i) {
    check.slack[i] = check.c_hat * denom[i] - check.residual[i];
    if (check.slack[i] < -1e-9 * std::max(scale, 1e-300)) check.ok = false;
  }
  return check;
}

struct MomentEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int paths = 0;
};

// Monte-Carlo estimate of E[(sup_t energy + integrated dissipation)^p] over
// an ensemble of ledgers sharing the time grid.
inline MomentEstimate ensemble_moments(const std::vector<std::vector<LedgerRow>>& ledgers,
                                       double p) {
  if (ledgers.empty()) throw std::invalid_argument("ensemble_moments: empty ensemble");
  if (!(p > 0.0)) throw std::invalid_argument("ensemble_moments: p must be > 0");
  const std::size_t nrows = ledgers.front().size();
  if (nrows < 1) throw std::invalid_argument("ensemble_moments: empty ledger");
  for (const auto& rows : ledgers) {
    if (rows.size() != nrows) throw std::invalid_argument("ensemble_moments: ragged ensemble");
    for (std::size_t i = 0; i < nrows; ++i)
      if (rows[i].t != ledgers.front()[i].t)
        throw std::invalid_argument("ensemble_moments: mismatched time grids");
  }

  std::vector<double> x(ledgers.size());
  for (std::size_t j = 0; j < ledgers.size(); ++j) {
    const auto& rows = ledgers[j];
    double sup_e = 0.0;
    double diss = 0.0, comp = 0.0;  // Kahan accumulation of the time integral
    for (std::size_t i = 0; i < nrows; ++i) {
      sup_e = std::max(sup_e, rows[i].energy());
      if (i + 1 < nrows) {
        const double term = (rows[i + 1].t - rows[i].t) * rows[i].dissipation() - comp;
        const double next = diss + term;
        comp = (next - diss) - term;
        diss = next;
      }
    }
    x[j] = std::pow(sup_e + diss, p);
  }
  MomentEstimate est;
  est.paths = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  est.value = mean;
  if (x.size() > 1) {
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size() - 1);
    est.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
  }
  return est;
}

struct EstimateReport {
  std::string id;
  int samples = 0;
  int degenerate = 0;
  double max_ratio = 0.0;  // the calibrated constant
  double mean_ratio = 0.0;
  bool consistent = true;  // no degenerate sample had a nonvanishing left side
};

// Runs sample_fn(j) for j in [0, samples) and aggregates the ratios.
template <typename Fn>
inline EstimateReport calibrate(const std::string& id, int samples, Fn&& sample_fn) {
  EstimateReport rep;
  rep.id = id;
  rep.samples = samples;
  double sum = 0.0;
  int counted = 0;
  for (int j = 0; j < samples; ++j) {
    const AuditSample s = sample_fn(j);
    if (s.degenerate) {
      ++rep.degenerate;
      if (s.inconsistent) rep.consistent = false;
      continue;
    }
    if (!std::isfinite(s.ratio) || s.ratio < 0.0) {
      rep.consistent = false;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, s.ratio);
    sum += s.ratio;
    ++counted;
  }
  if (counted > 0) rep.mean_ratio = sum / static_cast<double>(counted);
  return rep;
}

}  // namespace qspde
