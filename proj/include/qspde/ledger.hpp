#pragma once

// Per-step energy ledger: the controlled quantities of the a-priori
// estimate, the dissipation functionals, the noise pairing entering the
// martingale term, and structure residuals.  CSV serialization is exact
// (%.17g round trips doubles bit for bit).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspde/dynamics.hpp"
#include "qspde/state.hpp"

namespace qspde {

struct LedgerRow {
  double t = 0.0;
  double r_sq = 0.0;        // ||r||_{s,2}^2
  double u_sq = 0.0;        // ||u||_{s,2}^2
  double q_sq = 0.0;        // sum_{|a|<=s} ||sqrt(D) grad d^a Q||^2
  double diss_u = 0.0;      // Phi int D (ups |grad d^a u|^2 + (ups+lam)|div d^a u|^2)
  double diss_q = 0.0;      // Gamma L sum ||sqrt(D) Lap d^a Q||^2
  double phi = 0.0;
  double noise_pairing = 0.0;  // exact energy increment contributed by the noise term
  double min_r = 0.0;
  double max_r = 0.0;
  double u_w2inf = 0.0;
  double q_w3inf = 0.0;
  double q_trace = 0.0;   // sup |tr Q|
  double q_asym = 0.0;    // sup |Q - Q^T|
  double conj = 0.0;      // worst conjugate-symmetry defect across fields

  double energy() const { return r_sq + u_sq + q_sq; }
  double dissipation() const { return diss_u + diss_q; }
};

inline const char* ledger_header() {
  return "t,r_sq,u_sq,q_sq,diss_u,diss_q,phi,noise_pairing,min_r,max_r,u_w2inf,q_w3inf,"
         "q_trace,q_asym,conj";
}

inline std::string format_ledger_row(const LedgerRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g",
                r.t, r.r_sq, r.u_sq, r.q_sq, r.diss_u, r.diss_q, r.phi, r.noise_pairing, r.min_r,
                r.max_r, r.u_w2inf, r.q_w3inf, r.q_trace, r.q_asym, r.conj);
  return buf;
}

inline void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_ledger_csv: cannot open " + path);
  out << ledger_header() << "\n";
  for (const LedgerRow& r : rows) out << format_ledger_row(r) << "\n";
  if (!out) throw std::runtime_error("write_ledger_csv: write failed for " + path);
}

inline std::vector<LedgerRow> read_ledger_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_ledger_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_ledger_csv: empty file " + path);
  if (line != ledger_header()) throw std::runtime_error("read_ledger_csv: unexpected header in " + path);
  std::vector<LedgerRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LedgerRow r;
    double* fields[15] = {&r.t,    &r.r_sq,  &r.u_sq,   &r.q_sq,          &r.diss_u,
                          &r.diss_q, &r.phi, &r.noise_pairing, &r.min_r,  &r.max_r,
                          &r.u_w2inf, &r.q_w3inf, &r.q_trace, &r.q_asym,  &r.conj};
    std::istringstream ss(line);
    std::string cell;
    for (int i = 0; i < 15; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("read_ledger_csv: short row in " + path);
      // strtod instead of stod: subnormal values must parse, not raise
      char* end = nullptr;
      *fields[i] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw std::runtime_error("read_ledger_csv: bad number in " + path);
    }
    rows.push_back(r);
  }
  return rows;
}

// Phi * sum_{|a|<=s} int D(r) (ups |grad d^a u|^2 + (ups+lam) |div d^a u|^2)
inline double dissipation_u(const SymmetricState& st, double phi, int s) {
  if (phi == 0.0) return 0.0;
  const TorusGrid& g = st.grid();
  const RealField d_col = coeff_D(st.r, st.consts);
  const double w = detail::norm_constant(g) / static_cast<double>(g.points());
  double total = 0.0;
  for (const std::array<int, 3>& alpha : multi_indices(g.dim, s)) {
    const SpectralField ua = st.u.partial(alpha);
    double grad_part = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) {
      const RealField der = ua.derivative(ax).to_collocation();
      for (std::size_t i = 0; i < g.points(); ++i) {
        double sq = 0.0;
        for (int c = 0; c < g.dim; ++c) sq += der.at(c, i) * der.at(c, i);
        grad_part += d_col.at(0, i) * sq;
      }
    }
    double div_part = 0.0;
    const RealField dv = divergence(ua).to_collocation();
    for (std::size_t i = 0; i < g.points(); ++i)
      div_part += d_col.at(0, i) * dv.at(0, i) * dv.at(0, i);
    total += st.consts.upsilon * grad_part + (st.consts.upsilon + st.consts.lambda) * div_part;
  }
  return phi * total * w;
}

// Gamma L sum_{|a|<=s} int D(r) |Lap d^a Q|^2
inline double dissipation_q(const SymmetricState& st, int s) {
  const TorusGrid& g = st.grid();
  const RealField d_col = coeff_D(st.r, st.consts);
  const double w = detail::norm_constant(g) / static_cast<double>(g.points());
  double total = 0.0;
  for (const std::array<int, 3>& alpha : multi_indices(g.dim, s)) {
    const RealField lap = st.Q.partial(alpha).laplacian().to_collocation();
    for (std::size_t i = 0; i < g.points(); ++i) {
      double sq = 0.0;
      for (int c = 0; c < 9; ++c) sq += lap.at(c, i) * lap.at(c, i);
      total += d_col.at(0, i) * sq;
    }
  }
  return st.consts.Gamma * st.consts.L * total * w;
}

// Exact Sobolev-energy increment contributed by adding `noise_term` to u:
// sum_{|a|<=s} ( 2 (d^a u, d^a v) + ||d^a v||^2 ).
inline double noise_energy_pairing(const SpectralField& u, const SpectralField& noise_term, int s) {
  double total = 0.0;
  for (const std::array<int, 3>& alpha : multi_indices(u.grid().dim, s)) {
    const SpectralField ua = u.partial(alpha);
    const SpectralField va = noise_term.partial(alpha);
    total += 2.0 * l2_inner(ua, va) + va.l2_norm_sq();
  }
  return total;
}

// Snapshot of all monitored quantities for one state.
inline LedgerRow make_ledger_row(const SymmetricState& st, double phi, int s) {
  LedgerRow row;
  row.t = st.t;
  const EnergyParts e = energy_functional(st, s);
  row.r_sq = e.r_sq;
  row.u_sq = e.u_sq;
  row.q_sq = e.q_sq;
  row.diss_u = dissipation_u(st, phi, s);
  row.diss_q = dissipation_q(st, s);
  row.phi = phi;
  const RealField r_col = st.r.to_collocation();
  row.min_r = r_col.at(0, 0);
  row.max_r = r_col.at(0, 0);
  for (std::size_t i = 1; i < r_col.points(); ++i) {
    row.min_r = std::min(row.min_r, r_col.at(0, i));
    row.max_r = std::max(row.max_r, r_col.at(0, i));
  }
  row.u_w2inf = st.u.sup_norm_wk_inf(2);
  row.q_w3inf = st.Q.sup_norm_wk_inf(3);
  row.q_trace = q_trace_defect(st.Q);
  row.q_asym = q_asym_defect(st.Q);
  row.conj = std::max(st.r.conj_defect(), std::max(st.u.conj_defect(), st.Q.conj_defect()));
  return row;
}

}  // namespace qspde
