#pragma once

// Symmetrized state variables: the density change of variables r(rho), its
// inverse, the viscosity weight D(r) = 1/rho(r), and the traceless-symmetric
// tensor basis used to build Q fields that lie in S0(3) exactly.

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qspde/field.hpp"
#include "qspde/mat3.hpp"
#include "qspde/truncation.hpp"

namespace qspde {

namespace detail {

inline void throw_nonpositive(const char* op, const TorusGrid& g, std::size_t flat, double v) {
  int idx[3];
  g.unflatten(flat, idx);
  std::ostringstream msg;
  msg << op << ": nonpositive value " << v << " at grid point (" << idx[0] << ", " << idx[1];
  if (g.dim == 3) msg << ", " << idx[2];
  msg << ")";
  throw std::domain_error(msg.str());
}

// Pointwise power map c * f^p with positivity check.
inline SpectralField pointwise_power(const char* op, const SpectralField& f, double c, double p) {
  RealField fr = f.to_collocation();
  for (std::size_t i = 0; i < fr.points(); ++i) {
    const double v = fr.at(0, i);
    if (!(v > 0.0)) throw_nonpositive(op, f.grid(), i, v);
    fr.at(0, i) = c * std::pow(v, p);
  }
  return SpectralField::from_collocation(fr);
}

}  // namespace detail

// r = sqrt(2 A gamma / (gamma-1)) * rho^((gamma-1)/2)
inline SpectralField symmetrize_density(const SpectralField& rho, const MaterialConstants& mc) {
  const double c = std::sqrt(2.0 * mc.A * mc.gamma / (mc.gamma - 1.0));
  return detail::pointwise_power("symmetrize_density", rho, c, 0.5 * (mc.gamma - 1.0));
}

// rho = ((gamma-1)/(2 A gamma))^(1/(gamma-1)) * r^(2/(gamma-1))
inline SpectralField desymmetrize(const SpectralField& r, const MaterialConstants& mc) {
  const double base = (mc.gamma - 1.0) / (2.0 * mc.A * mc.gamma);
  const double c = std::pow(base, 1.0 / (mc.gamma - 1.0));
  return detail::pointwise_power("desymmetrize", r, c, 2.0 / (mc.gamma - 1.0));
}

// D(r) = 1/rho(r), evaluated at collocation points where it is used as a
// pointwise weight.
inline RealField coeff_D(const SpectralField& r, const MaterialConstants& mc) {
  const double base = (mc.gamma - 1.0) / (2.0 * mc.A * mc.gamma);
  const double c = std::pow(base, -1.0 / (mc.gamma - 1.0));
  RealField out = r.to_collocation();
  for (std::size_t i = 0; i < out.points(); ++i) {
    const double v = out.at(0, i);
    if (!(v > 0.0)) detail::throw_nonpositive("coeff_D", r.grid(), i, v);
    out.at(0, i) = c * std::pow(v, -2.0 / (mc.gamma - 1.0));
  }
  return out;
}

inline double min_r(const SpectralField& r) {
  const RealField rr = r.to_collocation();
  double m = rr.at(0, 0);
  for (std::size_t i = 1; i < rr.points(); ++i) m = std::min(m, rr.at(0, i));
  return m;
}

struct SymmetricState {
  SpectralField r;
  SpectralField u;
  SpectralField Q;
  MaterialConstants consts;
  double t = 0.0;

  SymmetricState(const TorusGrid& g, const MaterialConstants& mc)
      : r(g, 1), u(g, g.dim), Q(g, 9), consts(mc) {}

  const TorusGrid& grid() const { return r.grid(); }

  // Constant density rho0, zero velocity, zero alignment.
  static SymmetricState uniform(const TorusGrid& g, const MaterialConstants& mc, double rho0) {
    SymmetricState st(g, mc);
    if (!(rho0 > 0.0)) throw std::invalid_argument("SymmetricState: rho0 must be > 0");
    const double rval =
        std::sqrt(2.0 * mc.A * mc.gamma / (mc.gamma - 1.0)) * std::pow(rho0, 0.5 * (mc.gamma - 1.0));
    int k0[3] = {0, 0, 0};
    st.r.set_mode(0, k0, rval);
    return st;
  }
};

inline double phi_R(const SymmetricState& st, const CutoffProfile& profile) {
  return phi_R(st.u.sup_norm_wk_inf(2), st.Q.sup_norm_wk_inf(3), profile);
}

// Orthonormal basis of S0(3) under the Frobenius pairing.  Entries are built
// so the three diagonal values of each element sum to zero exactly.
inline const std::array<Mat3, 5>& s03_basis() {
  static const std::array<Mat3, 5> basis = [] {
    const double s2 = 1.0 / std::sqrt(2.0);
    const double s6 = 1.0 / std::sqrt(6.0);
    std::array<Mat3, 5> b{};
    b[0] = Mat3::diag(s2, -s2, 0.0);
    b[1] = Mat3::diag(s6, s6, -2.0 * s6);
    b[2] = Mat3::zero();
    b[2](0, 1) = b[2](1, 0) = s2;
    b[3] = Mat3::zero();
    b[3](0, 2) = b[3](2, 0) = s2;
    b[4] = Mat3::zero();
    b[4](1, 2) = b[4](2, 1) = s2;
    return b;
  }();
  return basis;
}

// Nine-component Q field from five scalar coordinate fields; the result is
// symmetric bitwise and trace-free to one rounding of the coordinate sums.
inline SpectralField expand_s03(const SpectralField& five) {
  if (five.components() != 5) throw std::invalid_argument("expand_s03: expected 5 components");
  const auto& basis = s03_basis();
  SpectralField q(five.grid(), 9);
  for (int c = 0; c < 9; ++c)
    for (std::size_t i = 0; i < five.points(); ++i) {
      std::complex<double> acc(0.0, 0.0);
      for (int m = 0; m < 5; ++m)
        if (basis[m].a[c] != 0.0) acc += basis[m].a[c] * five.at(m, i);
      q.at(c, i) = acc;
    }
  return q;
}

// Largest pointwise |tr Q| over collocation points.
inline double q_trace_defect(const SpectralField& q) {
  if (q.components() != 9) throw std::invalid_argument("q_trace_defect: expected 9 components");
  const RealField qr = q.to_collocation();
  double worst = 0.0;
  for (std::size_t i = 0; i < qr.points(); ++i)
    worst = std::max(worst, std::abs(qr.at(0, i) + qr.at(4, i) + qr.at(8, i)));
  return worst;
}

// Largest pointwise Frobenius norm of Q - Q^T.
inline double q_asym_defect(const SpectralField& q) {
  if (q.components() != 9) throw std::invalid_argument("q_asym_defect: expected 9 components");
  const RealField qr = q.to_collocation();
  double worst = 0.0;
  for (std::size_t i = 0; i < qr.points(); ++i) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double d = qr.at(3 * a + b, i) - qr.at(3 * b + a, i);
        s += d * d;
      }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

// Largest pointwise Frobenius norm of Q, for scaling relative defects.
inline double q_sup_frobenius(const SpectralField& q) {
  const RealField qr = q.to_collocation();
  double worst = 0.0;
  for (std::size_t i = 0; i < qr.points(); ++i) {
    double s = 0.0;
    for (int c = 0; c < 9; ++c) s += qr.at(c, i) * qr.at(c, i);
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace qspde
