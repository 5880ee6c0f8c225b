#pragma once

// Right-hand sides of the truncated symmetric system: density transport,
// momentum drift with elastic and rotational stresses, and the Q-tensor
// flow.  All nonlinear terms are evaluated pseudospectrally and dealiased;
// the Q diffusion is linear and applied spectrally without truncation by
// the cut-off gate.

#include <array>
#include <vector>

#include "qspde/field.hpp"
#include "qspde/mat3.hpp"
#include "qspde/state.hpp"
#include "qspde/truncation.hpp"

namespace qspde {

// Assembly route for the elastic stress divergence.  Both are analytically
// identical; "energy" moves the Frank gradient energy out of the isotropic
// part the way the a-priori estimate groups it.
enum class StressGrouping { direct, energy };

struct DynamicsOptions {
  StressGrouping grouping = StressGrouping::direct;
};

namespace detail {

inline Mat3 mat_at(const RealField& f, std::size_t i) {
  Mat3 m;
  for (int c = 0; c < 9; ++c) m.a[static_cast<std::size_t>(c)] = f.at(c, i);
  return m;
}

inline void set_mat(RealField& f, std::size_t i, const Mat3& m) {
  for (int c = 0; c < 9; ++c) f.at(c, i) = m.a[static_cast<std::size_t>(c)];
}

// Velocity gradient matrices G_{ij} = d_i u_j at collocation points,
// embedded in the upper-left of a 3x3 matrix in two dimensions.
inline std::vector<Mat3> velocity_gradients(const SpectralField& u) {
  const TorusGrid& g = u.grid();
  std::vector<Mat3> out(g.points(), Mat3::zero());
  for (int ax = 0; ax < g.dim; ++ax) {
    const RealField row = u.derivative(ax).to_collocation();
    for (std::size_t i = 0; i < out.size(); ++i)
      for (int j = 0; j < g.dim; ++j) out[i](ax, j) = row.at(j, i);
  }
  return out;
}

}  // namespace detail

// Spectral gradient of a scalar field: d components i k_ax shat.
inline SpectralField gradient(const SpectralField& s) {
  if (s.components() != 1) throw std::invalid_argument("gradient: expected a scalar field");
  const TorusGrid& g = s.grid();
  SpectralField out(g, g.dim);
  for (int ax = 0; ax < g.dim; ++ax) {
    const SpectralField d = s.derivative(ax);
    for (std::size_t i = 0; i < s.points(); ++i) out.at(ax, i) = d.at(0, i);
  }
  return out;
}

// Spectral divergence of a d-component field.
inline SpectralField divergence(const SpectralField& v) {
  const TorusGrid& g = v.grid();
  if (v.components() != g.dim) throw std::invalid_argument("divergence: component/axis mismatch");
  SpectralField out(g, 1);
  for (int ax = 0; ax < g.dim; ++ax) {
    const SpectralField d = v.derivative(ax);
    for (std::size_t i = 0; i < v.points(); ++i) out.at(0, i) += d.at(ax, i);
  }
  return out;
}

// Row divergence of a 9-component (3x3 row-major) tensor field:
// out_i = sum_{j<d} d_j S_{ij}, first d rows only.
inline SpectralField tensor_divergence(const SpectralField& s9) {
  const TorusGrid& g = s9.grid();
  if (s9.components() != 9) throw std::invalid_argument("tensor_divergence: expected 9 components");
  SpectralField out(g, g.dim);
  for (int ax = 0; ax < g.dim; ++ax) {
    const SpectralField d = s9.derivative(ax);
    for (int row = 0; row < g.dim; ++row)
      for (std::size_t i = 0; i < s9.points(); ++i) out.at(row, i) += d.at(3 * row + ax, i);
  }
  return out;
}

// Lame operator upsilon*Laplace(u) + (upsilon+lambda)*grad(div u).
inline SpectralField lame(const SpectralField& u, double upsilon, double lambda) {
  const TorusGrid& g = u.grid();
  if (u.components() != g.dim) throw std::invalid_argument("lame: component/axis mismatch");
  SpectralField out = u.laplacian();
  out *= upsilon;
  const SpectralField gd = gradient(divergence(u));
  for (int ax = 0; ax < g.dim; ++ax)
    for (std::size_t i = 0; i < u.points(); ++i) out.at(ax, i) += (upsilon + lambda) * gd.at(ax, i);
  return out;
}

// -Phi * (u . grad r + (gamma-1)/2 * r * div u)
inline SpectralField rhs_mass(const SymmetricState& st, double phi) {
  const TorusGrid& g = st.grid();
  if (phi == 0.0) return SpectralField(g, 1);
  const RealField u_col = st.u.to_collocation();
  const RealField r_col = st.r.to_collocation();
  const RealField divu_col = divergence(st.u).to_collocation();
  const RealField gr_col = gradient(st.r).to_collocation();
  const double half_gm1 = 0.5 * (st.consts.gamma - 1.0);
  RealField out(g, 1);
  for (std::size_t i = 0; i < g.points(); ++i) {
    double adv = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) adv += u_col.at(ax, i) * gr_col.at(ax, i);
    out.at(0, i) = -phi * (adv + half_gm1 * r_col.at(0, i) * divu_col.at(0, i));
  }
  return SpectralField::from_collocation(out).dealias();
}

// -Phi*(u.grad u + r grad r)
//   + Phi*D(r)*[ Lame(u) - div(L gradQ odot gradQ - F(Q) I3) + L div(Q LapQ - LapQ Q) ]
inline SpectralField rhs_momentum_drift(const SymmetricState& st, double phi,
                                        const DynamicsOptions& opts = {}) {
  const TorusGrid& g = st.grid();
  const int d = g.dim;
  if (phi == 0.0) return SpectralField(g, d);
  const MaterialConstants& mc = st.consts;
  const RealField d_col = coeff_D(st.r, mc);

  // Advection and pressure at collocation.
  const RealField u_col = st.u.to_collocation();
  const RealField r_col = st.r.to_collocation();
  const RealField gr_col = gradient(st.r).to_collocation();
  std::vector<RealField> du_col;
  du_col.reserve(static_cast<std::size_t>(d));
  for (int ax = 0; ax < d; ++ax) du_col.push_back(st.u.derivative(ax).to_collocation());

  // Q derivatives at collocation.
  std::vector<RealField> dq_col;
  dq_col.reserve(static_cast<std::size_t>(d));
  for (int ax = 0; ax < d; ++ax) dq_col.push_back(st.Q.derivative(ax).to_collocation());
  const RealField q_col = st.Q.to_collocation();
  const RealField lapq_col = st.Q.laplacian().to_collocation();

  const std::size_t np = g.points();
  RealField stress(g, 9);      // elastic tensor whose divergence is subtracted
  RealField couple(g, 9);      // L*(Q LapQ - LapQ Q)
  RealField iso(g, 1);         // scalar whose gradient is added back
  for (std::size_t i = 0; i < np; ++i) {
    std::array<Mat3, 3> dq{Mat3::zero(), Mat3::zero(), Mat3::zero()};
    double grad_q_sq = 0.0;
    for (int ax = 0; ax < d; ++ax) {
      dq[static_cast<std::size_t>(ax)] = detail::mat_at(dq_col[static_cast<std::size_t>(ax)], i);
      grad_q_sq += dq[static_cast<std::size_t>(ax)].frobenius_sq();
    }
    const Mat3 q = detail::mat_at(q_col, i);
    const Mat3 lapq = detail::mat_at(lapq_col, i);

    Mat3 el = odot(dq);
    el *= mc.L;
    double iso_v;
    if (opts.grouping == StressGrouping::direct) {
      iso_v = bulk_free_energy(q, grad_q_sq, mc);  // full F(Q), gradient added back
    } else {
      // move the Frank part out of the isotropic term instead
      const double frank = 0.5 * mc.L * grad_q_sq;
      iso_v = bulk_free_energy(q, 0.0, mc);
      el(0, 0) -= frank;
      el(1, 1) -= frank;
      el(2, 2) -= frank;
    }
    detail::set_mat(stress, i, el);
    iso.at(0, i) = iso_v;

    Mat3 cp = commutator(q, lapq);
    cp *= mc.L;
    detail::set_mat(couple, i, cp);
  }

  const RealField divS_col = tensor_divergence(SpectralField::from_collocation(stress)).to_collocation();
  const RealField divC_col = tensor_divergence(SpectralField::from_collocation(couple)).to_collocation();
  const RealField gradIso_col = gradient(SpectralField::from_collocation(iso)).to_collocation();
  const RealField lame_col = lame(st.u, mc.upsilon, mc.lambda).to_collocation();

  RealField out(g, d);
  for (int c = 0; c < d; ++c)
    for (std::size_t i = 0; i < np; ++i) {
      double adv = r_col.at(0, i) * gr_col.at(c, i);
      for (int ax = 0; ax < d; ++ax) adv += u_col.at(ax, i) * du_col[static_cast<std::size_t>(ax)].at(c, i);
      const double force =
          lame_col.at(c, i) - divS_col.at(c, i) + gradIso_col.at(c, i) + divC_col.at(c, i);
      out.at(c, i) = phi * (d_col.at(0, i) * force - adv);
    }
  return SpectralField::from_collocation(out).dealias();
}

// -Phi*(u.grad Q - Theta Q + Q Theta) + Gamma L LapQ + Phi K(Q);
// the diffusion is untruncated.
inline SpectralField rhs_q_tensor(const SymmetricState& st, double phi) {
  const TorusGrid& g = st.grid();
  const MaterialConstants& mc = st.consts;
  SpectralField heat = st.Q.laplacian();
  heat *= mc.Gamma * mc.L;
  if (phi == 0.0) return heat;

  const std::size_t np = g.points();
  const RealField q_col = st.Q.to_collocation();
  const RealField u_col = st.u.to_collocation();
  std::vector<RealField> dq_col;
  dq_col.reserve(static_cast<std::size_t>(g.dim));
  for (int ax = 0; ax < g.dim; ++ax) dq_col.push_back(st.Q.derivative(ax).to_collocation());
  const std::vector<Mat3> grads = detail::velocity_gradients(st.u);

  RealField out(g, 9);
  for (std::size_t i = 0; i < np; ++i) {
    const Mat3 q = detail::mat_at(q_col, i);
    const Mat3& gm = grads[i];
    Mat3 theta = gm - gm.transpose();
    theta *= 0.5;

    Mat3 acc = commutator(theta, q);  // Theta Q - Q Theta, exactly symmetric
    acc += bulk_force_K(q, mc);
    acc *= phi;
    for (int ax = 0; ax < g.dim; ++ax) {
      const double uax = -phi * u_col.at(ax, i);
      const Mat3 dqa = detail::mat_at(dq_col[static_cast<std::size_t>(ax)], i);
      for (int c = 0; c < 9; ++c) acc.a[static_cast<std::size_t>(c)] += uax * dqa.a[static_cast<std::size_t>(c)];
    }
    detail::set_mat(out, i, acc);
  }
  SpectralField res = SpectralField::from_collocation(out).dealias();
  res += heat;
  return res;
}

struct RhsBundle {
  SpectralField dr_dt;
  SpectralField du_dt_drift;
  SpectralField dQ_dt;
  double phi = 0.0;
};

inline RhsBundle assemble_rhs(const SymmetricState& st, const CutoffProfile& profile,
                              const DynamicsOptions& opts = {}) {
  const double phi = phi_R(st, profile);
  return RhsBundle{rhs_mass(st, phi), rhs_momentum_drift(st, phi, opts), rhs_q_tensor(st, phi), phi};
}

// The two inner products whose sum cancels pointwise:
//   (f (Theta Qp - Qp Theta), LapQ)  and  (f (Qp LapQ - LapQ Qp), grad(u)^T)
// under the pairing (M1, M2) = int tr(M1 M2) dx.
inline std::array<double, 2> lemma24_terms(const SpectralField& f, const SpectralField& qp,
                                           const SpectralField& q, const SpectralField& u) {
  const TorusGrid& g = f.grid();
  const RealField f_col = f.to_collocation();
  const RealField qp_col = qp.to_collocation();
  const RealField lapq_col = q.laplacian().to_collocation();
  const std::vector<Mat3> grads = detail::velocity_gradients(u);
  const double w = detail::norm_constant(g) / static_cast<double>(g.points());
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t i = 0; i < g.points(); ++i) {
    const double fv = f_col.at(0, i);
    const Mat3 qpm = detail::mat_at(qp_col, i);
    const Mat3 lap = detail::mat_at(lapq_col, i);
    const Mat3& gm = grads[i];
    Mat3 theta = gm - gm.transpose();
    theta *= 0.5;
    t1 += fv * (commutator(theta, qpm) * lap).trace();
    t2 += fv * (commutator(qpm, lap) * gm.transpose()).trace();
  }
  return {t1 * w, t2 * w};
}

inline double lemma24_residual(const SpectralField& f, const SpectralField& qp,
                               const SpectralField& q, const SpectralField& u) {
  const std::array<double, 2> t = lemma24_terms(f, qp, q, u);
  return t[0] + t[1];
}

// Controlled energy pieces at Sobolev order s:
//   ||r||_{s,2}^2, ||u||_{s,2}^2, and sum_{|alpha|<=s} int D(r) |grad d^alpha Q|^2.
struct EnergyParts {
  double r_sq = 0.0;
  double u_sq = 0.0;
  double q_sq = 0.0;
  double total() const { return r_sq + u_sq + q_sq; }
};

inline EnergyParts energy_functional(const SymmetricState& st, int s) {
  const TorusGrid& g = st.grid();
  EnergyParts e;
  e.r_sq = st.r.sobolev_norm_sq(s);
  e.u_sq = st.u.sobolev_norm_sq(s);
  const RealField d_col = coeff_D(st.r, st.consts);
  const double w = detail::norm_constant(g) / static_cast<double>(g.points());
  for (const std::array<int, 3>& alpha : multi_indices(g.dim, s)) {
    const SpectralField qa = st.Q.partial(alpha);
    for (int ax = 0; ax < g.dim; ++ax) {
      const RealField der = qa.derivative(ax).to_collocation();
      double acc = 0.0;
      for (std::size_t i = 0; i < g.points(); ++i) {
        double sq = 0.0;
        for (int c = 0; c < 9; ++c) sq += der.at(c, i) * der.at(c, i);
        acc += d_col.at(0, i) * sq;
      }
      e.q_sq += acc * w;
    }
  }
  return e;
}

}  // namespace qspde
