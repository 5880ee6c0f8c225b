#pragma once

// Smooth truncation layers: the scalar gate Phi_R on the pair
// (||u||_{2,inf}, ||Q||_{3,inf}) and the per-coefficient clamp Psi_K used by
// the inner fixed-point layer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qspde/field.hpp"

namespace qspde {

namespace detail {

// Quintic smoothstep: 0 at 0, 1 at 1, first two derivatives vanishing at both
// ends (C^2 joins; actually C^2 with zero curvature endpoints).
inline double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (x * 6.0 - 15.0) + 10.0);
}

// Septic smoothstep, C^3 at the joins.
inline double smoothstep7(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * x * (x * (x * (-20.0 * x + 70.0) - 84.0) + 35.0);
}

}  // namespace detail

// Phi_R: 1 on [0,R], 0 on [2R,inf), monotone smoothstep transition between.
struct CutoffProfile {
  double R = 1.0;
  int order = 5;  // smoothstep polynomial order: 5 (C^2) or 7 (C^3)

  CutoffProfile() = default;
  explicit CutoffProfile(double r, int ord = 5) : R(r), order(ord) {
    if (!(R > 0.0)) throw std::invalid_argument("CutoffProfile: R must be > 0");
    if (order != 5 && order != 7) throw std::invalid_argument("CutoffProfile: order must be 5 or 7");
  }

  double value(double x) const {
    if (x <= R) return 1.0;
    if (x >= 2.0 * R) return 0.0;
    const double t = (x - R) / R;
    const double s = order == 5 ? detail::smoothstep5(t) : detail::smoothstep7(t);
    return std::max(0.0, 1.0 - s);  // rounding near the join must not leave [0,1]
  }
};

// Psi_K: 1 on |z| <= K, 0 on |z| >= 2K; the clamped value Psi_K(z) z is
// bounded by 2K in magnitude.
struct ClampProfile {
  double K = std::numeric_limits<double>::infinity();

  ClampProfile() = default;
  explicit ClampProfile(double k) : K(k) {
    if (!(K > 0.0)) throw std::invalid_argument("ClampProfile: K must be > 0");
  }

  bool active() const { return std::isfinite(K); }

  double value(double z) const {
    if (!active()) return 1.0;
    const double az = std::abs(z);
    if (az <= K) return 1.0;
    if (az >= 2.0 * K) return 0.0;
    return std::max(0.0, 1.0 - detail::smoothstep5((az - K) / K));
  }
};

// Phi_R^{u,Q} = Phi_R(||u||_{2,inf}) * Phi_R(||Q||_{3,inf}).
// Takes the two sup norms directly; dynamics supplies them from the state.
inline double phi_R(double u_norm_2inf, double q_norm_3inf, const CutoffProfile& profile) {
  return profile.value(u_norm_2inf) * profile.value(q_norm_3inf);
}

// Applies Psi_K to every real Galerkin coordinate of the expansion in the
// real cosine/sine basis: for each conjugate mode pair {k,-k} the pair of
// real coordinates is (2 Re uhat_k, -2 Im uhat_k); self-conjugate modes carry
// the single coordinate Re uhat_k.  Conjugate symmetry is preserved exactly.
inline SpectralField clamp_coefficients(const SpectralField& f, const ClampProfile& profile) {
  if (!profile.active()) return f;
  SpectralField out = f;
  const TorusGrid& g = f.grid();
  const std::size_t np = f.points();
  const int n = g.n;
  for (int c = 0; c < f.components(); ++c)
    for (std::size_t i = 0; i < np; ++i) {
      int idx[3] = {0, 0, 0};
      g.unflatten(i, idx);
      // Conjugate partner has index (n - idx) mod n on every axis.
      int p[3] = {0, 0, 0};
      bool self = true, canonical = true;
      for (int ax = 0; ax < g.dim; ++ax) {
        p[ax] = (n - idx[ax]) % n;
        if (p[ax] != idx[ax]) self = false;
      }
      for (int ax = 0; ax < g.dim; ++ax) {
        if (idx[ax] != p[ax]) {
          canonical = idx[ax] < p[ax];
          break;
        }
      }
      const std::complex<double> v = out.at(c, i);
      if (self) {
        out.at(c, i) = std::complex<double>(profile.value(v.real()) * v.real(), 0.0);
      } else if (canonical) {
        const double re = 2.0 * v.real();
        const double im = -2.0 * v.imag();
        const std::complex<double> w(0.5 * profile.value(re) * re, -0.5 * profile.value(im) * im);
        out.at(c, i) = w;
        std::size_t pflat = 0;
        for (int ax = 0; ax < g.dim; ++ax) pflat = pflat * n + p[ax];
        out.at(c, pflat) = std::conj(w);
      }
    }
  return out;
}

}  // namespace qspde
