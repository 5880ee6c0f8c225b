#pragma once

// Deterministic random-field generators shared by audits, experiment
// initial conditions, and the test suites.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "qspde/field.hpp"
#include "qspde/mat3.hpp"
#include "qspde/state.hpp"

namespace qspde {

// Real random field with modes confined to |k|_inf <= kmax, coefficient
// magnitudes ~ amplitude / (1+|k|^2).
inline SpectralField random_band_limited(const TorusGrid& grid, int components, int kmax,
                                         double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField f(grid, components);
  const int k2max = grid.dim == 3 ? kmax : 0;
  for (int c = 0; c < components; ++c)
    for (int k0 = -kmax; k0 <= kmax; ++k0)
      for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = -k2max; k2 <= k2max; ++k2) {
          // Canonical half-space: first nonzero wavenumber positive.
          int first = k0 != 0 ? k0 : (k1 != 0 ? k1 : k2);
          if (first < 0) continue;
          const double kk = k0 * k0 + k1 * k1 + k2 * k2;
          const double amp = amplitude / (1.0 + kk);
          int k[3] = {k0, k1, k2};
          std::complex<double> v(amp * gauss(rng), first == 0 ? 0.0 : amp * gauss(rng));
          f.set_mode(c, k, v);
        }
  return f;
}

// Smooth state around the rest point: r = r_base + band-limited perturbation,
// band-limited u, and Q expanded from five scalar coordinates so it lies in
// S0(3) exactly.
inline SymmetricState random_state(const TorusGrid& grid, const MaterialConstants& mc,
                                   double r_base, double eps_r, double eps_u, double eps_q,
                                   std::uint64_t seed, int kmax = 3) {
  SymmetricState st(grid, mc);
  st.r = random_band_limited(grid, 1, kmax, eps_r, seed);
  int k0[3] = {0, 0, 0};
  st.r.set_mode(0, k0, st.r.coeff(0, k0) + r_base);
  st.u = random_band_limited(grid, grid.dim, kmax, eps_u, seed + 1);
  st.Q = expand_s03(random_band_limited(grid, 5, kmax, eps_q, seed + 2));
  return st;
}

}  // namespace qspde
