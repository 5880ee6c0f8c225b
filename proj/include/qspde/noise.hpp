#pragma once

// Truncated cylindrical Wiener process and the multiplicative noise
// coefficient acting on the velocity.  Gaussian draws are counter-based
// (pure function of seed, mode, base step) so paths are reproducible,
// order-independent, and exactly refinement-consistent: a coarse path built
// over the same base stream has increments equal to sums of fine increments.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qspde/field.hpp"

namespace qspde {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0,1]; the +1 keeps log() finite.
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal keyed by (seed, mode, counter) via Box-Muller.
inline double standard_normal(std::uint64_t seed, std::uint64_t mode, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ (0xd6e8feb86659fd93ULL + mode)) ^
                                       (0xa5a5a5a5a5a5a5a5ULL + counter));
  const double u1 = uniform_open(splitmix64(key ^ 0x1ULL));
  const double u2 = uniform_open(splitmix64(key ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

// One realization of the first k_modes Brownian motions, sampled on a base
// grid of width base_dt; the path's own step is substeps * base_dt.
struct WienerPath {
  std::uint64_t seed = 0;
  int k_modes = 16;
  double base_dt = 1e-3;
  std::uint64_t base_steps = 0;  // horizon in base-grid units
  int substeps = 1;

  WienerPath() = default;
  WienerPath(std::uint64_t seed_, int modes, double dt_, double horizon)
      : seed(seed_), k_modes(modes), base_dt(dt_) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("WienerPath: dt must be > 0");
    if (modes < 0) throw std::invalid_argument("WienerPath: k_modes must be >= 0");
    base_steps = static_cast<std::uint64_t>(std::llround(horizon / dt_));
  }

  double dt() const { return base_dt * substeps; }
  std::uint64_t steps() const { return substeps > 0 ? base_steps / substeps : 0; }

  // Same underlying stream, step coarsened by an integer factor.
  WienerPath coarsened(int factor) const {
    if (factor < 1) throw std::invalid_argument("WienerPath: factor must be >= 1");
    WienerPath p = *this;
    p.substeps *= factor;
    return p;
  }

  // Increment of mode k (0-based) over path step `step`: N(0, dt) as the sum
  // of `substeps` base draws.
  double increment(int mode, std::uint64_t step) const {
    const double root = std::sqrt(base_dt);
    double s = 0.0;
    const std::uint64_t start = step * static_cast<std::uint64_t>(substeps);
    for (int j = 0; j < substeps; ++j)
      s += root * detail::standard_normal(seed, static_cast<std::uint64_t>(mode), start + j);
    return s;
  }
};

inline std::vector<double> sample_increments(const WienerPath& path, std::uint64_t step) {
  if (step >= path.steps()) throw std::invalid_argument("sample_increments: step out of range");
  std::vector<double> dw(static_cast<std::size_t>(path.k_modes));
  for (int k = 0; k < path.k_modes; ++k) dw[static_cast<std::size_t>(k)] = path.increment(k, step);
  return dw;
}

enum class NoiseKind { off, diagonal_multiplicative, custom_table };

// F(r,u) e_k = alpha_k g_k(x) u(x): diagonal multiplicative forcing with
// square-summable amplitudes alpha_k = sigma / k^beta (beta > 1/2) and fixed
// low-frequency profiles g_k.  Linear in u and r-independent, which makes the
// growth and Lipschitz bounds hold by construction (audited in tests).
struct NoiseModel {
  NoiseKind kind = NoiseKind::off;
  double sigma = 0.0;
  int modes = 16;
  double beta = 1.0;
  std::vector<double> table;  // custom_table amplitudes, 1-based mode order

  void validate() const {
    if (sigma < 0.0) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
    if (modes < 0) throw std::invalid_argument("NoiseModel: modes must be >= 0");
    if (kind == NoiseKind::diagonal_multiplicative && !(beta > 0.5))
      throw std::invalid_argument("NoiseModel: beta must be > 1/2 for square-summable amplitudes");
    if (kind == NoiseKind::custom_table && table.empty())
      throw std::invalid_argument("NoiseModel: custom_table requires amplitudes");
  }

  double alpha(int mode_1based) const {
    switch (kind) {
      case NoiseKind::off:
        return 0.0;
      case NoiseKind::diagonal_multiplicative:
        return sigma / std::pow(static_cast<double>(mode_1based), beta);
      case NoiseKind::custom_table: {
        const std::size_t i = static_cast<std::size_t>(mode_1based - 1);
        return i < table.size() ? table[i] : 0.0;
      }
    }
    return 0.0;
  }

  // g_k: alternating cos/sin of increasing frequency cycling through axes.
  // custom_table carries amplitudes only, so its profiles are constant.
  double profile(int mode_1based, const TorusGrid& g, std::size_t flat) const {
    if (kind == NoiseKind::custom_table) return 1.0;
    const int j = mode_1based - 1;
    const int axis = j % g.dim;
    const bool use_sin = (j / g.dim) % 2 == 1;
    const int freq = 1 + j / (2 * g.dim);
    int idx[3];
    g.unflatten(flat, idx);
    const double x = g.coord(idx[axis]);
    return use_sin ? std::sin(freq * x) : std::cos(freq * x);
  }
};

// sum_k alpha_k g_k(x) u(x) dW_k, returned spectrally and dealiased.
inline SpectralField apply_noise(const NoiseModel& model, const SpectralField& u,
                                 const std::vector<double>& dw) {
  if (model.kind == NoiseKind::off) return SpectralField(u.grid(), u.components());
  const RealField ur = u.to_collocation();
  const std::size_t np = ur.points();
  // Shared scalar modulation sum_k alpha_k g_k(x) dW_k.
  std::vector<double> mod(np, 0.0);
  const int kmax = std::min<int>(model.modes, static_cast<int>(dw.size()));
  for (int k = 1; k <= kmax; ++k) {
    const double a = model.alpha(k) * dw[static_cast<std::size_t>(k - 1)];
    if (a == 0.0) continue;
    for (std::size_t i = 0; i < np; ++i) mod[i] += a * model.profile(k, u.grid(), i);
  }
  RealField out(u.grid(), u.components());
  for (int c = 0; c < u.components(); ++c)
    for (std::size_t i = 0; i < np; ++i) out.at(c, i) = mod[i] * ur.at(c, i);
  return SpectralField::from_collocation(out).dealias();
}

// Hilbert-Schmidt norm over the retained noise directions:
// sum_k ||alpha_k g_k u||_{s,2}^2.
inline double hs_norm_sq(const NoiseModel& model, const SpectralField& u, int s) {
  if (model.kind == NoiseKind::off) return 0.0;
  const RealField ur = u.to_collocation();
  const std::size_t np = ur.points();
  double total = 0.0;
  RealField scaled(u.grid(), u.components());
  for (int k = 1; k <= model.modes; ++k) {
    const double a = model.alpha(k);
    if (a == 0.0) continue;
    for (int c = 0; c < u.components(); ++c)
      for (std::size_t i = 0; i < np; ++i)
        scaled.at(c, i) = a * model.profile(k, u.grid(), i) * ur.at(c, i);
    total += SpectralField::from_collocation(scaled).sobolev_norm_sq(s);
  }
  return total;
}

}  // namespace qspde
