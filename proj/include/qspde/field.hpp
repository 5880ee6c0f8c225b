#pragma once

// Real periodic fields on the torus (-pi,pi)^d and their Fourier-side
// representation: transforms, spectral derivatives, Sobolev and W^{k,inf}
// norms, Galerkin projection, and dealiased pointwise products.
//
// Normalization (used everywhere): u(x) = sum_k uhat_k e^{ik.x} with
// uhat_k = (2pi)^{-d} int u e^{-ik.x} dx, so a constant field c has
// uhat_0 = c and ||u||_{L2}^2 = (2pi)^d sum_k |uhat_k|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qspde/fft.hpp"
#include "qspde/grid.hpp"

namespace qspde {

inline constexpr double kPi = 3.14159265358979323846;

// Collocation values, component-major: value(c, flat) with flat row-major
// over the grid axes.
class RealField {
 public:
  RealField() = default;
  RealField(const TorusGrid& grid, int components)
      : grid_(grid), components_(components), v_(grid.points() * components, 0.0) {
    if (components < 1) throw std::invalid_argument("RealField: components must be >= 1");
  }

  const TorusGrid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t points() const { return grid_.points(); }

  double& at(int c, std::size_t flat) { return v_[c * points() + flat]; }
  double at(int c, std::size_t flat) const { return v_[c * points() + flat]; }
  double* data(int c) { return v_.data() + c * points(); }
  const double* data(int c) const { return v_.data() + c * points(); }

  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

 private:
  TorusGrid grid_;
  int components_ = 0;
  std::vector<double> v_;
};

class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const TorusGrid& grid, int components)
      : grid_(grid), components_(components), c_(grid.points() * components) {
    if (components < 1) throw std::invalid_argument("SpectralField: components must be >= 1");
  }

  const TorusGrid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t points() const { return grid_.points(); }

  std::complex<double>& at(int c, std::size_t flat) { return c_[c * points() + flat]; }
  const std::complex<double>& at(int c, std::size_t flat) const { return c_[c * points() + flat]; }
  std::complex<double>* data(int c) { return c_.data() + c * points(); }
  const std::complex<double>* data(int c) const { return c_.data() + c * points(); }

  // Flat index of the mode with per-axis signed wavenumbers k[0..dim-1].
  std::size_t mode_index(const int k[3]) const {
    const int n = grid_.n;
    std::size_t flat = 0;
    for (int ax = 0; ax < grid_.dim; ++ax) {
      int kk = k[ax];
      if (kk < -n / 2 + 1 || kk > n / 2) throw std::invalid_argument("mode_index: wavenumber out of range");
      int idx = kk >= 0 ? kk : kk + n;
      flat = flat * n + idx;
    }
    return flat;
  }

  std::complex<double> coeff(int c, const int k[3]) const { return at(c, mode_index(k)); }

  // Sets uhat_k = v and uhat_{-k} = conj(v) so the field stays real.
  // Axes at 0 or Nyquist are their own partner under index negation.
  void set_mode(int c, const int k[3], std::complex<double> v) {
    const std::size_t flat = mode_index(k);
    const std::size_t partner = partner_index(flat);
    if (partner == flat) {
      at(c, flat) = std::complex<double>(v.real(), 0.0);
    } else {
      at(c, flat) = v;
      at(c, partner) = std::conj(v);
    }
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField x, const SpectralField& y) { return x += y; }
  friend SpectralField operator-(SpectralField x, const SpectralField& y) { return x -= y; }
  friend SpectralField operator*(double s, SpectralField x) { return x *= s; }

  void check_shape(const SpectralField& o) const {
    if (grid_ != o.grid_ || components_ != o.components_)
      throw std::invalid_argument("SpectralField: shape mismatch");
  }

  static SpectralField from_collocation(const RealField& f);
  RealField to_collocation() const;
  // Largest |Im| over the grid after inverse transform; reality diagnostic.
  double max_imag_on_grid() const;

  SpectralField derivative(int axis) const;
  SpectralField partial(const std::array<int, 3>& alpha) const;
  SpectralField laplacian() const;

  double sobolev_norm_sq(int s) const;
  double sobolev_norm(int s) const { return std::sqrt(sobolev_norm_sq(s)); }
  double l2_norm_sq() const { return sobolev_norm_sq(0); }

  double sup_norm_wk_inf(int k) const;

  SpectralField galerkin_project(const GalerkinLevel& level) const;
  SpectralField dealias() const;

  // Largest |uhat_{-k} - conj(uhat_k)| over all modes and components.
  double conj_defect() const;

 private:
  // Signed wavenumbers of a flat mode index.
  void wavevector(std::size_t flat, int k[3]) const {
    int idx[3];
    grid_.unflatten(flat, idx);
    k[0] = grid_.wavenumber(idx[0]);
    k[1] = grid_.wavenumber(idx[1]);
    k[2] = grid_.dim == 3 ? grid_.wavenumber(idx[2]) : 0;
  }

  // Flat index of the conjugate partner mode -k (index-negation modulo n).
  std::size_t partner_index(std::size_t flat) const {
    const int n = grid_.n;
    int idx[3];
    grid_.unflatten(flat, idx);
    std::size_t p = 0;
    for (int ax = 0; ax < grid_.dim; ++ax) p = p * n + (n - idx[ax]) % n;
    return p;
  }

  TorusGrid grid_;
  int components_ = 0;
  std::vector<std::complex<double>> c_;
};

namespace detail {

// (-1)^{sum of axis indices}: the phase shift between the DFT on [0,2pi)
// index space and Fourier coefficients on (-pi,pi)^d.  Its own inverse.
inline void apply_shift_phase(const TorusGrid& g, std::complex<double>* data) {
  const int n = g.n;
  if (g.dim == 2) {
    std::size_t flat = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1, ++flat)
        if ((i0 + i1) & 1) data[flat] = -data[flat];
  } else {
    std::size_t flat = 0;
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2, ++flat)
          if ((i0 + i1 + i2) & 1) data[flat] = -data[flat];
  }
}

inline double norm_constant(const TorusGrid& g) {
  double c = 1.0;
  for (int i = 0; i < g.dim; ++i) c *= 2.0 * kPi;
  return c;
}

}  // namespace detail

inline SpectralField SpectralField::from_collocation(const RealField& f) {
  SpectralField out(f.grid(), f.components());
  const std::size_t np = out.points();
  const double scale = 1.0 / static_cast<double>(np);
  std::vector<std::complex<double>> buf(np);
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i = 0; i < np; ++i) buf[i] = f.at(c, i);
    qspde::detail::FftPlanCache::instance().execute(out.grid_.dim, out.grid_.n, FFTW_FORWARD, buf.data());
    detail::apply_shift_phase(out.grid_, buf.data());
    for (std::size_t i = 0; i < np; ++i) out.at(c, i) = buf[i] * scale;
  }
  return out;
}

inline RealField SpectralField::to_collocation() const {
  RealField out(grid_, components_);
  const std::size_t np = points();
  std::vector<std::complex<double>> buf(np);
  for (int c = 0; c < components_; ++c) {
    for (std::size_t i = 0; i < np; ++i) buf[i] = at(c, i);
    detail::apply_shift_phase(grid_, buf.data());
    qspde::detail::FftPlanCache::instance().execute(grid_.dim, grid_.n, FFTW_BACKWARD, buf.data());
    for (std::size_t i = 0; i < np; ++i) out.at(c, i) = buf[i].real();
  }
  return out;
}

inline double SpectralField::max_imag_on_grid() const {
  const std::size_t np = points();
  std::vector<std::complex<double>> buf(np);
  double worst = 0.0;
  for (int c = 0; c < components_; ++c) {
    for (std::size_t i = 0; i < np; ++i) buf[i] = at(c, i);
    detail::apply_shift_phase(grid_, buf.data());
    qspde::detail::FftPlanCache::instance().execute(grid_.dim, grid_.n, FFTW_BACKWARD, buf.data());
    for (std::size_t i = 0; i < np; ++i) worst = std::max(worst, std::abs(buf[i].imag()));
  }
  return worst;
}

inline SpectralField SpectralField::derivative(int axis) const {
  if (axis < 0 || axis >= grid_.dim) throw std::invalid_argument("derivative: axis out of range");
  SpectralField out(grid_, components_);
  const std::size_t np = points();
  const int nyq = grid_.n / 2;
  for (int c = 0; c < components_; ++c)
    for (std::size_t i = 0; i < np; ++i) {
      int k[3];
      wavevector(i, k);
      // The unpaired Nyquist mode has no real derivative representation;
      // it is annihilated (always zero for dealiased fields anyway).
      if (k[axis] == nyq) {
        out.at(c, i) = 0.0;
      } else {
        const std::complex<double> v = at(c, i);
        out.at(c, i) = std::complex<double>(-k[axis] * v.imag(), k[axis] * v.real());
      }
    }
  return out;
}

// Fused multi-index derivative: one multiplier i^{|alpha|} prod_ax k_ax^alpha_ax
// applied with a single rounding per coefficient, so the result is independent
// of any axis ordering.
inline SpectralField SpectralField::partial(const std::array<int, 3>& alpha) const {
  int order = 0;
  for (int ax = 0; ax < grid_.dim; ++ax) {
    if (alpha[ax] < 0) throw std::invalid_argument("partial: negative order");
    order += alpha[ax];
  }
  if (order == 0) return *this;
  SpectralField out(grid_, components_);
  const std::size_t np = points();
  const int nyq = grid_.n / 2;
  for (std::size_t i = 0; i < np; ++i) {
    int k[3];
    wavevector(i, k);
    bool dead = false;
    double mult = 1.0;  // exact: |k|^order <= 2^53 at any realistic grid size
    for (int ax = 0; ax < grid_.dim; ++ax) {
      if (alpha[ax] == 0) continue;
      if (k[ax] == nyq) dead = true;
      for (int rep = 0; rep < alpha[ax]; ++rep) mult *= k[ax];
    }
    for (int c = 0; c < components_; ++c) {
      if (dead) {
        out.at(c, i) = 0.0;
        continue;
      }
      std::complex<double> v = at(c, i);
      switch (order & 3) {  // i^order
        case 1: v = std::complex<double>(-v.imag(), v.real()); break;
        case 2: v = -v; break;
        case 3: v = std::complex<double>(v.imag(), -v.real()); break;
        default: break;
      }
      out.at(c, i) = mult * v;
    }
  }
  return out;
}

inline SpectralField SpectralField::laplacian() const {
  SpectralField out(grid_, components_);
  const std::size_t np = points();
  for (int c = 0; c < components_; ++c)
    for (std::size_t i = 0; i < np; ++i) {
      int k[3];
      wavevector(i, k);
      const double k2 = static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1] +
                        static_cast<double>(k[2]) * k[2];
      out.at(c, i) = -k2 * at(c, i);
    }
  return out;
}

inline double SpectralField::sobolev_norm_sq(int s) const {
  if (s < 0) throw std::invalid_argument("sobolev_norm_sq: s must be >= 0");
  const std::size_t np = points();
  double sum = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    int k[3];
    wavevector(i, k);
    const double k2 = static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1] +
                      static_cast<double>(k[2]) * k[2];
    double w = 1.0;
    for (int rep = 0; rep < s; ++rep) w *= 1.0 + k2;
    double mag = 0.0;
    for (int c = 0; c < components_; ++c) mag += std::norm(at(c, i));
    sum += w * mag;
  }
  return detail::norm_constant(grid_) * sum;
}

inline double SpectralField::sup_norm_wk_inf(int k) const {
  if (k < 0 || k > 3) throw std::invalid_argument("sup_norm_wk_inf: order must be in 0..3");
  const std::size_t np = points();
  std::vector<double> acc(np, 0.0);
  for (const auto& alpha : multi_indices(grid_.dim, k)) {
    const RealField d = partial(alpha).to_collocation();
    for (std::size_t i = 0; i < np; ++i) {
      double mag = 0.0;
      for (int c = 0; c < components_; ++c) mag += d.at(c, i) * d.at(c, i);
      acc[i] += std::sqrt(mag);
    }
  }
  return *std::max_element(acc.begin(), acc.end());
}

inline SpectralField SpectralField::galerkin_project(const GalerkinLevel& level) const {
  if (!level.active()) return *this;
  SpectralField out = *this;
  const std::size_t np = points();
  for (int c = 0; c < components_; ++c)
    for (std::size_t i = 0; i < np; ++i) {
      int k[3];
      wavevector(i, k);
      if (std::abs(k[0]) > level.m || std::abs(k[1]) > level.m || std::abs(k[2]) > level.m)
        out.at(c, i) = 0.0;
    }
  return out;
}

inline SpectralField SpectralField::dealias() const {
  GalerkinLevel cut{grid_.dealias_cut()};
  return galerkin_project(cut);
}

inline double SpectralField::conj_defect() const {
  const std::size_t np = points();
  double worst = 0.0;
  for (int c = 0; c < components_; ++c)
    for (std::size_t i = 0; i < np; ++i) {
      const std::size_t p = partner_index(i);
      if (p == i) {
        worst = std::max(worst, std::abs(at(c, i).imag()));
      } else {
        const std::complex<double> d = at(c, p) - std::conj(at(c, i));
        worst = std::max(worst, std::abs(d));
      }
    }
  return worst;
}

// Dealiased pointwise product.  Component rules: scalar*any broadcasts the
// scalar; equal component counts multiply componentwise.
inline SpectralField dealias_multiply(const SpectralField& f, const SpectralField& g) {
  if (f.grid() != g.grid()) throw std::invalid_argument("dealias_multiply: grid mismatch");
  const RealField fr = f.to_collocation();
  const RealField gr = g.to_collocation();
  const std::size_t np = fr.points();
  int out_comps;
  if (f.components() == g.components())
    out_comps = f.components();
  else if (f.components() == 1)
    out_comps = g.components();
  else if (g.components() == 1)
    out_comps = f.components();
  else
    throw std::invalid_argument("dealias_multiply: incompatible component counts");
  RealField prod(f.grid(), out_comps);
  for (int c = 0; c < out_comps; ++c) {
    const double* fa = fr.data(f.components() == 1 ? 0 : c);
    const double* ga = gr.data(g.components() == 1 ? 0 : c);
    double* pa = prod.data(c);
    for (std::size_t i = 0; i < np; ++i) pa[i] = fa[i] * ga[i];
  }
  return SpectralField::from_collocation(prod).dealias();
}

// Exact integral over the torus: (2pi)^d * mean value.
inline double integral(const SpectralField& f, int comp = 0) {
  int k0[3] = {0, 0, 0};
  return detail::norm_constant(f.grid()) * f.coeff(comp, k0).real();
}

// Collocation quadrature of a pointwise scalar sample array.
inline double quadrature(const TorusGrid& g, const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * detail::norm_constant(g) / static_cast<double>(g.points());
}

// L2 inner product over all components, computed spectrally (exact).
inline double l2_inner(const SpectralField& f, const SpectralField& g) {
  f.check_shape(g);
  double s = 0.0;
  const std::size_t total = f.points() * static_cast<std::size_t>(f.components());
  const std::complex<double>* fa = f.data(0);
  const std::complex<double>* ga = g.data(0);
  for (std::size_t i = 0; i < total; ++i) s += fa[i].real() * ga[i].real() + fa[i].imag() * ga[i].imag();
  return detail::norm_constant(f.grid()) * s;
}

}  // namespace qspde
