#pragma once

// Periodic collocation grid on (-pi,pi)^d, d = 2 or 3, with the Fourier
// wavenumber bookkeeping shared by every spectral operation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qspde {

struct TorusGrid {
  int dim = 2;              // 2 or 3
  int n = 16;               // modes per axis, even, >= 4
  double dealias_fraction = 2.0 / 3.0;

  TorusGrid() = default;
  TorusGrid(int dim_, int n_, double dealias = 2.0 / 3.0)
      : dim(dim_), n(n_), dealias_fraction(dealias) {
    validate();
  }

  void validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("TorusGrid: dim must be 2 or 3");
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("TorusGrid: n must be even and >= 4");
    if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
      throw std::invalid_argument("TorusGrid: dealias_fraction must be in (0,1]");
  }

  std::size_t points() const {
    std::size_t p = 1;
    for (int i = 0; i < dim; ++i) p *= static_cast<std::size_t>(n);
    return p;
  }

  // Index along one axis -> signed wavenumber in [-n/2+1, n/2].
  int wavenumber(int idx) const { return idx <= n / 2 ? idx : idx - n; }

  // Largest |k_i| kept by the dealias mask (per axis).
  int dealias_cut() const { return static_cast<int>(dealias_fraction * (n / 2) + 1e-9); }

  // Collocation coordinate x_i = -pi + 2*pi*idx/n.
  double coord(int idx) const;

  // Decompose a flat row-major grid index into per-axis indices.
  void unflatten(std::size_t flat, int idx[3]) const {
    idx[2] = 0;
    if (dim == 3) {
      idx[2] = static_cast<int>(flat % n);
      flat /= n;
    }
    idx[1] = static_cast<int>(flat % n);
    idx[0] = static_cast<int>(flat / n);
  }

  bool operator==(const TorusGrid& o) const {
    return dim == o.dim && n == o.n && dealias_fraction == o.dealias_fraction;
  }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }
};

inline double TorusGrid::coord(int idx) const {
  constexpr double pi = 3.14159265358979323846;
  return -pi + 2.0 * pi * idx / n;
}

// Retained-mode set {|k|_inf <= m}; symmetric under k -> -k by construction.
struct GalerkinLevel {
  int m = 0;  // per-axis cut; m <= 0 means "no projection" (all grid modes kept)

  bool active() const { return m > 0; }

  // Number of retained scalar basis functions per component.
  std::size_t retained(int dim) const {
    if (m <= 0) return 0;
    std::size_t per_axis = 2 * static_cast<std::size_t>(m) + 1;
    std::size_t r = 1;
    for (int i = 0; i < dim; ++i) r *= per_axis;
    return r;
  }
};

// All d-dimensional multi-indices alpha with |alpha| <= s, in a fixed
// deterministic order starting with alpha = 0.
inline std::vector<std::array<int, 3>> multi_indices(int dim, int s) {
  std::vector<std::array<int, 3>> out;
  if (dim == 2) {
    for (int total = 0; total <= s; ++total)
      for (int a0 = total; a0 >= 0; --a0) out.push_back({a0, total - a0, 0});
  } else {
    for (int total = 0; total <= s; ++total)
      for (int a0 = total; a0 >= 0; --a0)
        for (int a1 = total - a0; a1 >= 0; --a1) out.push_back({a0, a1, total - a0 - a1});
  }
  return out;
}

}  // namespace qspde
