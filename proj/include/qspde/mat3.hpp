#pragma once

// Pointwise 3x3 tensor algebra: symmetric trace-free projection, the
// Landau-de Gennes bulk free energy F(Q) and bulk force K(Q), commutators,
// and the gradient contraction (grad Q (.) grad Q)_ij.

#include <array>
#include <cmath>
#include <stdexcept>

namespace qspde {

struct Mat3 {
  // Row-major entries.
  std::array<double, 9> a{};

  double& operator()(int i, int j) { return a[3 * i + j]; }
  double operator()(int i, int j) const { return a[3 * i + j]; }

  static Mat3 zero() { return Mat3{}; }
  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }
  static Mat3 diag(double x, double y, double z) {
    Mat3 m;
    m(0, 0) = x;
    m(1, 1) = y;
    m(2, 2) = z;
    return m;
  }

  bool finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Mat3 transpose() const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = (*this)(j, i);
    return m;
  }

  double trace() const { return a[0] + a[4] + a[8]; }

  double frobenius_sq() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
  }
  double frobenius() const { return std::sqrt(frobenius_sq()); }

  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat3& operator*=(double c) {
    for (double& v : a) v *= c;
    return *this;
  }

  friend Mat3 operator+(Mat3 x, const Mat3& y) { return x += y; }
  friend Mat3 operator-(Mat3 x, const Mat3& y) { return x -= y; }
  friend Mat3 operator*(double c, Mat3 x) { return x *= c; }
  friend Mat3 operator*(Mat3 x, double c) { return x *= c; }

  friend Mat3 operator*(const Mat3& x, const Mat3& y) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        // Fixed k-order keeps A*B bitwise symmetric when A,B are symmetric.
        m(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
      }
    return m;
  }
};

// Q-tensors are stored as full matrices; symmetry and trace-freeness are
// maintained by construction and asserted by tests, not re-imposed.
using QTensor = Mat3;

struct MaterialConstants {
  double A = 1.0;        // pressure scale, > 0
  double gamma = 2.0;    // adiabatic exponent, > 1
  double upsilon = 0.1;  // shear viscosity, > 0
  double lambda = 0.1;   // bulk viscosity, >= 0
  double L = 1.0;        // elastic constant, > 0
  double Gamma = 1.0;    // rotational constant, > 0
  double a = -0.2;
  double b = 1.0;  // > 0
  double c = 1.0;  // > 0

  void validate() const {
    if (!(A > 0.0)) throw std::invalid_argument("MaterialConstants: A must be > 0");
    if (!(gamma > 1.0)) throw std::invalid_argument("MaterialConstants: gamma must be > 1");
    if (!(upsilon > 0.0)) throw std::invalid_argument("MaterialConstants: upsilon must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("MaterialConstants: lambda must be >= 0");
    if (!(L > 0.0)) throw std::invalid_argument("MaterialConstants: L must be > 0");
    if (!(Gamma > 0.0)) throw std::invalid_argument("MaterialConstants: Gamma must be > 0");
    if (!(b > 0.0)) throw std::invalid_argument("MaterialConstants: b must be > 0");
    if (!(c > 0.0)) throw std::invalid_argument("MaterialConstants: c must be > 0");
  }
};

// Canonical projection onto symmetric trace-free matrices:
// (M + M^T)/2 - (tr M / 3) I.  Idempotent and linear.
inline QTensor project_S03(const Mat3& m) {
  if (!m.finite()) throw std::invalid_argument("project_S03: non-finite input");
  QTensor q;
  const double t3 = m.trace() / 3.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q(i, j) = 0.5 * (m(i, j) + m(j, i));
  q(0, 0) -= t3;
  q(1, 1) -= t3;
  q(2, 2) -= t3;
  return q;
}

// F(Q) = L/2 |grad Q|^2 + a/2 tr(Q^2) - b/3 tr(Q^3) + c/4 tr^2(Q^2).
// The gradient contribution is passed in as the precomputed scalar |grad Q|^2.
inline double bulk_free_energy(const QTensor& q, double grad_q_sq, const MaterialConstants& mc) {
  const Mat3 q2 = q * q;
  const double tr2 = q2.trace();
  const double tr3 = (q2 * q).trace();
  return 0.5 * mc.L * grad_q_sq + 0.5 * mc.a * tr2 - mc.b / 3.0 * tr3 + 0.25 * mc.c * tr2 * tr2;
}

// K(Q) = Gamma(-aQ + b[Q^2 - (I/3) tr Q^2] - c Q tr Q^2).
// Stays in S03 without re-projection: Q^2 is symmetric and the subtracted
// isotropic part removes its trace.
inline QTensor bulk_force_K(const QTensor& q, const MaterialConstants& mc) {
  const Mat3 q2 = q * q;
  const double tr2 = q2.trace();
  QTensor k;
  const double t3 = tr2 / 3.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = -mc.a * q(i, j) + mc.b * q2(i, j) - mc.c * q(i, j) * tr2;
      if (i == j) v -= mc.b * t3;
      k(i, j) = mc.Gamma * v;
    }
  return k;
}

inline Mat3 commutator(const Mat3& x, const Mat3& y) { return x * y - y * x; }

// (grad Q (.) grad Q)_ij = sum_{k,l} d_i Q_kl d_j Q_kl for the spatial
// derivative slices grad_q[0..2] (unused axes must be zero matrices).
inline Mat3 odot(const std::array<Mat3, 3>& grad_q) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 9; ++k) s += grad_q[i].a[k] * grad_q[j].a[k];
      m(i, j) = s;
      m(j, i) = s;
    }
  return m;
}

}  // namespace qspde
