#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qspde/noise.hpp"
#include "testutil.hpp"

using namespace qspde;

TEST_CASE("wiener path determinism") {
  const WienerPath a(1234, 8, 1e-3, 0.1);
  const WienerPath b(1234, 8, 1e-3, 0.1);
  REQUIRE(a.steps() == 100);
  for (std::uint64_t s = 0; s < a.steps(); ++s) {
    const std::vector<double> da = sample_increments(a, s);
    const std::vector<double> db = sample_increments(b, s);
    for (int k = 0; k < 8; ++k) REQUIRE(da[k] == db[k]);
  }
  const WienerPath other(1235, 8, 1e-3, 0.1);
  REQUIRE(sample_increments(other, 0)[0] != sample_increments(a, 0)[0]);
}

TEST_CASE("wiener path increment statistics") {
  const double dt = 1e-3;
  const int ndraw = 100000;
  const WienerPath p(77, 3, dt, ndraw * dt);
  for (int mode = 0; mode < 3; ++mode) {
    double sum = 0.0, sumsq = 0.0;
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(ndraw); ++s) {
      const double d = p.increment(mode, s);
      sum += d;
      sumsq += d * d;
    }
    const double mean = sum / ndraw;
    const double var = sumsq / ndraw - mean * mean;
    REQUIRE(std::abs(mean) <= 4.0 * std::sqrt(dt / ndraw));
    REQUIRE(var == Catch::Approx(dt).epsilon(0.05));
  }
}

TEST_CASE("refinement consistency is exact") {
  const WienerPath fine(99, 4, 2.5e-4, 0.1);
  const WienerPath coarse = fine.coarsened(4);
  REQUIRE(coarse.dt() == Catch::Approx(1e-3));
  REQUIRE(coarse.steps() == 100);
  for (std::uint64_t s = 0; s < coarse.steps(); ++s)
    for (int k = 0; k < 4; ++k) {
      double sum = 0.0;
      for (std::uint64_t j = 0; j < 4; ++j) sum += fine.increment(k, 4 * s + j);
      REQUIRE(coarse.increment(k, s) == sum);
    }
}

TEST_CASE("out of range step is rejected") {
  const WienerPath p(5, 2, 1e-2, 0.1);
  REQUIRE(p.steps() == 10);
  REQUIRE_THROWS_AS(sample_increments(p, 10), std::invalid_argument);
  REQUIRE_NOTHROW(sample_increments(p, 9));
}

TEST_CASE("noise model validation and amplitudes") {
  NoiseModel m;
  m.kind = NoiseKind::diagonal_multiplicative;
  m.sigma = 2.0;
  m.beta = 1.0;
  REQUIRE_NOTHROW(m.validate());
  REQUIRE(m.alpha(1) == 2.0);
  REQUIRE(m.alpha(4) == 0.5);
  m.beta = 0.5;
  REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
  m.beta = 1.0;
  m.sigma = -1.0;
  REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
  NoiseModel t;
  t.kind = NoiseKind::custom_table;
  REQUIRE_THROWS_AS(t.validate(), std::invalid_argument);
  t.table = {0.3, 0.1};
  REQUIRE_NOTHROW(t.validate());
  REQUIRE(t.alpha(2) == 0.1);
  REQUIRE(t.alpha(3) == 0.0);
}

TEST_CASE("apply_noise basics") {
  const TorusGrid g(2, 16);
  NoiseModel m;
  m.kind = NoiseKind::diagonal_multiplicative;
  m.sigma = 0.5;
  m.modes = 6;
  const std::vector<double> dw = {0.01, -0.02, 0.005, 0.0, 0.03, -0.01};
  SECTION("zero velocity gives zero forcing") {
    const SpectralField u(g, 2);
    REQUIRE(apply_noise(m, u, dw).l2_norm_sq() == 0.0);
  }
  SECTION("kind off gives zero forcing") {
    NoiseModel off;
    const SpectralField u = testutil::random_band_limited(g, 2, 4, 1.0, 60);
    REQUIRE(apply_noise(off, u, dw).l2_norm_sq() == 0.0);
  }
  SECTION("doubling u doubles the output exactly") {
    const SpectralField u = testutil::random_band_limited(g, 2, 4, 1.0, 61);
    SpectralField u2 = u;
    u2 *= 2.0;
    const SpectralField f1 = apply_noise(m, u, dw);
    const SpectralField f2 = apply_noise(m, u2, dw);
    for (int c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < u.points(); ++i) REQUIRE(f2.at(c, i) == 2.0 * f1.at(c, i));
  }
  SECTION("output is real and dealiased") {
    const SpectralField u = testutil::random_band_limited(g, 2, 4, 1.0, 62);
    const SpectralField f = apply_noise(m, u, dw);
    REQUIRE(f.conj_defect() <= 1e-14);
    const int cut = g.dealias_cut();
    for (std::size_t i = 0; i < f.points(); ++i) {
      int idx[3];
      g.unflatten(i, idx);
      if (std::abs(g.wavenumber(idx[0])) > cut || std::abs(g.wavenumber(idx[1])) > cut)
        REQUIRE(std::abs(f.at(0, i)) == 0.0);
    }
  }
}

TEST_CASE("hs_norm_sq oracles") {
  const TorusGrid g(2, 16);
  const SpectralField u = testutil::random_band_limited(g, 2, 4, 0.9, 63);
  SECTION("zero velocity") {
    NoiseModel m;
    m.kind = NoiseKind::diagonal_multiplicative;
    m.sigma = 1.0;
    REQUIRE(hs_norm_sq(m, SpectralField(g, 2), 2) == 0.0);
  }
  SECTION("single constant-profile mode reproduces the Sobolev norm") {
    NoiseModel m;
    m.kind = NoiseKind::custom_table;
    m.modes = 1;
    m.table = {1.0};
    const double hs = hs_norm_sq(m, u, 2);
    REQUIRE(hs == Catch::Approx(u.sobolev_norm_sq(2)).epsilon(1e-12));
  }
  SECTION("growth bound with a calibrated constant") {
    NoiseModel m;
    m.kind = NoiseKind::diagonal_multiplicative;
    m.sigma = 0.7;
    m.modes = 8;
    const int s = 2;
    double cmax = 0.0;
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
      const SpectralField v = testutil::random_band_limited(g, 2, 5, 1.0 + 0.1 * (seed % 7), seed);
      const double ratio = hs_norm_sq(m, v, s) / v.sobolev_norm_sq(s);
      REQUIRE(std::isfinite(ratio));
      cmax = std::max(cmax, ratio);
    }
    for (std::uint64_t seed = 130; seed < 160; ++seed) {
      const SpectralField v = testutil::random_band_limited(g, 2, 5, 1.0 + 0.1 * (seed % 5), seed);
      REQUIRE(hs_norm_sq(m, v, s) <= 1.25 * cmax * v.sobolev_norm_sq(s));
    }
  }
}

TEST_CASE("noise map is Lipschitz in u through linearity") {
  const TorusGrid g(2, 16);
  NoiseModel m;
  m.kind = NoiseKind::diagonal_multiplicative;
  m.sigma = 0.4;
  m.modes = 6;
  const std::vector<double> dw = {0.02, -0.01, 0.015, -0.005, 0.0, 0.01};
  const SpectralField u1 = testutil::random_band_limited(g, 2, 5, 1.0, 70);
  const SpectralField u2 = testutil::random_band_limited(g, 2, 5, 1.0, 71);
  const SpectralField lhs = apply_noise(m, u1, dw) - apply_noise(m, u2, dw);
  const SpectralField rhs = apply_noise(m, u1 - u2, dw);
  const double scale = std::sqrt(rhs.l2_norm_sq()) + 1e-30;
  REQUIRE(std::sqrt((lhs - rhs).l2_norm_sq()) <= 1e-12 * scale);
}
