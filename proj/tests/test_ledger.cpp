#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>

#include "qspde/ledger.hpp"
#include "testutil.hpp"

using namespace qspde;

TEST_CASE("ledger csv round trips doubles exactly") {
  std::vector<LedgerRow> rows(3);
  rows[0].t = 1.0 / 3.0;
  rows[0].r_sq = 1e-300;
  rows[0].u_sq = -0.0;
  rows[0].q_sq = 6.02214076e23;
  rows[0].noise_pairing = -1.2345678901234567e-5;
  rows[1].t = 2.0 / 3.0;
  rows[1].min_r = std::nextafter(2.0, 3.0);
  rows[1].conj = 4.9406564584124654e-324;  // smallest subnormal
  rows[2].t = 1.0;
  rows[2].phi = 0.9999999999999999;

  const std::string path = "ledger_roundtrip_test.csv";
  write_ledger_csv(path, rows);
  const std::vector<LedgerRow> back = read_ledger_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(back[i].t == rows[i].t);
    REQUIRE(back[i].r_sq == rows[i].r_sq);
    REQUIRE(back[i].u_sq == rows[i].u_sq);
    REQUIRE(back[i].q_sq == rows[i].q_sq);
    REQUIRE(back[i].noise_pairing == rows[i].noise_pairing);
    REQUIRE(back[i].min_r == rows[i].min_r);
    REQUIRE(back[i].conj == rows[i].conj);
    REQUIRE(back[i].phi == rows[i].phi);
  }
}

TEST_CASE("ledger csv rejects malformed input") {
  const std::string path = "ledger_malformed_test.csv";
  SECTION("wrong header") {
    std::ofstream out(path);
    out << "time,energy\n1,2\n";
    out.close();
    REQUIRE_THROWS_AS(read_ledger_csv(path), std::runtime_error);
  }
  SECTION("short row") {
    std::ofstream out(path);
    out << ledger_header() << "\n"
        << "1,2,3\n";
    out.close();
    REQUIRE_THROWS_AS(read_ledger_csv(path), std::runtime_error);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(read_ledger_csv("no_such_ledger_file.csv"), std::runtime_error);
  }
  std::remove(path.c_str());
}

TEST_CASE("noise pairing equals the exact sobolev-seminorm increment") {
  const TorusGrid g(2, 16);
  const SpectralField u = testutil::random_band_limited(g, 2, 3, 0.5, 11);
  const SpectralField v = testutil::random_band_limited(g, 2, 3, 0.2, 12);
  SpectralField sum = u;
  sum += v;
  for (int s : {0, 1, 2}) {
    double direct = 0.0;
    for (const auto& alpha : multi_indices(g.dim, s)) {
      direct += sum.partial(alpha).l2_norm_sq() - u.partial(alpha).l2_norm_sq();
    }
    const double paired = noise_energy_pairing(u, v, s);
    REQUIRE(paired == Catch::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("velocity dissipation matches a shear-flow quadrature") {
  const TorusGrid g(2, 32);
  MaterialConstants mc;
  mc.upsilon = 0.3;
  mc.lambda = 0.7;
  SymmetricState st(g, mc);
  int k0[3] = {0, 0, 0};
  st.r.set_mode(0, k0, 2.0);  // D(r) = 1 at gamma = 2, A = 1
  int k1[3] = {1, 0, 0};
  st.u.set_mode(1, k1, std::complex<double>(0.0, -0.5));  // u = (0, sin x1): divergence free

  const double four_pi_sq = detail::norm_constant(g);
  const double expect = 0.5 * mc.upsilon * four_pi_sq / 2.0;  // phi ups int cos^2
  REQUIRE(dissipation_u(st, 0.5, 0) == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(dissipation_u(st, 0.0, 0) == 0.0);

  SECTION("compression adds the divergence channel") {
    SymmetricState cst(g, mc);
    cst.r = st.r;
    cst.u.set_mode(0, k1, std::complex<double>(0.0, -0.5));  // u = (sin x1, 0)
    const double e = (mc.upsilon + (mc.upsilon + mc.lambda)) * four_pi_sq / 2.0;
    REQUIRE(dissipation_u(cst, 1.0, 0) == Catch::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("alignment dissipation matches a single-mode quadrature") {
  const TorusGrid g(2, 32);
  MaterialConstants mc;
  mc.Gamma = 0.8;
  mc.L = 1.3;
  SymmetricState st(g, mc);
  int k0[3] = {0, 0, 0};
  st.r.set_mode(0, k0, 2.0);
  SpectralField five(g, 5);
  int k1[3] = {1, 0, 0};
  five.set_mode(2, k1, std::complex<double>(0.0, -0.5));  // coordinate sin x1
  st.Q = expand_s03(five);

  // |Lap Q|^2 = sin^2 x1 for the unit-Frobenius basis element
  const double expect = mc.Gamma * mc.L * detail::norm_constant(g) / 2.0;
  REQUIRE(dissipation_q(st, 0) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ledger row snapshots a uniform state") {
  const TorusGrid g(2, 16);
  const MaterialConstants mc;
  const SymmetricState st = SymmetricState::uniform(g, mc, 1.0);
  const LedgerRow row = make_ledger_row(st, 1.0, 2);
  REQUIRE(row.t == 0.0);
  REQUIRE(row.r_sq == Catch::Approx(4.0 * detail::norm_constant(g)).epsilon(1e-13));
  REQUIRE(row.u_sq == 0.0);
  REQUIRE(row.q_sq == 0.0);
  REQUIRE(row.diss_u == 0.0);
  REQUIRE(row.diss_q == 0.0);
  REQUIRE(row.phi == 1.0);
  REQUIRE(row.min_r == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(row.max_r == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(row.u_w2inf == 0.0);
  REQUIRE(row.q_w3inf == 0.0);
  REQUIRE(row.energy() == row.r_sq);
  REQUIRE(row.dissipation() == 0.0);
}
