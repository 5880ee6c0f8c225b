#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "qspde/snapshot.hpp"
#include "testutil.hpp"

using namespace qspde;

namespace {

struct TempFile {
  std::string name;
  explicit TempFile(std::string n) : name(std::move(n)) {}
  ~TempFile() { std::remove(name.c_str()); }
};

std::uint64_t u64_at(const std::vector<char>& bytes, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

TEST_CASE("field snapshot round trips bit for bit") {
  const TorusGrid g(2, 16);
  const RealField f = testutil::random_band_limited(g, 3, 4, 1.0, 31).to_collocation();
  TempFile tmp("snapshot_roundtrip.qsp");
  write_snapshot(tmp.name, f, 0.625);
  const Snapshot s = read_snapshot(tmp.name);
  REQUIRE(s.time == 0.625);
  REQUIRE(s.field.grid().dim == 2);
  REQUIRE(s.field.grid().n == 16);
  REQUIRE(s.field.components() == 3);
  REQUIRE(s.field.raw() == f.raw());
}

TEST_CASE("snapshot header layout is fixed") {
  const TorusGrid g(3, 4);
  RealField f(g, 2);
  f.at(0, 0) = -1.5;
  f.at(1, 63) = 2.25;
  TempFile tmp("snapshot_header.qsp");
  write_snapshot(tmp.name, f, 0.125);

  std::ifstream in(tmp.name, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 6 + 3 * 8 + 8 + 2 * 64 * 8);
  REQUIRE(std::memcmp(bytes.data(), "QSPDE1", 6) == 0);
  REQUIRE(u64_at(bytes, 6) == 3);    // dim
  REQUIRE(u64_at(bytes, 14) == 4);   // grid size
  REQUIRE(u64_at(bytes, 22) == 2);   // components
  double t;
  std::memcpy(&t, bytes.data() + 30, 8);
  REQUIRE(t == 0.125);
  double first;
  std::memcpy(&first, bytes.data() + 38, 8);
  REQUIRE(first == -1.5);
}

TEST_CASE("snapshot reader rejects corrupt input") {
  SECTION("missing file") {
    REQUIRE_THROWS_AS(read_snapshot("no_such_snapshot.qsp"), std::runtime_error);
  }
  SECTION("bad magic") {
    TempFile tmp("snapshot_badmagic.qsp");
    std::ofstream out(tmp.name, std::ios::binary);
    out << "NOTQSP" << std::string(40, '\0');
    out.close();
    REQUIRE_THROWS_AS(read_snapshot(tmp.name), std::runtime_error);
  }
  SECTION("truncated payload") {
    const TorusGrid g(2, 8);
    TempFile tmp("snapshot_trunc.qsp");
    write_snapshot(tmp.name, RealField(g, 1), 0.0);
    std::ifstream in(tmp.name, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(tmp.name, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 17));
    out.close();
    REQUIRE_THROWS_AS(read_snapshot(tmp.name), std::runtime_error);
  }
  SECTION("field reader refuses a path dump") {
    TempFile tmp("snapshot_pathdump.qsp");
    write_path_dump(tmp.name, WienerPath(5, 2, 1e-3, 0.002));
    REQUIRE_THROWS_AS(read_snapshot(tmp.name), std::runtime_error);
  }
}

TEST_CASE("state snapshot restores spectral fields") {
  const TorusGrid g(2, 16);
  const MaterialConstants mc;
  const SymmetricState st = testutil::random_state(g, mc, 2.0, 0.05, 0.1, 0.05, 77);
  TempFile fr("state_rt_r.qsp"), fu("state_rt_u.qsp"), fq("state_rt_q.qsp");
  write_state_snapshot("state_rt", st);
  const SymmetricState back = read_state_snapshot("state_rt", mc);
  REQUIRE(back.t == st.t);
  // collocation -> file -> spectral costs one transform pair of rounding
  double worst = 0.0;
  for (std::size_t i = 0; i < st.r.points(); ++i) {
    worst = std::max(worst, std::abs(back.r.at(0, i) - st.r.at(0, i)));
    for (int c = 0; c < g.dim; ++c) worst = std::max(worst, std::abs(back.u.at(c, i) - st.u.at(c, i)));
    for (int c = 0; c < 9; ++c) worst = std::max(worst, std::abs(back.Q.at(c, i) - st.Q.at(c, i)));
  }
  REQUIRE(worst <= 1e-13);
}

TEST_CASE("state snapshot writes identical bytes across runs") {
  const TorusGrid g(2, 8);
  const MaterialConstants mc;
  const SymmetricState st = testutil::random_state(g, mc, 2.0, 0.05, 0.1, 0.05, 78);
  TempFile a1("det_a_r.qsp"), a2("det_a_u.qsp"), a3("det_a_q.qsp");
  TempFile b1("det_b_r.qsp"), b2("det_b_u.qsp"), b3("det_b_q.qsp");
  write_state_snapshot("det_a", st);
  write_state_snapshot("det_b", st);
  for (const char* suffix : {"_r.qsp", "_u.qsp", "_q.qsp"}) {
    std::ifstream ia(std::string("det_a") + suffix, std::ios::binary);
    std::ifstream ib(std::string("det_b") + suffix, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(ia)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(ib)), std::istreambuf_iterator<char>());
    REQUIRE(ba == bb);
    REQUIRE_FALSE(ba.empty());
  }
}

TEST_CASE("path dump round trips the realized increments") {
  const WienerPath wp(123, 5, 1e-3, 0.01);
  TempFile tmp("path_dump.qsp");
  write_path_dump(tmp.name, wp);
  const PathDump d = read_path_dump(tmp.name);
  REQUIRE(d.dt == wp.dt());
  REQUIRE(d.steps == wp.steps());
  REQUIRE(d.modes == wp.k_modes);
  for (std::uint64_t s = 0; s < d.steps; ++s)
    for (int k = 0; k < d.modes; ++k) REQUIRE(d.at(s, k) == wp.increment(k, s));

  SECTION("path reader refuses a field snapshot") {
    const TorusGrid g(2, 8);
    TempFile f("field_for_path.qsp");
    write_snapshot(f.name, RealField(g, 1), 0.0);
    REQUIRE_THROWS_AS(read_path_dump(f.name), std::runtime_error);
  }
}
