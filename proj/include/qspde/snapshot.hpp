#pragma once

// Binary field snapshots: magic "QSPDE1", then dim, grid size, component
// count as 8-byte little-endian integers, the time stamp as a little-endian
// float64, then per-component row-major float64 collocation values.  The
// same container stores Wiener path dumps, marked by dim = 0.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspde/field.hpp"
#include "qspde/noise.hpp"
#include "qspde/state.hpp"

namespace qspde {

namespace detail {

inline constexpr char kSnapshotMagic[6] = {'Q', 'S', 'P', 'D', 'E', '1'};

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline void put_f64_le(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64_le(os, bits);
}

inline double get_f64_le(std::istream& is) {
  const std::uint64_t bits = get_u64_le(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline void put_f64_block(std::ostream& os, const double* v, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) put_f64_le(os, v[i]);
  }
}

inline void get_f64_block(std::istream& is, double* v, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) v[i] = get_f64_le(is);
  }
}

inline void write_header(std::ostream& os, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                         double time) {
  os.write(kSnapshotMagic, 6);
  put_u64_le(os, a);
  put_u64_le(os, b);
  put_u64_le(os, c);
  put_f64_le(os, time);
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const RealField& f, double time) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  const TorusGrid& g = f.grid();
  detail::write_header(out, static_cast<std::uint64_t>(g.dim), static_cast<std::uint64_t>(g.n),
                       static_cast<std::uint64_t>(f.components()), time);
  detail::put_f64_block(out, f.raw().data(), f.raw().size());
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

struct Snapshot {
  RealField field;
  double time = 0.0;
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, detail::kSnapshotMagic, 6) != 0)
    throw std::runtime_error("read_snapshot: bad magic in " + path);
  const std::uint64_t dim = detail::get_u64_le(in);
  const std::uint64_t n = detail::get_u64_le(in);
  const std::uint64_t comps = detail::get_u64_le(in);
  const double time = detail::get_f64_le(in);
  if (!in) throw std::runtime_error("read_snapshot: truncated header in " + path);
  if (dim == 0) throw std::runtime_error("read_snapshot: " + path + " is a path dump, not a field");
  if (comps < 1 || comps > 1024) throw std::runtime_error("read_snapshot: bad component count in " + path);
  const TorusGrid g(static_cast<int>(dim), static_cast<int>(n));
  Snapshot s{RealField(g, static_cast<int>(comps)), time};
  detail::get_f64_block(in, s.field.raw().data(), s.field.raw().size());
  if (!in) throw std::runtime_error("read_snapshot: truncated payload in " + path);
  return s;
}

// State convenience wrappers: one file per field under a common prefix.
inline void write_state_snapshot(const std::string& prefix, const SymmetricState& st) {
  write_snapshot(prefix + "_r.qsp", st.r.to_collocation(), st.t);
  write_snapshot(prefix + "_u.qsp", st.u.to_collocation(), st.t);
  write_snapshot(prefix + "_q.qsp", st.Q.to_collocation(), st.t);
}

inline SymmetricState read_state_snapshot(const std::string& prefix, const MaterialConstants& mc) {
  const Snapshot r = read_snapshot(prefix + "_r.qsp");
  const Snapshot u = read_snapshot(prefix + "_u.qsp");
  const Snapshot q = read_snapshot(prefix + "_q.qsp");
  if (r.field.grid() != u.field.grid() || r.field.grid() != q.field.grid())
    throw std::runtime_error("read_state_snapshot: mismatched grids under " + prefix);
  if (r.time != u.time || r.time != q.time)
    throw std::runtime_error("read_state_snapshot: mismatched times under " + prefix);
  if (r.field.components() != 1 || u.field.components() != r.field.grid().dim ||
      q.field.components() != 9)
    throw std::runtime_error("read_state_snapshot: unexpected component counts under " + prefix);
  SymmetricState st(r.field.grid(), mc);
  st.r = SpectralField::from_collocation(r.field);
  st.u = SpectralField::from_collocation(u.field);
  st.Q = SpectralField::from_collocation(q.field);
  st.t = r.time;
  return st;
}

// Realized increments of a Wiener path at its own step width, step-major.
// Header reuse: dim slot 0, grid slot = step count, component slot = modes,
// time slot = step width.
inline void write_path_dump(const std::string& path, const WienerPath& wp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_path_dump: cannot open " + path);
  const std::uint64_t steps = wp.steps();
  detail::write_header(out, 0, steps, static_cast<std::uint64_t>(wp.k_modes), wp.dt());
  std::vector<double> row(static_cast<std::size_t>(wp.k_modes));
  for (std::uint64_t s = 0; s < steps; ++s) {
    for (int k = 0; k < wp.k_modes; ++k) row[static_cast<std::size_t>(k)] = wp.increment(k, s);
    detail::put_f64_block(out, row.data(), row.size());
  }
  if (!out) throw std::runtime_error("write_path_dump: write failed for " + path);
}

struct PathDump {
  double dt = 0.0;
  std::uint64_t steps = 0;
  int modes = 0;
  std::vector<double> increments;  // steps x modes, step-major

  double at(std::uint64_t step, int mode) const {
    return increments[static_cast<std::size_t>(step) * static_cast<std::size_t>(modes) +
                      static_cast<std::size_t>(mode)];
  }
};

inline PathDump read_path_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_path_dump: cannot open " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, detail::kSnapshotMagic, 6) != 0)
    throw std::runtime_error("read_path_dump: bad magic in " + path);
  const std::uint64_t marker = detail::get_u64_le(in);
  if (marker != 0) throw std::runtime_error("read_path_dump: " + path + " is a field snapshot");
  PathDump d;
  d.steps = detail::get_u64_le(in);
  d.modes = static_cast<int>(detail::get_u64_le(in));
  d.dt = detail::get_f64_le(in);
  if (!in || d.modes < 0) throw std::runtime_error("read_path_dump: truncated header in " + path);
  d.increments.resize(static_cast<std::size_t>(d.steps) * static_cast<std::size_t>(d.modes));
  detail::get_f64_block(in, d.increments.data(), d.increments.size());
  if (!in) throw std::runtime_error("read_path_dump: truncated payload in " + path);
  return d;
}

}  // namespace qspde
