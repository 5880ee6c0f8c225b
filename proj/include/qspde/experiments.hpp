#pragma once

// Experiment orchestration: initial-condition recipes, trajectory batches
// over a worker pool, post-run audits, convergence studies, and manifests
// that pin down everything needed to reproduce a run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qspde/config.hpp"
#include "qspde/diagnostics.hpp"
#include "qspde/generators.hpp"
#include "qspde/ledger.hpp"
#include "qspde/snapshot.hpp"
#include "qspde/solver.hpp"

namespace qspde {

inline constexpr const char* kCodeVersion = "0.1.0";

namespace detail {

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return hex64(h);
}

inline std::string num_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Names become file prefixes, so keep them path-safe.
inline bool valid_experiment_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline double state_sup_diff(const SymmetricState& a, const SymmetricState& b) {
  return std::max({sup_coeff_diff(a.r, b.r), sup_coeff_diff(a.u, b.u), sup_coeff_diff(a.Q, b.Q)});
}

// Worker count: QSPDE_THREADS if set, else the hardware count, capped by jobs.
inline int worker_count(int jobs) {
  int n = 0;
  if (const char* env = std::getenv("QSPDE_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw ConfigError("QSPDE_THREADS must be a positive integer");
    n = static_cast<int>(v);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return std::max(1, std::min(n, jobs));
}

// Runs fn(0..jobs) on `workers` threads.  Jobs must not depend on execution
// order; the first escaped exception is rethrown after the pool drains.
template <typename Fn>
inline void parallel_for(int workers, int jobs, Fn&& fn) {
  if (jobs <= 0) return;
  if (workers <= 1 || jobs == 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, jobs); ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Named initial-condition generators.  `uniform` is the rest point at
// physical density rho0; `single-mode` excites one wavevector in u and in
// the first S0(3) coordinate of Q; `random` draws band-limited fields;
// `uniaxial` sets a constant Q = q (n x n - I/3).
struct InitialCondition {
  std::string kind = "uniform";
  double rho0 = 1.0;
  double amplitude = 0.0;    // velocity scale
  double r_amplitude = 0.0;  // density perturbation scale (random)
  double q_amplitude = 0.0;
  int mode[3] = {1, 0, 0};
  int axis = 0;  // velocity component carrying the single mode
  std::uint64_t seed = 1;
  int kmax = 3;
  double director[3] = {1.0, 0.0, 0.0};
};

inline double background_r(const MaterialConstants& mc, double rho0) {
  return std::sqrt(2.0 * mc.A * mc.gamma / (mc.gamma - 1.0)) *
         std::pow(rho0, 0.5 * (mc.gamma - 1.0));
}

namespace detail {

inline void add_single_mode_velocity(SymmetricState& st, const InitialCondition& ic,
                                     const TorusGrid& g) {
  if (ic.amplitude == 0.0) return;
  if (ic.axis < 0 || ic.axis >= g.dim)
    throw std::invalid_argument("InitialCondition: axis outside grid dimension");
  int k[3] = {ic.mode[0], ic.mode[1], g.dim == 3 ? ic.mode[2] : 0};
  if (k[0] == 0 && k[1] == 0 && k[2] == 0)
    throw std::invalid_argument("InitialCondition: single mode must be nonzero");
  // amplitude * sin(k x): coefficient -i/2 at +k.
  st.u.set_mode(ic.axis, k, std::complex<double>(0.0, -0.5 * ic.amplitude));
}

}  // namespace detail

inline SymmetricState make_initial_state(const InitialCondition& ic, const TorusGrid& g,
                                         const MaterialConstants& mc) {
  if (ic.kind == "uniform") return SymmetricState::uniform(g, mc, ic.rho0);
  if (ic.kind == "single-mode") {
    SymmetricState st = SymmetricState::uniform(g, mc, ic.rho0);
    detail::add_single_mode_velocity(st, ic, g);
    if (ic.q_amplitude != 0.0) {
      int k[3] = {ic.mode[0], ic.mode[1], g.dim == 3 ? ic.mode[2] : 0};
      if (k[0] == 0 && k[1] == 0 && k[2] == 0)
        throw std::invalid_argument("InitialCondition: single mode must be nonzero");
      SpectralField coords(g, 5);
      // q_amplitude * cos(k x) on the first S0(3) basis direction.
      coords.set_mode(0, k, std::complex<double>(0.5 * ic.q_amplitude, 0.0));
      st.Q = expand_s03(coords);
    }
    return st;
  }
  if (ic.kind == "random")
    return random_state(g, mc, background_r(mc, ic.rho0), ic.r_amplitude, ic.amplitude,
                        ic.q_amplitude, ic.seed, ic.kmax);
  if (ic.kind == "uniaxial") {
    SymmetricState st = SymmetricState::uniform(g, mc, ic.rho0);
    detail::add_single_mode_velocity(st, ic, g);
    const double len = std::sqrt(ic.director[0] * ic.director[0] + ic.director[1] * ic.director[1] +
                                 ic.director[2] * ic.director[2]);
    if (!(len > 0.0)) throw std::invalid_argument("InitialCondition: zero director");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        m(i, j) = ic.q_amplitude * (ic.director[i] * ic.director[j] / (len * len) -
                                    (i == j ? 1.0 / 3.0 : 0.0));
    const QTensor q = project_S03(m);
    int k0[3] = {0, 0, 0};
    for (int c = 0; c < 9; ++c) st.Q.set_mode(c, k0, q.a[static_cast<std::size_t>(c)]);
    return st;
  }
  throw std::invalid_argument("InitialCondition: unknown kind '" + ic.kind + "'");
}

inline const std::vector<std::string>& known_audit_kinds() {
  static const std::vector<std::string> kinds = {"commutator", "moser",  "composition",
                                                "lower-bound", "energy", "moments",
                                                "freeze",      "uniqueness"};
  return kinds;
}

struct ExperimentSpec {
  std::string name = "run";
  TorusGrid grid{2, 32};
  MaterialConstants consts{};
  SolverConfig solver{};
  InitialCondition ic{};
  std::uint64_t noise_seed = 0;
  int paths = 1;
  double moment_p = 1.0;
  std::vector<std::string> audits;
  std::string out_dir = "out";
  bool write_snapshots = true;
  // estimate-audit ensembles
  int audit_samples = 50;
  int audit_s = 3;
  int audit_kmax = 3;
  std::uint64_t audit_seed = 7;
  double audit_range = 4.0;
  double audit_amplitude = 1.0;
  double audit_r_amplitude = 0.1;
  double uniqueness_tol = 1e-8;
  // convergence studies
  std::vector<double> dt_ladder = {4e-3, 2e-3, 1e-3, 5e-4};
  double ref_dt = 1.25e-4;
  int converge_paths = 1;
};

namespace detail {

inline std::uint64_t config_seed(const Config& cfg, const std::string& key, std::uint64_t fallback) {
  const long long v = cfg.get_int(key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError("config key " + key + ": seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

inline InitialCondition ic_from_config(const Config& cfg, const TorusGrid& g) {
  InitialCondition ic;
  ic.kind = cfg.get_string("ic.kind", ic.kind);
  ic.rho0 = cfg.get_double("ic.rho0", ic.rho0);
  ic.amplitude = cfg.get_double("ic.amplitude", ic.amplitude);
  ic.r_amplitude = cfg.get_double("ic.r_amplitude", ic.r_amplitude);
  ic.q_amplitude = cfg.get_double("ic.q_amplitude", ic.q_amplitude);
  if (cfg.has("ic.mode")) {
    const auto m = cfg.get_int_list("ic.mode");
    if (m.size() != static_cast<std::size_t>(g.dim))
      throw ConfigError("config key ic.mode: expected " + std::to_string(g.dim) + " entries");
    for (std::size_t i = 0; i < m.size(); ++i) ic.mode[i] = static_cast<int>(m[i]);
    if (g.dim == 2) ic.mode[2] = 0;
  }
  ic.axis = detail::config_int(cfg, "ic.axis", ic.axis);
  ic.seed = detail::config_seed(cfg, "ic.seed", ic.seed);
  ic.kmax = detail::config_int(cfg, "ic.kmax", ic.kmax);
  if (cfg.has("ic.director")) {
    const auto d = cfg.get_list("ic.director");
    if (d.size() != 3) throw ConfigError("config key ic.director: expected 3 entries");
    for (int i = 0; i < 3; ++i) ic.director[i] = d[static_cast<std::size_t>(i)];
  }
  const bool known = ic.kind == "uniform" || ic.kind == "single-mode" || ic.kind == "random" ||
                     ic.kind == "uniaxial";
  if (!known)
    throw ConfigError(
        "config key ic.kind: unknown kind '" + ic.kind +
        "' (expected uniform, single-mode, random, or uniaxial)");
  return ic;
}

// Builds the full experiment from a config and rejects unconsumed keys.
inline ExperimentSpec spec_from_config(const Config& cfg) {
  ExperimentSpec spec;
  spec.grid = grid_from_config(cfg);
  spec.consts = material_from_config(cfg);
  spec.solver = solver_from_config(cfg);
  spec.ic = ic_from_config(cfg, spec.grid);
  spec.name = cfg.get_string("experiment.name", spec.name);
  if (!detail::valid_experiment_name(spec.name))
    throw ConfigError("config key experiment.name: must match [A-Za-z0-9_-]+");
  spec.out_dir = cfg.get_string("io.out", spec.out_dir);
  spec.write_snapshots = cfg.get_bool("io.snapshots", spec.write_snapshots);
  spec.noise_seed = detail::config_seed(cfg, "noise.seed", spec.noise_seed);
  spec.paths = detail::config_int(cfg, "ensemble.paths", spec.paths);
  if (spec.paths < 1) throw ConfigError("config key ensemble.paths: must be >= 1");
  spec.moment_p = cfg.get_double("ensemble.p", spec.moment_p);
  if (!(spec.moment_p > 0.0)) throw ConfigError("config key ensemble.p: must be > 0");
  if (cfg.has("audits")) {
    spec.audits = cfg.get_names("audits");
    for (const auto& a : spec.audits) {
      const auto& kinds = known_audit_kinds();
      if (std::find(kinds.begin(), kinds.end(), a) == kinds.end())
        throw ConfigError("config key audits: unknown audit '" + a + "'");
    }
  }
  spec.audit_samples = detail::config_int(cfg, "audit.samples", spec.audit_samples);
  if (spec.audit_samples < 1) throw ConfigError("config key audit.samples: must be >= 1");
  spec.audit_s = detail::config_int(cfg, "audit.s", spec.audit_s);
  spec.audit_kmax = detail::config_int(cfg, "audit.kmax", spec.audit_kmax);
  spec.audit_seed = detail::config_seed(cfg, "audit.seed", spec.audit_seed);
  spec.audit_range = cfg.get_double("audit.range", spec.audit_range);
  spec.audit_amplitude = cfg.get_double("audit.amplitude", spec.audit_amplitude);
  spec.audit_r_amplitude = cfg.get_double("audit.r_amplitude", spec.audit_r_amplitude);
  spec.uniqueness_tol = cfg.get_double("audit.uniqueness_tol", spec.uniqueness_tol);
  if (cfg.has("converge.dts")) spec.dt_ladder = cfg.get_list("converge.dts");
  spec.ref_dt = cfg.get_double("converge.ref_dt", spec.ref_dt);
  spec.converge_paths = detail::config_int(cfg, "converge.paths", spec.converge_paths);
  if (spec.converge_paths < 1) throw ConfigError("config key converge.paths: must be >= 1");
  cfg.require_all_used();
  return spec;
}

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += num_str(v[i]);
  }
  return out;
}

}  // namespace detail

// Every effective key-value pair, defaults included, so a manifest pins the
// entire configuration.
inline std::map<std::string, std::string> spec_to_keys(const ExperimentSpec& spec) {
  using detail::num_str;
  std::map<std::string, std::string> k;
  k["experiment.name"] = spec.name;
  k["grid.dim"] = std::to_string(spec.grid.dim);
  k["grid.N"] = std::to_string(spec.grid.n);
  k["grid.dealias"] = num_str(spec.grid.dealias_fraction);
  k["phys.A"] = num_str(spec.consts.A);
  k["phys.gamma"] = num_str(spec.consts.gamma);
  k["phys.upsilon"] = num_str(spec.consts.upsilon);
  k["phys.lambda"] = num_str(spec.consts.lambda);
  k["phys.L"] = num_str(spec.consts.L);
  k["phys.Gamma"] = num_str(spec.consts.Gamma);
  k["phys.a"] = num_str(spec.consts.a);
  k["phys.b"] = num_str(spec.consts.b);
  k["phys.c"] = num_str(spec.consts.c);
  k["solver.dt"] = num_str(spec.solver.dt);
  k["solver.T"] = num_str(spec.solver.horizon);
  k["solver.scheme"] = spec.solver.scheme == TimeScheme::euler ? "euler" : "exp_euler";
  k["solver.galerkin_m"] = std::to_string(spec.solver.galerkin.m);
  k["solver.fp_iters"] = std::to_string(spec.solver.fixed_point.max_iters);
  k["solver.fp_tol"] = num_str(spec.solver.fixed_point.tol);
  k["solver.density_floor"] = num_str(spec.solver.density_floor);
  if (!spec.solver.stop_levels.empty())
    k["solver.stop_levels"] = detail::join_doubles(spec.solver.stop_levels);
  k["solver.ledger_s"] = std::to_string(spec.solver.ledger_s);
  k["solver.save_every"] = std::to_string(spec.solver.save_every);
  k["cutoff.R"] = num_str(spec.solver.cutoff.R);
  k["cutoff.order"] = std::to_string(spec.solver.cutoff.order);
  k["clamp.K"] = num_str(spec.solver.clamp.K);
  switch (spec.solver.noise.kind) {
    case NoiseKind::off:
      k["noise.kind"] = "off";
      break;
    case NoiseKind::diagonal_multiplicative:
      k["noise.kind"] = "diagonal";
      break;
    case NoiseKind::custom_table:
      k["noise.kind"] = "table";
      break;
  }
  k["noise.sigma"] = num_str(spec.solver.noise.sigma);
  k["noise.modes"] = std::to_string(spec.solver.noise.modes);
  k["noise.beta"] = num_str(spec.solver.noise.beta);
  if (!spec.solver.noise.table.empty())
    k["noise.table"] = detail::join_doubles(spec.solver.noise.table);
  k["noise.seed"] = std::to_string(spec.noise_seed);
  k["dynamics.stress_grouping"] =
      spec.solver.dynamics.grouping == StressGrouping::direct ? "direct" : "energy";
  k["ic.kind"] = spec.ic.kind;
  k["ic.rho0"] = num_str(spec.ic.rho0);
  k["ic.amplitude"] = num_str(spec.ic.amplitude);
  k["ic.r_amplitude"] = num_str(spec.ic.r_amplitude);
  k["ic.q_amplitude"] = num_str(spec.ic.q_amplitude);
  {
    std::string mode = std::to_string(spec.ic.mode[0]) + "," + std::to_string(spec.ic.mode[1]);
    if (spec.grid.dim == 3) mode += "," + std::to_string(spec.ic.mode[2]);
    k["ic.mode"] = mode;
  }
  k["ic.axis"] = std::to_string(spec.ic.axis);
  k["ic.seed"] = std::to_string(spec.ic.seed);
  k["ic.kmax"] = std::to_string(spec.ic.kmax);
  k["ic.director"] = detail::join_doubles(
      {spec.ic.director[0], spec.ic.director[1], spec.ic.director[2]});
  if (!spec.audits.empty()) {
    std::string a;
    for (std::size_t i = 0; i < spec.audits.size(); ++i) {
      if (i > 0) a += ",";
      a += spec.audits[i];
    }
    k["audits"] = a;
  }
  k["io.out"] = spec.out_dir;
  k["io.snapshots"] = spec.write_snapshots ? "true" : "false";
  k["ensemble.paths"] = std::to_string(spec.paths);
  k["ensemble.p"] = num_str(spec.moment_p);
  k["audit.samples"] = std::to_string(spec.audit_samples);
  k["audit.s"] = std::to_string(spec.audit_s);
  k["audit.kmax"] = std::to_string(spec.audit_kmax);
  k["audit.seed"] = std::to_string(spec.audit_seed);
  k["audit.range"] = num_str(spec.audit_range);
  k["audit.amplitude"] = num_str(spec.audit_amplitude);
  k["audit.r_amplitude"] = num_str(spec.audit_r_amplitude);
  k["audit.uniqueness_tol"] = num_str(spec.uniqueness_tol);
  k["converge.dts"] = detail::join_doubles(spec.dt_ladder);
  k["converge.ref_dt"] = num_str(spec.ref_dt);
  k["converge.paths"] = std::to_string(spec.converge_paths);
  return k;
}

inline std::string canonical_config_text(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& [key, value] : spec_to_keys(spec)) out += key + " = " + value + "\n";
  return out;
}

inline std::string spec_hash(const ExperimentSpec& spec) {
  const std::string text = canonical_config_text(spec);
  return detail::hex64(detail::fnv1a64(text.data(), text.size()));
}

struct TrajectoryRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::string status = "completed";  // completed | stopped | failed
  std::string stop_criterion;
  double stop_level = 0.0;
  double final_time = 0.0;
  std::string ledger_file;
  std::string ledger_hash;
  std::string error;
};

struct AuditRecord {
  std::string kind;
  bool pass = false;
  std::string summary;
  std::map<std::string, double> metrics;
  std::string file;
};

struct RunManifest {
  std::string name;
  std::string spec_hash;
  std::string code_version;
  std::uint64_t base_seed = 0;
  int threads = 1;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> config;
  std::vector<std::string> files;
  std::vector<TrajectoryRecord> trajectories;
  std::vector<AuditRecord> audits;

  bool all_passed() const {
    for (const auto& t : trajectories)
      if (t.status == "failed") return false;
    for (const auto& a : audits)
      if (!a.pass) return false;
    return true;
  }
};

inline void write_manifest(const RunManifest& mf, const std::string& path) {
  nlohmann::json j;
  j["name"] = mf.name;
  j["spec_hash"] = mf.spec_hash;
  j["code_version"] = mf.code_version;
  j["base_seed"] = mf.base_seed;
  j["threads"] = mf.threads;
  j["wall_seconds"] = mf.wall_seconds;
  j["config"] = mf.config;
  j["files"] = mf.files;
  j["trajectories"] = nlohmann::json::array();
  for (const auto& t : mf.trajectories) {
    nlohmann::json e;
    e["index"] = t.index;
    e["seed"] = t.seed;
    e["status"] = t.status;
    e["stop_criterion"] = t.stop_criterion;
    e["stop_level"] = t.stop_level;
    e["final_time"] = t.final_time;
    e["ledger_file"] = t.ledger_file;
    e["ledger_hash"] = t.ledger_hash;
    e["error"] = t.error;
    j["trajectories"].push_back(e);
  }
  j["audits"] = nlohmann::json::array();
  for (const auto& a : mf.audits) {
    nlohmann::json e;
    e["kind"] = a.kind;
    e["pass"] = a.pass;
    e["summary"] = a.summary;
    e["metrics"] = a.metrics;
    e["file"] = a.file;
    j["audits"].push_back(e);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad manifest " + path + ": " + e.what());
  }
  RunManifest mf;
  mf.name = j.value("name", "");
  mf.spec_hash = j.value("spec_hash", "");
  mf.code_version = j.value("code_version", "");
  mf.base_seed = j.value("base_seed", std::uint64_t{0});
  mf.threads = j.value("threads", 1);
  mf.wall_seconds = j.value("wall_seconds", 0.0);
  if (j.contains("config")) mf.config = j["config"].get<std::map<std::string, std::string>>();
  if (j.contains("files")) mf.files = j["files"].get<std::vector<std::string>>();
  for (const auto& e : j.value("trajectories", nlohmann::json::array())) {
    TrajectoryRecord t;
    t.index = e.value("index", 0);
    t.seed = e.value("seed", std::uint64_t{0});
    t.status = e.value("status", "");
    t.stop_criterion = e.value("stop_criterion", "");
    t.stop_level = e.value("stop_level", 0.0);
    t.final_time = e.value("final_time", 0.0);
    t.ledger_file = e.value("ledger_file", "");
    t.ledger_hash = e.value("ledger_hash", "");
    t.error = e.value("error", "");
    mf.trajectories.push_back(t);
  }
  for (const auto& e : j.value("audits", nlohmann::json::array())) {
    AuditRecord a;
    a.kind = e.value("kind", "");
    a.pass = e.value("pass", false);
    a.summary = e.value("summary", "");
    if (e.contains("metrics")) a.metrics = e["metrics"].get<std::map<std::string, double>>();
    a.file = e.value("file", "");
    mf.audits.push_back(a);
  }
  return mf;
}

namespace detail {

struct BatchResults {
  std::vector<std::vector<LedgerRow>> ledgers;
  std::vector<SymmetricState> finals;
  std::vector<char> usable;  // trajectory produced a ledger and final state
};

inline std::string out_path(const ExperimentSpec& spec, const std::string& suffix) {
  return spec.out_dir + "/" + spec.name + suffix;
}

inline AuditRecord audit_energy_batch(const ExperimentSpec& spec, const BatchResults& batch) {
  AuditRecord rec;
  rec.kind = "energy";
  std::string csv = "path,c_hat,min_slack,ok\n";
  double c_hat_max = 0.0, min_slack = 0.0;
  int checked = 0;
  bool all_ok = true;
  for (int p = 0; p < static_cast<int>(batch.ledgers.size()); ++p) {
    if (!batch.usable[static_cast<std::size_t>(p)] ||
        batch.ledgers[static_cast<std::size_t>(p)].size() < 2)
      continue;
    const LedgerCheck ck = energy_ledger_check(batch.ledgers[static_cast<std::size_t>(p)]);
    double path_min = ck.slack.empty() ? 0.0 : ck.slack.front();
    for (double s : ck.slack) path_min = std::min(path_min, s);
    csv += std::to_string(p) + "," + num_str(ck.c_hat) + "," + num_str(path_min) + "," +
           (ck.ok ? "1" : "0") + "\n";
    c_hat_max = std::max(c_hat_max, ck.c_hat);
    min_slack = checked == 0 ? path_min : std::min(min_slack, path_min);
    all_ok = all_ok && ck.ok;
    ++checked;
  }
  rec.metrics["c_hat_max"] = c_hat_max;
  rec.metrics["min_slack"] = min_slack;
  rec.metrics["paths_checked"] = checked;
  rec.pass = checked > 0 && all_ok;
  rec.summary = checked == 0 ? "no trajectory had enough ledger rows"
                             : "fitted C <= " + num_str(c_hat_max) + " with min slack " +
                                   num_str(min_slack) + " over " + std::to_string(checked) +
                                   " path(s)";
  rec.file = out_path(spec, "_audit_energy.csv");
  std::ofstream out(rec.file, std::ios::binary);
  out << csv;
  return rec;
}

inline AuditRecord audit_lower_bound_batch(const ExperimentSpec& spec, const BatchResults& batch) {
  AuditRecord rec;
  rec.kind = "lower-bound";
  std::string csv = "path,c_hat,c_env,violations\n";
  double c_hat_max = 0.0, c_env_max = 0.0;
  int checked = 0, skipped = 0, violations = 0;
  for (int p = 0; p < static_cast<int>(batch.ledgers.size()); ++p) {
    if (!batch.usable[static_cast<std::size_t>(p)]) continue;
    try {
      const LowerBoundFit fit = audit_lower_bound(batch.ledgers[static_cast<std::size_t>(p)],
                                                  spec.consts.gamma, spec.grid.dim);
      csv += std::to_string(p) + "," + num_str(fit.c_hat) + "," + num_str(fit.c_env) + "," +
             std::to_string(fit.violations) + "\n";
      c_hat_max = std::max(c_hat_max, fit.c_hat);
      c_env_max = std::max(c_env_max, fit.c_env);
      violations += fit.violations;
      ++checked;
    } catch (const std::invalid_argument&) {
      ++skipped;  // too few gated rows to fit a rate
    }
  }
  rec.metrics["c_hat_max"] = c_hat_max;
  rec.metrics["c_env_max"] = c_env_max;
  rec.metrics["violations"] = violations;
  rec.metrics["paths_checked"] = checked;
  rec.metrics["paths_skipped"] = skipped;
  rec.pass = checked > 0 && violations == 0;
  rec.summary = checked == 0
                    ? "no trajectory had enough gated rows"
                    : "fitted c <= " + num_str(c_hat_max) + ", " + std::to_string(violations) +
                          " envelope violation(s) over " + std::to_string(checked) + " path(s)";
  rec.file = out_path(spec, "_audit_lower_bound.csv");
  std::ofstream out(rec.file, std::ios::binary);
  out << csv;
  return rec;
}

inline AuditRecord audit_moments_batch(const ExperimentSpec& spec, const BatchResults& batch) {
  AuditRecord rec;
  rec.kind = "moments";
  std::vector<std::vector<LedgerRow>> usable;
  for (std::size_t p = 0; p < batch.ledgers.size(); ++p)
    if (batch.usable[p]) usable.push_back(batch.ledgers[p]);
  try {
    const MomentEstimate est = ensemble_moments(usable, spec.moment_p);
    rec.metrics["value"] = est.value;
    rec.metrics["stderr"] = est.stderr_;
    rec.metrics["paths"] = est.paths;
    rec.metrics["p"] = spec.moment_p;
    rec.pass = std::isfinite(est.value);
    // Expectation bounds cannot be certified pathwise; this is a statistical
    // estimate, not a per-path inequality.
    rec.summary = "E[(sup energy + int diss)^p] ~ " + num_str(est.value) + " +- " +
                  num_str(est.stderr_) + " over " + std::to_string(est.paths) +
                  " path(s); statistical estimate";
    rec.file = out_path(spec, "_audit_moments.csv");
    std::ofstream out(rec.file, std::ios::binary);
    out << "value,stderr,paths,p\n"
        << num_str(est.value) << "," << num_str(est.stderr_) << "," << est.paths << ","
        << num_str(spec.moment_p) << "\n";
  } catch (const std::exception& e) {
    rec.pass = false;
    rec.summary = e.what();
  }
  return rec;
}

inline AuditRecord audit_samples_batch(const ExperimentSpec& spec, const std::string& kind) {
  AuditRecord rec;
  rec.kind = kind;
  const int n = spec.audit_samples;
  const int workers = worker_count(n);
  try {
    if (kind == "composition") {
      std::vector<CompositionAudit> samples(static_cast<std::size_t>(n));
      parallel_for(workers, n, [&](int i) {
        const std::uint64_t s0 = spec.audit_seed + 5 * static_cast<std::uint64_t>(i);
        auto draw = [&](std::uint64_t seed) {
          SpectralField r = random_band_limited(spec.grid, 1, spec.audit_kmax,
                                                spec.audit_r_amplitude, seed);
          int k0[3] = {0, 0, 0};
          r.set_mode(0, k0, r.coeff(0, k0) + 2.0);
          return r;
        };
        samples[static_cast<std::size_t>(i)] = audit_composition_D(
            draw(s0), draw(s0 + 2), spec.audit_s, spec.consts, spec.audit_range);
      });
      const EstimateReport norm_rep = calibrate("composition-norm", n, [&](int i) {
        return samples[static_cast<std::size_t>(i)].norm_bound;
      });
      const EstimateReport diff_rep = calibrate("composition-diff", n, [&](int i) {
        return samples[static_cast<std::size_t>(i)].diff_bound;
      });
      std::string csv = "sample,norm_lhs,norm_rhs,norm_ratio,diff_lhs,diff_rhs,diff_ratio\n";
      for (int i = 0; i < n; ++i) {
        const auto& smp = samples[static_cast<std::size_t>(i)];
        csv += std::to_string(i) + "," + num_str(smp.norm_bound.lhs) + "," +
               num_str(smp.norm_bound.rhs) + "," + num_str(smp.norm_bound.ratio) + "," +
               num_str(smp.diff_bound.lhs) + "," + num_str(smp.diff_bound.rhs) + "," +
               num_str(smp.diff_bound.ratio) + "\n";
      }
      rec.metrics["norm_max_ratio"] = norm_rep.max_ratio;
      rec.metrics["norm_mean_ratio"] = norm_rep.mean_ratio;
      rec.metrics["diff_max_ratio"] = diff_rep.max_ratio;
      rec.metrics["diff_mean_ratio"] = diff_rep.mean_ratio;
      rec.metrics["degenerate"] = norm_rep.degenerate + diff_rep.degenerate;
      rec.metrics["samples"] = n;
      rec.pass = norm_rep.consistent && diff_rep.consistent;
      rec.summary = "calibrated C_norm <= " + num_str(norm_rep.max_ratio) + ", C_diff <= " +
                    num_str(diff_rep.max_ratio) + " over " + std::to_string(n) + " samples";
      rec.file = out_path(spec, "_audit_composition.csv");
      std::ofstream out(rec.file, std::ios::binary);
      out << csv;
      return rec;
    }
    std::vector<AuditSample> samples(static_cast<std::size_t>(n));
    const int comps = kind == "commutator" ? spec.grid.dim : 1;
    parallel_for(workers, n, [&](int i) {
      const std::uint64_t s0 = spec.audit_seed + 3 * static_cast<std::uint64_t>(i);
      const SpectralField u =
          random_band_limited(spec.grid, comps, spec.audit_kmax, spec.audit_amplitude, s0);
      const SpectralField v =
          random_band_limited(spec.grid, comps, spec.audit_kmax, spec.audit_amplitude, s0 + 1);
      samples[static_cast<std::size_t>(i)] = kind == "commutator"
                                                 ? audit_commutator(u, v, spec.audit_s)
                                                 : audit_moser(u, v, spec.audit_s);
    });
    const EstimateReport rep =
        calibrate(kind, n, [&](int i) { return samples[static_cast<std::size_t>(i)]; });
    std::string csv = "sample,lhs,rhs,ratio,degenerate\n";
    for (int i = 0; i < n; ++i) {
      const auto& smp = samples[static_cast<std::size_t>(i)];
      csv += std::to_string(i) + "," + num_str(smp.lhs) + "," + num_str(smp.rhs) + "," +
             num_str(smp.ratio) + "," + (smp.degenerate ? "1" : "0") + "\n";
    }
    rec.metrics["max_ratio"] = rep.max_ratio;
    rec.metrics["mean_ratio"] = rep.mean_ratio;
    rec.metrics["degenerate"] = rep.degenerate;
    rec.metrics["samples"] = n;
    rec.pass = rep.consistent;
    rec.summary = "calibrated C <= " + num_str(rep.max_ratio) + " over " + std::to_string(n) +
                  " samples (" + std::to_string(rep.degenerate) + " degenerate)";
    rec.file = out_path(spec, "_audit_" + kind + ".csv");
    std::ofstream out(rec.file, std::ios::binary);
    out << csv;
  } catch (const std::exception& e) {
    rec.pass = false;
    rec.summary = e.what();
    rec.file.clear();
  }
  return rec;
}

inline AuditRecord audit_freeze_batch(const ExperimentSpec& spec, const SymmetricState& init,
                                      const BatchResults& batch) {
  AuditRecord rec;
  rec.kind = "freeze";
  double worst_ru = 0.0, worst_q_rel = -1.0;
  int checked = 0;
  std::string csv = "path,ru_diff,q_rel_err\n";
  const bool heat_mode = spec.ic.kind == "single-mode" && spec.ic.q_amplitude != 0.0;
  double k2 = 0.0;
  for (int a = 0; a < spec.grid.dim; ++a)
    k2 += static_cast<double>(spec.ic.mode[a]) * static_cast<double>(spec.ic.mode[a]);
  double init_q_sup = 0.0;
  for (int c = 0; c < 9; ++c)
    for (std::size_t i = 0; i < init.Q.points(); ++i)
      init_q_sup = std::max(init_q_sup, std::abs(init.Q.at(c, i)));
  for (int p = 0; p < static_cast<int>(batch.finals.size()); ++p) {
    if (!batch.usable[static_cast<std::size_t>(p)]) continue;
    const SymmetricState& fin = batch.finals[static_cast<std::size_t>(p)];
    const double dr = sup_coeff_diff(fin.r, init.r);
    const double du = sup_coeff_diff(fin.u, init.u);
    const double ru = std::max(dr, du);
    double q_rel = -1.0;
    if (heat_mode && init_q_sup > 0.0) {
      const double decay =
          std::exp(-spec.consts.Gamma * spec.consts.L * k2 * (fin.t - init.t));
      double diff = 0.0;
      for (int c = 0; c < 9; ++c)
        for (std::size_t i = 0; i < fin.Q.points(); ++i)
          diff = std::max(diff, std::abs(fin.Q.at(c, i) - decay * init.Q.at(c, i)));
      q_rel = diff / (decay * init_q_sup);
      worst_q_rel = std::max(worst_q_rel, q_rel);
    }
    worst_ru = std::max(worst_ru, ru);
    csv += std::to_string(p) + "," + num_str(ru) + "," + num_str(q_rel) + "\n";
    ++checked;
  }
  rec.metrics["max_ru_diff"] = worst_ru;
  rec.metrics["max_q_rel_err"] = worst_q_rel;
  rec.metrics["paths_checked"] = checked;
  rec.pass = checked > 0 && worst_ru == 0.0 && (!heat_mode || worst_q_rel <= 1e-6);
  rec.summary = checked == 0
                    ? "no usable trajectories"
                    : "max |r,u drift| = " + num_str(worst_ru) +
                          (heat_mode ? ", Q heat-decay rel err = " + num_str(worst_q_rel) : "");
  rec.file = out_path(spec, "_audit_freeze.csv");
  std::ofstream out(rec.file, std::ios::binary);
  out << csv;
  return rec;
}

inline AuditRecord audit_uniqueness_batch(const ExperimentSpec& spec, const SymmetricState& init,
                                          const BatchResults& batch) {
  AuditRecord rec;
  rec.kind = "uniqueness";
  SolverConfig variant = spec.solver;
  variant.fixed_point.max_iters = std::max(3, spec.solver.fixed_point.max_iters + 2);
  variant.fixed_point.tol = 0.0;  // run every iteration so the variant differs
  std::string csv = "path,sup_diff\n";
  std::vector<double> diffs(batch.finals.size(), -1.0);
  const int jobs = static_cast<int>(batch.finals.size());
  parallel_for(worker_count(jobs), jobs, [&](int p) {
    if (!batch.usable[static_cast<std::size_t>(p)]) return;
    const WienerPath path(spec.noise_seed + static_cast<std::uint64_t>(p),
                          spec.solver.noise.modes, spec.solver.dt, spec.solver.horizon);
    const Trajectory tv = run(init, variant, path);
    diffs[static_cast<std::size_t>(p)] =
        state_sup_diff(tv.states.back(), batch.finals[static_cast<std::size_t>(p)]);
  });
  double worst = 0.0;
  int checked = 0;
  for (std::size_t p = 0; p < diffs.size(); ++p) {
    if (diffs[p] < 0.0) continue;
    csv += std::to_string(p) + "," + num_str(diffs[p]) + "\n";
    worst = std::max(worst, diffs[p]);
    ++checked;
  }
  rec.metrics["max_sup_diff"] = worst;
  rec.metrics["tol"] = spec.uniqueness_tol;
  rec.metrics["paths_checked"] = checked;
  rec.pass = checked > 0 && worst <= spec.uniqueness_tol;
  rec.summary = checked == 0 ? "no usable trajectories"
                             : "explicit vs iterated step differ by " + num_str(worst) +
                                   " (tol " + num_str(spec.uniqueness_tol) + ")";
  rec.file = out_path(spec, "_audit_uniqueness.csv");
  std::ofstream out(rec.file, std::ios::binary);
  out << csv;
  return rec;
}

}  // namespace detail

inline RunManifest run_experiment(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(spec.out_dir);

  const SymmetricState init = make_initial_state(spec.ic, spec.grid, spec.consts);

  RunManifest mf;
  mf.name = spec.name;
  mf.spec_hash = spec_hash(spec);
  mf.code_version = kCodeVersion;
  mf.base_seed = spec.noise_seed;
  mf.threads = detail::worker_count(spec.paths);
  mf.config = spec_to_keys(spec);

  if (spec.write_snapshots) {
    const std::string prefix = detail::out_path(spec, "_initial");
    write_state_snapshot(prefix, init);
    for (const char* c : {"_r.qsp", "_u.qsp", "_q.qsp"}) mf.files.push_back(prefix + c);
  }

  detail::BatchResults batch;
  batch.ledgers.resize(static_cast<std::size_t>(spec.paths));
  batch.finals.assign(static_cast<std::size_t>(spec.paths), init);
  batch.usable.assign(static_cast<std::size_t>(spec.paths), 0);
  std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(spec.paths));

  detail::parallel_for(mf.threads, spec.paths, [&](int p) {
    TrajectoryRecord rec;
    rec.index = p;
    rec.seed = spec.noise_seed + static_cast<std::uint64_t>(p);
    try {
      const WienerPath path(rec.seed, spec.solver.noise.modes, spec.solver.dt,
                            spec.solver.horizon);
      Trajectory tr = run(init, spec.solver, path);
      const std::string lf = detail::out_path(spec, "_p" + std::to_string(p) + "_ledger.csv");
      write_ledger_csv(lf, tr.ledger);
      rec.ledger_file = lf;
      rec.ledger_hash = detail::file_hash_hex(lf);
      rec.final_time = tr.times.back();
      if (tr.stopped) {
        rec.status = "stopped";
        rec.stop_criterion = tr.stop_criterion;
        rec.stop_level = tr.stop_level;
      }
      // A zero-horizon run ends where it starts; the initial snapshot covers it.
      if (spec.write_snapshots && spec.solver.horizon > 0.0)
        write_state_snapshot(detail::out_path(spec, "_p" + std::to_string(p) + "_final"),
                             tr.states.back());
      batch.ledgers[static_cast<std::size_t>(p)] = std::move(tr.ledger);
      batch.finals[static_cast<std::size_t>(p)] = tr.states.back();
      batch.usable[static_cast<std::size_t>(p)] = 1;
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
    }
    recs[static_cast<std::size_t>(p)] = std::move(rec);
  });

  for (auto& rec : recs) {
    if (!rec.ledger_file.empty()) mf.files.push_back(rec.ledger_file);
    if (spec.write_snapshots && spec.solver.horizon > 0.0 && rec.status != "failed") {
      const std::string prefix = detail::out_path(spec, "_p" + std::to_string(rec.index) + "_final");
      for (const char* c : {"_r.qsp", "_u.qsp", "_q.qsp"}) mf.files.push_back(prefix + c);
    }
    mf.trajectories.push_back(std::move(rec));
  }

  for (const std::string& kind : spec.audits) {
    AuditRecord rec;
    try {
      if (kind == "energy")
        rec = detail::audit_energy_batch(spec, batch);
      else if (kind == "lower-bound")
        rec = detail::audit_lower_bound_batch(spec, batch);
      else if (kind == "moments")
        rec = detail::audit_moments_batch(spec, batch);
      else if (kind == "freeze")
        rec = detail::audit_freeze_batch(spec, init, batch);
      else if (kind == "uniqueness")
        rec = detail::audit_uniqueness_batch(spec, init, batch);
      else
        rec = detail::audit_samples_batch(spec, kind);
    } catch (const std::exception& e) {
      rec.kind = kind;
      rec.pass = false;
      rec.summary = e.what();
    }
    if (!rec.file.empty()) mf.files.push_back(rec.file);
    mf.audits.push_back(std::move(rec));
  }

  mf.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(mf, detail::out_path(spec, "_manifest.json"));
  return mf;
}

struct ConvergenceLevel {
  double dt = 0.0;
  double error = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;  // sorted by decreasing dt
  double ref_dt = 0.0;
  int paths = 1;
  bool monotone = false;
  std::optional<double> order;  // least-squares slope, only when claimable
  std::vector<double> ratios;   // error[i] / error[i+1]
  std::string csv_file;
};

// Self-convergence against a fine reference solve on the same noise stream.
// Every ladder dt must be an integer multiple of ref_dt and divide the
// horizon; the reference and all levels must reach the horizon unstopped.
inline ConvergenceReport convergence_study(const ExperimentSpec& spec) {
  const std::vector<double>& raw = spec.dt_ladder;
  if (raw.size() < 2) throw ConfigError("convergence ladder needs at least 2 dt values");
  std::vector<double> ladder = raw;
  std::sort(ladder.begin(), ladder.end(), std::greater<double>());
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    if (ladder[i] == ladder[i + 1]) throw ConfigError("convergence ladder has duplicate dt");
  const double ref_dt = spec.ref_dt;
  if (!(ref_dt > 0.0) || ref_dt >= ladder.back())
    throw ConfigError("converge.ref_dt must be positive and smaller than every ladder dt");
  const double horizon = spec.solver.horizon;
  if (!(horizon > 0.0)) throw ConfigError("convergence study needs solver.T > 0");
  std::vector<int> factors;
  for (double dt : ladder) {
    const double fr = dt / ref_dt;
    const long long f = std::llround(fr);
    if (f < 1 || std::abs(fr - static_cast<double>(f)) > 1e-9 * fr)
      throw ConfigError("ladder dt " + detail::num_str(dt) +
                        " is not an integer multiple of ref_dt");
    const double steps = horizon / dt;
    if (std::abs(steps - std::llround(steps)) > 1e-9 * steps)
      throw ConfigError("ladder dt " + detail::num_str(dt) + " does not divide the horizon");
    factors.push_back(static_cast<int>(f));
  }

  const bool noise_on = spec.solver.noise.kind != NoiseKind::off;
  const int paths = noise_on ? spec.converge_paths : 1;
  const SymmetricState init = make_initial_state(spec.ic, spec.grid, spec.consts);

  std::vector<std::vector<double>> per_path(static_cast<std::size_t>(paths),
                                            std::vector<double>(ladder.size(), 0.0));
  detail::parallel_for(detail::worker_count(paths), paths, [&](int p) {
    const WienerPath base(spec.noise_seed + static_cast<std::uint64_t>(p),
                          spec.solver.noise.modes, ref_dt, horizon);
    SolverConfig rc = spec.solver;
    rc.dt = ref_dt;
    rc.save_every = 0;
    const Trajectory tref = run(init, rc, base);
    if (tref.stopped)
      throw std::runtime_error("convergence reference run stopped at t = " +
                               detail::num_str(tref.stop_time));
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      SolverConfig lc = spec.solver;
      lc.dt = ladder[l];
      lc.save_every = 0;
      const Trajectory tl = run(init, lc, base.coarsened(factors[l]));
      if (tl.stopped)
        throw std::runtime_error("convergence run at dt = " + detail::num_str(ladder[l]) +
                                 " stopped at t = " + detail::num_str(tl.stop_time));
      per_path[static_cast<std::size_t>(p)][l] =
          detail::state_sup_diff(tl.states.back(), tref.states.back());
    }
  });

  ConvergenceReport rep;
  rep.ref_dt = ref_dt;
  rep.paths = paths;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    double mean = 0.0;
    for (int p = 0; p < paths; ++p) mean += per_path[static_cast<std::size_t>(p)][l];
    rep.levels.push_back({ladder[l], mean / paths});
  }
  rep.monotone = true;
  for (std::size_t l = 0; l + 1 < rep.levels.size(); ++l) {
    const double e0 = rep.levels[l].error, e1 = rep.levels[l + 1].error;
    rep.ratios.push_back(e1 > 0.0 ? e0 / e1 : std::numeric_limits<double>::infinity());
    if (e1 > e0) rep.monotone = false;
  }
  bool positive = true;
  for (const auto& lv : rep.levels) positive = positive && lv.error > 0.0;
  if (rep.levels.size() >= 3 && rep.monotone && positive) {
    // Least-squares slope of log error against log dt.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(rep.levels.size());
    for (const auto& lv : rep.levels) {
      const double x = std::log(lv.dt), y = std::log(lv.error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }

  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  rep.csv_file = detail::out_path(spec, "_convergence.csv");
  std::ofstream out(rep.csv_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + rep.csv_file);
  out << "dt,error\n";
  for (const auto& lv : rep.levels)
    out << detail::num_str(lv.dt) << "," << detail::num_str(lv.error) << "\n";
  return rep;
}

// Wraps a convergence study in the manifest shape used by `report`.
inline RunManifest convergence_manifest(const ExperimentSpec& spec, const ConvergenceReport& rep) {
  RunManifest mf;
  mf.name = spec.name;
  mf.spec_hash = spec_hash(spec);
  mf.code_version = kCodeVersion;
  mf.base_seed = spec.noise_seed;
  mf.threads = detail::worker_count(rep.paths);
  mf.config = spec_to_keys(spec);
  mf.files.push_back(rep.csv_file);
  AuditRecord rec;
  rec.kind = "convergence";
  rec.pass = rep.monotone;
  rec.metrics["ref_dt"] = rep.ref_dt;
  rec.metrics["paths"] = rep.paths;
  rec.metrics["levels"] = static_cast<double>(rep.levels.size());
  if (rep.order) rec.metrics["order"] = *rep.order;
  if (!rep.ratios.empty()) rec.metrics["last_ratio"] = rep.ratios.back();
  if (!rep.monotone)
    rec.summary = "errors not monotone in dt; no order claimed";
  else if (rep.order)
    rec.summary = "observed order " + detail::num_str(*rep.order);
  else
    rec.summary = "error ratio " + detail::num_str(rep.ratios.empty() ? 0.0 : rep.ratios.back()) +
                  "; too few levels for a slope";
  rec.file = rep.csv_file;
  mf.audits.push_back(rec);
  write_manifest(mf, detail::out_path(spec, "_manifest.json"));
  return mf;
}

}  // namespace qspde
