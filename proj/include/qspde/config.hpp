#pragma once

// Flat key-value configuration files: one `section.key = value` per line,
// `#` starts a comment, blank lines are ignored. Typed accessors parse on
// demand and record which keys were read, so a run can reject keys nothing
// consumed (usually typos).

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qspde/grid.hpp"
#include "qspde/mat3.hpp"
#include "qspde/noise.hpp"
#include "qspde/solver.hpp"

namespace qspde {

// Configuration problems get their own type so the command line can map
// them to the config-error exit status, distinct from runtime failures.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool valid_config_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_';
    if (!ok) return false;
  }
  return true;
}

inline std::vector<std::string> split_commas(const std::string& key, const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string piece =
        trim(comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start));
    if (piece.empty()) throw ConfigError("config key " + key + ": empty list element");
    out.push_back(piece);
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

}  // namespace detail

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (!detail::valid_config_key(key))
        throw ConfigError("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
      if (value.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key +
                          "'");
      if (!cfg.values_.emplace(key, value).second)
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                          "'");
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  // Presence checks count as consumption: the caller considered the key.
  bool has(const std::string& key) const {
    touched_.insert(key);
    return values_.count(key) != 0;
  }

  // Programmatic override (command-line flags); does not mark the key used.
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const {
    touched_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const { return parse_int(key, get_string(key)); }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key) const {
    std::string v = get_string(key);
    for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError("config key " + key + ": expected a boolean, got '" + get_string(key) + "'");
  }

  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& piece : detail::split_commas(key, get_string(key)))
      out.push_back(parse_double(key, piece));
    return out;
  }

  std::vector<long long> get_int_list(const std::string& key) const {
    std::vector<long long> out;
    for (const std::string& piece : detail::split_commas(key, get_string(key)))
      out.push_back(parse_int(key, piece));
    return out;
  }

  std::vector<std::string> get_names(const std::string& key) const {
    return detail::split_commas(key, get_string(key));
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (touched_.count(k) == 0) out.push_back(k);
    return out;
  }

  void require_all_used() const {
    const auto leftover = unused_keys();
    if (leftover.empty()) return;
    std::string msg = "unrecognized config keys:";
    for (const auto& k : leftover) msg += " " + k;
    throw ConfigError(msg);
  }

 private:
  static double parse_double(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
      throw ConfigError("config key " + key + ": expected a number, got '" + text + "'");
    return v;
  }

  static long long parse_int(const std::string& key, const std::string& text) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
      throw ConfigError("config key " + key + ": expected an integer, got '" + text + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> touched_;
};

namespace detail {

inline int config_int(const Config& cfg, const std::string& key, int fallback) {
  const long long v = cfg.get_int(key, fallback);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError("config key " + key + ": value out of range");
  return static_cast<int>(v);
}

}  // namespace detail

inline TorusGrid grid_from_config(const Config& cfg) {
  const int dim = detail::config_int(cfg, "grid.dim", 2);
  const int n = detail::config_int(cfg, "grid.N", 32);
  const double dealias = cfg.get_double("grid.dealias", 2.0 / 3.0);
  return TorusGrid(dim, n, dealias);
}

inline MaterialConstants material_from_config(const Config& cfg) {
  MaterialConstants mc;
  mc.A = cfg.get_double("phys.A", mc.A);
  mc.gamma = cfg.get_double("phys.gamma", mc.gamma);
  mc.upsilon = cfg.get_double("phys.upsilon", mc.upsilon);
  mc.lambda = cfg.get_double("phys.lambda", mc.lambda);
  mc.L = cfg.get_double("phys.L", mc.L);
  mc.Gamma = cfg.get_double("phys.Gamma", mc.Gamma);
  mc.a = cfg.get_double("phys.a", mc.a);
  mc.b = cfg.get_double("phys.b", mc.b);
  mc.c = cfg.get_double("phys.c", mc.c);
  mc.validate();
  return mc;
}

inline NoiseModel noise_from_config(const Config& cfg) {
  NoiseModel nm;
  const std::string kind = cfg.get_string("noise.kind", "off");
  if (kind == "off")
    nm.kind = NoiseKind::off;
  else if (kind == "diagonal")
    nm.kind = NoiseKind::diagonal_multiplicative;
  else if (kind == "table")
    nm.kind = NoiseKind::custom_table;
  else
    throw ConfigError("config key noise.kind: unknown kind '" + kind +
                      "' (expected off, diagonal, or table)");
  nm.sigma = cfg.get_double("noise.sigma", nm.sigma);
  nm.modes = detail::config_int(cfg, "noise.modes", nm.modes);
  nm.beta = cfg.get_double("noise.beta", nm.beta);
  if (cfg.has("noise.table")) nm.table = cfg.get_list("noise.table");
  nm.validate();
  return nm;
}

inline SolverConfig solver_from_config(const Config& cfg) {
  SolverConfig sc;
  sc.dt = cfg.get_double("solver.dt", sc.dt);
  sc.horizon = cfg.get_double("solver.T", sc.horizon);
  const std::string scheme = cfg.get_string("solver.scheme", "euler");
  if (scheme == "euler")
    sc.scheme = TimeScheme::euler;
  else if (scheme == "exp_euler")
    sc.scheme = TimeScheme::exp_euler;
  else
    throw ConfigError("config key solver.scheme: unknown scheme '" + scheme +
                      "' (expected euler or exp_euler)");
  sc.galerkin.m = detail::config_int(cfg, "solver.galerkin_m", sc.galerkin.m);
  sc.fixed_point.max_iters = detail::config_int(cfg, "solver.fp_iters", sc.fixed_point.max_iters);
  sc.fixed_point.tol = cfg.get_double("solver.fp_tol", sc.fixed_point.tol);
  sc.cutoff = CutoffProfile(cfg.get_double("cutoff.R", 1.0), detail::config_int(cfg, "cutoff.order", 5));
  sc.clamp = ClampProfile(cfg.get_double("clamp.K", std::numeric_limits<double>::infinity()));
  sc.noise = noise_from_config(cfg);
  const std::string grouping = cfg.get_string("dynamics.stress_grouping", "direct");
  if (grouping == "direct")
    sc.dynamics.grouping = StressGrouping::direct;
  else if (grouping == "energy")
    sc.dynamics.grouping = StressGrouping::energy;
  else
    throw ConfigError("config key dynamics.stress_grouping: unknown grouping '" + grouping +
                      "' (expected direct or energy)");
  sc.density_floor = cfg.get_double("solver.density_floor", sc.density_floor);
  if (cfg.has("solver.stop_levels")) sc.stop_levels = cfg.get_list("solver.stop_levels");
  sc.ledger_s = detail::config_int(cfg, "solver.ledger_s", sc.ledger_s);
  sc.save_every = detail::config_int(cfg, "solver.save_every", sc.save_every);
  sc.validate();
  return sc;
}

}  // namespace qspde
