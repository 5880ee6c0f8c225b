// Command-line front end: simulate / audit / converge / report.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qspde/experiments.hpp"
#include "qspde/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;  // < 0 keeps the config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key-value config file")->required();
  cmd->add_option("--seed", args.seed, "override noise.seed");
  cmd->add_option("--out", args.out_dir, "override io.out output directory");
}

// Everything up to and including spec construction counts as configuration;
// errors here exit with the config status, not the runtime one.
qspde::ExperimentSpec load_spec(const CommonArgs& args) {
  qspde::Config cfg = qspde::Config::load(args.config_path);
  if (args.seed >= 0) cfg.set("noise.seed", std::to_string(args.seed));
  if (!args.out_dir.empty()) cfg.set("io.out", args.out_dir);
  return qspde::spec_from_config(cfg);
}

void print_audit(const qspde::AuditRecord& rec) {
  std::cout << "audit " << rec.kind << ": " << (rec.pass ? "pass" : "FAIL") << "\n";
  std::cout << "  " << rec.summary << "\n";
  for (const auto& [key, value] : rec.metrics)
    std::cout << "  " << key << " = " << short_num(value) << "\n";
  if (!rec.file.empty()) std::cout << "  report: " << rec.file << "\n";
}

void print_manifest_summary(const qspde::RunManifest& mf, const std::string& out_dir) {
  for (const auto& t : mf.trajectories) {
    std::cout << "trajectory " << t.index << ": " << t.status;
    if (t.status == "stopped")
      std::cout << " (" << t.stop_criterion << " at level "
                << short_num(t.stop_level) << ", t = "
                << short_num(t.final_time) << ")";
    else if (t.status == "failed")
      std::cout << " (" << t.error << ")";
    else
      std::cout << " (t = " << short_num(t.final_time) << ")";
    std::cout << "\n";
  }
  for (const auto& a : mf.audits) print_audit(a);
  std::cout << "manifest: " << out_dir << "/" << mf.name << "_manifest.json\n";
}

int cmd_simulate(const CommonArgs& args) {
  qspde::ExperimentSpec spec;
  try {
    spec = load_spec(args);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    const qspde::RunManifest mf = qspde::run_experiment(spec);
    print_manifest_summary(mf, spec.out_dir);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int cmd_audit(const CommonArgs& args, const std::string& kind) {
  qspde::ExperimentSpec spec;
  try {
    spec = load_spec(args);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    const bool sample_kind = kind == "commutator" || kind == "moser" || kind == "composition";
    if (sample_kind) {
      // Field-tuple audits need no trajectories.
      std::filesystem::create_directories(spec.out_dir);
      print_audit(qspde::detail::audit_samples_batch(spec, kind));
      return kOk;
    }
    spec.audits = {kind};
    const qspde::RunManifest mf = qspde::run_experiment(spec);
    print_manifest_summary(mf, spec.out_dir);
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int cmd_converge(const CommonArgs& args) {
  qspde::ExperimentSpec spec;
  try {
    spec = load_spec(args);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    qspde::ConvergenceReport rep;
    try {
      rep = qspde::convergence_study(spec);
    } catch (const qspde::ConfigError& e) {
      // Ladder validation happens after the file parses, but it is still a
      // configuration problem.
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }
    for (const auto& lv : rep.levels)
      std::cout << "dt = " << short_num(lv.dt)
                << "  error = " << short_num(lv.error) << "\n";
    if (!rep.monotone)
      std::cout << "errors are not monotone in dt; no order claimed\n";
    else if (rep.order)
      std::cout << "observed order " << short_num(*rep.order) << "\n";
    else if (!rep.ratios.empty())
      std::cout << "error ratio " << short_num(rep.ratios.back())
                << " (too few levels for a slope)\n";
    const qspde::RunManifest mf = qspde::convergence_manifest(spec, rep);
    std::cout << "manifest: " << spec.out_dir << "/" << mf.name << "_manifest.json\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int cmd_report(const std::string& manifest_path, std::string out_dir) {
  qspde::RunManifest mf;
  try {
    mf = qspde::read_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    if (out_dir.empty()) {
      out_dir = std::filesystem::path(manifest_path).parent_path().string();
      if (out_dir.empty()) out_dir = ".";
    }
    const qspde::ReportResult res = qspde::emit_plots(mf, out_dir);
    std::cout << "emitted " << res.emitted.size() << " plot(s)";
    if (!res.missing.empty()) std::cout << ", " << res.missing.size() << " input(s) missing";
    std::cout << "\n";
    for (const auto& f : res.missing) std::cout << "  missing: " << f << "\n";
    std::cout << "report: " << res.report_file << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudospectral Galerkin solver for a stochastic compressible nematic model"};
  app.set_version_flag("--version", qspde::kCodeVersion);
  app.require_subcommand(1);

  CommonArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run trajectories and configured audits");
  add_common(sim, sim_args);

  CommonArgs audit_args;
  std::string audit_kind;
  CLI::App* audit = app.add_subcommand("audit", "run one audit and emit its CSV report");
  add_common(audit, audit_args);
  audit
      ->add_option("--kind", audit_kind,
                   "one of: commutator, moser, composition, lower-bound, energy, moments")
      ->required()
      ->check(CLI::IsMember(
          {"commutator", "moser", "composition", "lower-bound", "energy", "moments"}));

  CommonArgs conv_args;
  CLI::App* conv = app.add_subcommand("converge", "self-convergence study over a dt ladder");
  add_common(conv, conv_args);

  std::string manifest_path, report_out;
  CLI::App* report = app.add_subcommand("report", "emit SVG plots from a manifest");
  report->add_option("--manifest", manifest_path, "manifest json produced by a run")->required();
  report->add_option("--out", report_out, "output directory (default: next to the manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (sim->parsed()) return cmd_simulate(sim_args);
  if (audit->parsed()) return cmd_audit(audit_args, audit_kind);
  if (conv->parsed()) return cmd_converge(conv_args);
  if (report->parsed()) return cmd_report(manifest_path, report_out);
  return kConfigError;
}
