#pragma once

// Report emission: SVG time-series and convergence plots generated straight
// from the CSV artifacts, plus a plain-text report listing what was emitted.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qspde/diagnostics.hpp"
#include "qspde/experiments.hpp"
#include "qspde/ledger.hpp"

namespace qspde {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

inline std::string tick_label(double v, bool log_axis) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", log_axis ? std::pow(10.0, v) : v);
  return buf;
}

struct AxisRange {
  double lo = 0.0, hi = 1.0;
  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

}  // namespace detail

// Minimal SVG line plot.  Log axes drop nonpositive points; a degenerate
// range is padded so single-valued series still render.
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series, bool logx = false,
                           bool logy = false, const std::string& annotation = "") {
  const double width = 800.0, height = 480.0;
  const double ml = 70.0, mr = 160.0, mt = 40.0, mb = 50.0;
  const double pw = width - ml - mr, ph = height - mt - mb;

  // Transformed points, series by series.
  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  bool any = false;
  detail::AxisRange xr, yr;
  bool first = true;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const std::size_t n = std::min(sr.x.size(), sr.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      double x = sr.x[i], y = sr.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (logx) {
        if (!(x > 0.0)) continue;
        x = std::log10(x);
      }
      if (logy) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (first) {
        xr.lo = xr.hi = x;
        yr.lo = yr.hi = y;
        first = false;
      } else {
        xr.widen(x);
        yr.widen(y);
      }
      pts[s].push_back({x, y});
      any = true;
    }
  }
  if (xr.hi - xr.lo < 1e-300) {
    xr.lo -= 0.5;
    xr.hi += 0.5;
  }
  if (yr.hi - yr.lo < 1e-300) {
    yr.lo -= 0.5;
    yr.hi += 0.5;
  }
  const auto px = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return mt + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << detail::xml_escape(title) << "</text>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    svg << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(fx) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::tick_label(fx, logx)
        << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\""
        << py(fy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << detail::tick_label(fy, logy)
        << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">" << detail::xml_escape(xlabel)
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << mt + ph / 2
      << ")\">" << detail::xml_escape(ylabel) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    if (!pts[s].empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : pts[s]) svg << px(x) << "," << py(y) << " ";
      svg << "\"/>\n";
    }
    const double ly = mt + 14 + 16.0 * static_cast<double>(s);
    svg << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw + 34
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly << "\" font-size=\"12\">"
        << detail::xml_escape(series[s].label) << "</text>\n";
  }
  if (!any)
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"14\">no data</text>\n";
  if (!annotation.empty())
    svg << "<text x=\"" << ml + pw - 8 << "\" y=\"" << mt + ph - 10
        << "\" text-anchor=\"end\" font-size=\"13\">" << detail::xml_escape(annotation)
        << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write plot: " + path);
  out << svg.str();
}

struct ReportResult {
  std::vector<std::string> emitted;
  std::vector<std::string> missing;
  std::string report_file;
};

namespace detail {

inline std::vector<ConvergenceLevel> read_convergence_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "dt,error")
    throw std::runtime_error("bad convergence header in " + path);
  std::vector<ConvergenceLevel> levels;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("bad convergence row in " + path);
    ConvergenceLevel lv;
    char* end = nullptr;
    lv.dt = std::strtod(line.substr(0, comma).c_str(), &end);
    lv.error = std::strtod(line.substr(comma + 1).c_str(), &end);
    levels.push_back(lv);
  }
  return levels;
}

}  // namespace detail

// Emits norms/residual plots per trajectory ledger and a log-log plot for
// any convergence CSV in the manifest, then a text report of the outcome.
// Missing ledgers are listed, not fatal.
inline ReportResult emit_plots(const RunManifest& mf, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportResult res;
  const std::string stem = out_dir + "/" + (mf.name.empty() ? "report" : mf.name);

  for (const auto& rec : mf.trajectories) {
    if (rec.ledger_file.empty()) continue;
    if (!fs::exists(rec.ledger_file)) {
      res.missing.push_back(rec.ledger_file);
      continue;
    }
    const std::vector<LedgerRow> rows = read_ledger_csv(rec.ledger_file);
    std::vector<double> t, r2, u2, q2, phi;
    for (const auto& row : rows) {
      t.push_back(row.t);
      r2.push_back(row.r_sq);
      u2.push_back(row.u_sq);
      q2.push_back(row.q_sq);
      phi.push_back(row.phi);
    }
    const std::string tag = "_p" + std::to_string(rec.index);
    const std::string norms_file = stem + tag + "_norms.svg";
    write_svg_plot(norms_file, mf.name + tag + ": norms and gate", "t", "value",
                   {{"|r|^2_s", t, r2}, {"|u|^2_s", t, u2}, {"|Q|^2_s", t, q2}, {"Phi", t, phi}});
    res.emitted.push_back(norms_file);
    if (rows.size() >= 2) {
      const LedgerCheck ck = energy_ledger_check(rows);
      std::vector<double> tt(t.begin(), t.end() - 1);
      const std::string resid_file = stem + tag + "_residuals.svg";
      write_svg_plot(resid_file, mf.name + tag + ": energy balance", "t", "value",
                     {{"residual", tt, ck.residual}, {"slack", tt, ck.slack}});
      res.emitted.push_back(resid_file);
    }
  }

  for (const auto& file : mf.files) {
    if (file.size() < 16 || file.substr(file.size() - 16) != "_convergence.csv") continue;
    if (!fs::exists(file)) {
      res.missing.push_back(file);
      continue;
    }
    const auto levels = detail::read_convergence_csv(file);
    std::vector<double> dts, errs;
    for (const auto& lv : levels) {
      dts.push_back(lv.dt);
      errs.push_back(lv.error);
    }
    std::string annotation;
    for (const auto& a : mf.audits)
      if (a.kind == "convergence" && a.metrics.count("order"))
        annotation = "observed order " + detail::tick_label(a.metrics.at("order"), false);
    const std::string conv_file = stem + "_convergence.svg";
    write_svg_plot(conv_file, mf.name + ": self-convergence", "dt", "error",
                   {{"sup error", dts, errs}}, true, true, annotation);
    res.emitted.push_back(conv_file);
  }

  res.report_file = stem + "_report.txt";
  std::ofstream out(res.report_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + res.report_file);
  out << "report for " << mf.name << "\n";
  out << "emitted " << res.emitted.size() << " plot(s)\n";
  for (const auto& f : res.emitted) out << "  emitted: " << f << "\n";
  for (const auto& f : res.missing) out << "  missing: " << f << "\n";
  for (const auto& a : mf.audits)
    out << "audit " << a.kind << ": " << (a.pass ? "pass" : "fail") << " (" << a.summary << ")\n";
  return res;
}

}  // namespace qspde
