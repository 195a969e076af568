#pragma once

// The five CLI commands. Each takes a parsed RunConfig, writes its outputs to
// config.output and returns a short human-readable log.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "elasto/cli/config.hpp"
#include "elasto/dpinit.hpp"
#include "elasto/io.hpp"
#include "elasto/metrics.hpp"
#include "elasto/phantom.hpp"
#include "elasto/solver/refine.hpp"
#include "elasto/strain.hpp"

namespace elasto::cli {

namespace fs = std::filesystem;

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> pre, post, field, strain, truth;
  /// "name=path" entries; replace inputs.reports when non-empty.
  std::vector<std::string> reports;
};

inline RunConfig apply(RunConfig c, const Overrides& o) {
  if (o.out) c.output = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.pre) c.inputs.pre = o.pre;
  if (o.post) c.inputs.post = o.post;
  if (o.field) c.inputs.field = o.field;
  if (o.strain) c.inputs.strain = o.strain;
  if (o.truth) c.inputs.truth = o.truth;
  if (!o.reports.empty()) {
    c.inputs.reports.clear();
    for (const auto& r : o.reports) {
      auto eq = r.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == r.size())
        throw ConfigError("--report expects name=path, got '" + r + "'");
      c.inputs.reports.push_back({r.substr(0, eq), r.substr(eq + 1)});
    }
  }
  return c;
}

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

inline fs::path prepare_output(const RunConfig& c, const std::string& command) {
  fs::path dir(c.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  write_text(dir / (command + ".config.json"), to_json(c).dump(2) + "\n");
  return dir;
}

inline const std::string& need(const std::optional<std::string>& v, const std::string& key) {
  if (!v) throw ConfigError("missing required input", "inputs." + key);
  return *v;
}

inline Json metric_json(const metrics::Metric& m) { return m ? Json(*m) : Json(nullptr); }

inline double axial_spacing(const RunConfig& c) {
  return c.phantom ? c.phantom->grid.geometry.axial_spacing_mm : FrameGeometry{}.axial_spacing_mm;
}

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

}  // namespace detail

/// Writes I1.rfe, I2.rfe, truth.dsp and truth.str.
inline std::string cmd_simulate(const RunConfig& c) {
  if (!c.phantom) throw ConfigError("missing required section", "phantom");
  const auto& p = *c.phantom;
  auto dir = detail::prepare_output(c, "simulate");
  auto pair = phantom::make_phantom_pair(p.model, p.grid, c.seed, p.psnr_db, p.render);
  io::write_frame(pair.pre, dir / "I1.rfe");
  io::write_frame(pair.post, dir / "I2.rfe");
  io::write_field(pair.truth.displacement, dir / "truth.dsp");
  io::write_strain(pair.truth.strain, dir / "truth.str");

  std::ostringstream log;
  log << "simulate: " << phantom::to_string(p.model.kind) << " " << p.grid.rows << "x" << p.grid.lines << ", "
      << pair.scatterers << " scatterers, seed " << c.seed << "\n";
  if (p.model.kind == phantom::ModelKind::layers || p.model.kind == phantom::ModelKind::thin_layer) {
    auto e = phantom::layer_strains(p.model);
    log << "layer strains:";
    for (double v : e) log << " " << detail::fmt(v);
    log << "\n";
  }
  double lo = INFINITY, hi = -INFINITY;
  for (double v : pair.truth.strain.values.data()) lo = std::min(lo, v), hi = std::max(hi, v);
  log << "truth strain range [" << detail::fmt(lo) << ", " << detail::fmt(hi) << "]\n";
  return log.str();
}

/// Writes prior.dsp, refined.dsp and trace.csv.
inline std::string cmd_estimate(const RunConfig& c) {
  auto pre = io::read_frame(detail::need(c.inputs.pre, "pre"));
  auto post = io::read_frame(detail::need(c.inputs.post, "post"));
  if (!pre.samples.same_shape(post.samples)) throw DomainError("I1 and I2 differ in shape");
  auto dir = detail::prepare_output(c, "estimate");

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto prior = dp::dp_estimate(pre, post, c.dp.resolved(pre));
  auto t1 = clock::now();
  auto r = solver::refine(pre, post, prior, c.solver.config);
  auto t2 = clock::now();

  io::write_field(prior, dir / "prior.dsp");
  io::write_field(r.field, dir / "refined.dsp");
  io::Column it{"iteration", {}}, cost{"cost", {}}, step{"max_step", {}};
  for (const auto& rec : r.trace) {
    it.values.push_back(rec.iteration);
    cost.values.push_back(rec.cost);
    step.values.push_back(rec.max_step);
  }
  io::write_csv({it, cost, step}, dir / "trace.csv");

  auto secs = [](auto d) { return std::chrono::duration<double>(d).count(); };
  std::ostringstream log;
  log << "estimate: " << (c.solver.preset ? solver::to_string(*c.solver.preset) : "custom") << ", "
      << pre.rows() << "x" << pre.lines() << ", " << r.trace.size() - 1 << " iteration(s), cost "
      << detail::fmt(r.trace.front().cost) << " -> " << detail::fmt(r.trace.back().cost) << "\n";
  log << "wall time: dp " << detail::fmt(secs(t1 - t0), 3) << " s, refine " << detail::fmt(secs(t2 - t1), 3)
      << " s\n";
  log << "peak memory: assembled system " << detail::fmt(r.peak_system_bytes / 1048576.0, 3) << " MiB, factor "
      << detail::fmt(r.peak_factor_bytes / 1048576.0, 3) << " MiB\n";
  return log.str();
}

/// Writes strain.str and strain.pgm.
inline std::string cmd_strain(const RunConfig& c) {
  auto field = io::read_field(detail::need(c.inputs.field, "field"));
  auto s = strain::lsq_strain(field, c.strain.kernel);
  auto dir = detail::prepare_output(c, "strain");
  io::write_strain(s, dir / "strain.str");

  double lo, hi;
  if (c.strain.display_range) {
    std::tie(lo, hi) = *c.strain.display_range;
  } else {
    lo = INFINITY, hi = -INFINITY;
    for (std::size_t j = 0; j < s.cols(); ++j)
      for (std::size_t i = s.first_valid_row(); i < s.end_valid_row(); ++i)
        lo = std::min(lo, s.values(i, j)), hi = std::max(hi, s.values(i, j));
    if (!(lo < hi)) {
      double v = std::isfinite(lo) ? lo : 0.0, h = std::max(std::abs(v), 1.0) * 1e-6;
      lo = v - h, hi = v + h;
    }
  }
  io::write_pgm(s.values, dir / "strain.pgm", lo, hi);
  return "strain: kernel " + std::to_string(c.strain.kernel) + ", display range [" + detail::fmt(lo) + ", " +
         detail::fmt(hi) + "]\n";
}

/// Writes report.json, esf.csv (when an ESF is configured) and cnr_hist.csv (when windows are).
/// Degenerate metrics are null in JSON and nan in CSV.
inline std::string cmd_evaluate(const RunConfig& c) {
  auto est = io::read_strain(detail::need(c.inputs.strain, "strain"));
  std::optional<StrainImage> truth;
  if (c.inputs.truth) truth = io::read_strain(*c.inputs.truth);
  const EvaluateSection ev = c.evaluate.value_or(EvaluateSection{});
  auto dir = detail::prepare_output(c, "evaluate");

  Json rep;
  rep["rows"] = est.rows();
  rep["lines"] = est.cols();
  rep["kernel"] = est.kernel;
  std::ostringstream log;
  log << "evaluate:";

  auto check = [&](const std::vector<metrics::WindowSpec>& ws, const std::vector<std::string>& paths) {
    for (std::size_t k = 0; k < ws.size(); ++k) try {
        metrics::window_stats(est, ws[k]);
      } catch (const DomainError& e) {
        throw DomainError("window " + paths[k] + ": " + e.what());
      }
  };
  check(ev.targets, ev.target_paths);
  check(ev.backgrounds, ev.background_paths);

  if (!ev.targets.empty() && !ev.backgrounds.empty()) {
    auto ts = metrics::window_stats(est, ev.targets.front());
    auto bs = metrics::window_stats(est, ev.backgrounds.front());
    rep["snr"] = detail::metric_json(metrics::snr(bs));
    rep["cnr"] = detail::metric_json(metrics::cnr(ts, bs));
    rep["sr"] = detail::metric_json(metrics::strain_ratio(ts, bs));
    auto hist = metrics::cnr_histogram(est, ev.targets, ev.backgrounds);
    Json h = Json::array();
    io::Column tc{"target", {}}, bc{"background", {}}, vc{"cnr", {}};
    for (std::size_t k = 0; k < hist.size(); ++k) {
      h.push_back(detail::metric_json(hist[k]));
      tc.values.push_back(static_cast<double>(k / ev.backgrounds.size()));
      bc.values.push_back(static_cast<double>(k % ev.backgrounds.size()));
      vc.values.push_back(hist[k].value_or(NAN));
    }
    rep["cnr_histogram"] = h;
    rep["cnr_histogram_mean"] = detail::metric_json(metrics::mean_defined(hist));
    io::write_csv({tc, bc, vc}, dir / "cnr_hist.csv");
    log << " cnr " << (rep["cnr"].is_null() ? "undefined" : detail::fmt(rep["cnr"].get<double>()));
  } else if (!ev.backgrounds.empty()) {
    rep["snr"] = detail::metric_json(metrics::snr(metrics::window_stats(est, ev.backgrounds.front())));
  }

  if (truth) {
    rep["mean_ssim"] = metrics::mean_ssim(*truth, est, ev.ssim);
    rep["l2_error"] = metrics::l2_error(*truth, est);
    log << " ssim " << detail::fmt(rep["mean_ssim"].get<double>());
  }

  if (ev.esf) {
    const auto& e = *ev.esf;
    const double dz = detail::axial_spacing(c);
    const double start = e.start_mm.value_or(-INFINITY);
    // An edge that cannot be located (plateaus equal, no 10%/90% crossing) is reported as null.
    auto edge = [&](const StrainImage& s, std::size_t col) {
      auto prof = strain::esf_profile(s, col, dz);
      double a = strain::plateau(prof, e.from_band_mm.first, e.from_band_mm.second);
      double b = strain::plateau(prof, e.to_band_mm.first, e.to_band_mm.second);
      metrics::Metric er;
      try {
        er = strain::edge_resolution(prof, a, b, start);
      } catch (const DomainError&) {
      }
      return std::pair{prof, er};
    };
    std::vector<io::Column> cols;
    std::vector<metrics::Metric> per, tper;
    for (std::size_t col : e.columns) {
      auto [prof, er] = edge(est, col);
      if (cols.empty()) cols.push_back({"depth_mm", prof.depth_mm});
      cols.push_back({"strain_" + std::to_string(col), prof.strain});
      per.push_back(er);
      if (truth) {
        auto [tprof, ter] = edge(*truth, col);
        if (tprof.strain.size() != prof.strain.size()) throw DomainError("truth and estimate differ in valid rows");
        cols.push_back({"truth_" + std::to_string(col), tprof.strain});
        tper.push_back(ter);
      }
    }
    auto as_json = [](const std::vector<metrics::Metric>& v) {
      Json a = Json::array();
      for (const auto& x : v) a.push_back(detail::metric_json(x));
      return a;
    };
    auto mean = metrics::mean_defined(per);
    rep["edge_resolution_mm"] = detail::metric_json(mean);
    rep["edge_resolution_per_column_mm"] = as_json(per);
    if (truth) {
      rep["truth_edge_resolution_mm"] = detail::metric_json(metrics::mean_defined(tper));
      rep["truth_edge_resolution_per_column_mm"] = as_json(tper);
    }
    io::write_csv(cols, dir / "esf.csv");
    log << " edge " << (mean ? detail::fmt(*mean) + " mm" : "not found");
  }

  detail::write_text(dir / "report.json", rep.dump(2) + "\n");
  return log.str() + "\n";
}

/// Reads report.json files and writes comparison.csv and ttests.csv. The paired
/// t-tests run over CNR histogram entries that are defined in both reports.
inline std::string cmd_report(const RunConfig& c) {
  const auto& in = c.inputs.reports;
  if (in.size() < 2) throw ConfigError("need at least two reports", "inputs.reports");
  std::vector<Json> reps;
  for (const auto& r : in) {
    std::ifstream f(r.path, std::ios::binary);
    if (!f) throw IoError("cannot open report " + r.path);
    try {
      reps.push_back(Json::parse(f));
    } catch (const Json::parse_error& e) {
      throw IoError("malformed report " + r.path + ": " + e.what());
    }
  }
  auto dir = detail::prepare_output(c, "report");

  const std::vector<std::string> keys = {"snr", "cnr", "sr", "cnr_histogram_mean", "mean_ssim", "l2_error",
                                         "edge_resolution_mm"};
  std::string table = "name";
  for (const auto& k : keys) table += "," + k;
  table += "\n";
  for (std::size_t r = 0; r < reps.size(); ++r) {
    table += in[r].name;
    for (const auto& k : keys) {
      table += ",";
      if (reps[r].contains(k) && reps[r][k].is_number()) table += io::format_real(reps[r][k].get<double>());
    }
    table += "\n";
  }
  detail::write_text(dir / "comparison.csv", table);

  auto histogram = [&](std::size_t r) {
    std::vector<std::optional<double>> h;
    if (!reps[r].contains("cnr_histogram")) throw DomainError("report '" + in[r].name + "' has no CNR histogram");
    for (const auto& v : reps[r]["cnr_histogram"])
      h.push_back(v.is_number() ? std::optional<double>(v.get<double>()) : std::nullopt);
    return h;
  };
  std::string tt = "a,b,pairs,t,p,df,degenerate,underflow\n";
  std::ostringstream log;
  log << "report: " << reps.size() << " methods\n";
  for (std::size_t a = 0; a < reps.size(); ++a)
    for (std::size_t b = a + 1; b < reps.size(); ++b) {
      auto ha = histogram(a), hb = histogram(b);
      if (ha.size() != hb.size())
        throw DomainError("CNR histograms of '" + in[a].name + "' and '" + in[b].name + "' differ in length");
      std::vector<double> x, y;
      for (std::size_t k = 0; k < ha.size(); ++k)
        if (ha[k] && hb[k]) x.push_back(*ha[k]), y.push_back(*hb[k]);
      if (x.size() < 2)
        throw DomainError("t-test " + in[a].name + " vs " + in[b].name + ": " + std::to_string(x.size()) +
                          " CNR pairs defined in both reports, need at least 2");
      auto t = metrics::paired_t_test(x, y);
      tt += in[a].name + "," + in[b].name + "," + std::to_string(x.size()) + "," + io::format_real(t.t) + "," +
            io::format_real(t.p) + "," + std::to_string(t.df) + "," + (t.degenerate ? "1" : "0") + "," +
            (t.underflow ? "1" : "0") + "\n";
      log << in[a].name << " vs " << in[b].name << ": t " << detail::fmt(t.t) << ", p " << detail::fmt(t.p) << "\n";
    }
  detail::write_text(dir / "ttests.csv", tt);
  return log.str();
}

}  // namespace elasto::cli
