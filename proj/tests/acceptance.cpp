// Acceptance run: one line per criterion, nonzero exit if any fails.
//
//   acceptance --cli <elasto binary> --configs <configs dir> [--only 1,4,9]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "elasto/cli/config.hpp"
#include "elasto/dpinit.hpp"
#include "elasto/metrics.hpp"
#include "elasto/phantom.hpp"
#include "elasto/solver/linear.hpp"
#include "elasto/solver/refine.hpp"
#include "elasto/strain.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace elasto;
using clk = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientSeconds = 10.0;
constexpr double kSolveAbsTol = 1e-9;
constexpr double kDpCostTol = 1e-9;
constexpr double kShiftRmse = 0.05;
constexpr double kEdgeOffsetSamples = 1.0;
constexpr double kEdgeRatio = 0.7;
constexpr double kPValue = 0.05;
constexpr double kMonotoneRelTol = 1e-10;
constexpr double kMetricTol = 1e-10;
constexpr double kTTestTable = 0.0742, kTTestTol = 5e-4;
constexpr double kRefineSeconds = 60.0;
constexpr double kSystemBytes = 100e6;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double secs(clk::duration d) { return std::chrono::duration<double>(d).count(); }

struct CostRecord {
  std::string label;
  double prior, final;
};
std::vector<CostRecord> g_costs;

solver::RefineResult refine_logged(const std::string& label, const phantom::PhantomPair& pair,
                                   const DisplacementField& prior, const solver::SolverConfig& c) {
  auto r = solver::refine(pair.pre, pair.post, prior, c);
  g_costs.push_back({label, r.trace.front().cost, r.trace.back().cost});
  return r;
}

solver::SolverConfig preset(solver::Preset p, std::optional<double> multiplier = {}) {
  auto c = solver::preset_config(p);
  if (multiplier) c.second_order_multiplier = *multiplier;
  return c;
}

// Layer phantom weights: preset defaults with the second-order multiplier at 1000.
std::vector<std::pair<std::string, solver::SolverConfig>> layer_methods() {
  return {{"GLUE", preset(solver::Preset::glue)},
          {"SOUL", preset(solver::Preset::soul, 1000.0)},
          {"L1-SOUL", preset(solver::Preset::l1soul, 1000.0)}};
}

phantom::RenderOptions sharp_psf() {
  phantom::RenderOptions o;
  o.psf.axial_sigma_mm = 0.5 * phantom::kSoundSpeed / (FrameGeometry{}.center_mhz * 1e6) * 1e3;
  return o;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  auto t0 = clk::now();
  std::mt19937_64 rng(11);
  const std::size_t m = 10, n = 8;
  auto pre = oracle::random_frame(m, n, rng), post = oracle::random_frame(m, n, rng);
  DisplacementField d(m, n, DisplacementStage::integer_prior);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      d.axial(i, j) = i < m / 2 ? 1.0 : -1.0;
      d.lateral(i, j) = j < n / 2 ? 1.0 : -1.0;
    }
  auto eps = solver::adaptive_eps(d);

  std::vector<std::pair<std::string, solver::SolverConfig>> cfgs;
  for (auto p : {solver::Preset::glue, solver::Preset::soul, solver::Preset::overwind, solver::Preset::l1soul})
    cfgs.push_back({solver::to_string(p), preset(p)});
  auto l1data = preset(solver::Preset::l1soul);
  l1data.data = solver::Norm::L1;
  cfgs.push_back({"l1soul+L1 data", l1data});

  std::uniform_int_distribution<std::size_t> pick(0, 2 * m * n - 1);
  double worst = 0.0;
  std::string where;
  for (auto& [name, c] : cfgs) {
    auto s = solver::assemble_system(pre, post, d, c, eps);
    auto g = oracle::model_gradient(s);
    for (int k = 0; k < 50; ++k) {
      std::size_t p = pick(rng);
      double fd = oracle::fd_derivative(pre, post, d, p, c, eps, 1e-5);
      double err = std::abs(g[p] - fd) / std::max({std::abs(g[p]), std::abs(fd), 1e-6});
      if (err > worst) worst = err, where = name + fmt(" p=%zu g=%.6g fd=%.6g", p, g[p], fd);
    }
  }
  double t = secs(clk::now() - t0);
  return {worst <= kGradientRelTol && t < kGradientSeconds,
          fmt("max relative error %.2e (%s) over 5 configs x 50 coordinates, %.2f s", worst, where.c_str(), t)};
}

Outcome sparse_vs_dense() {
  std::mt19937_64 rng(12);
  const std::size_t m = 20, n = 10;
  auto pre = oracle::random_frame(m, n, rng), post = oracle::random_frame(m, n, rng);
  DisplacementField prior(m, n, DisplacementStage::integer_prior);
  std::uniform_int_distribution<int> step(-1, 1);
  for (double& v : prior.axial.data()) v = step(rng);
  DisplacementField d = prior;
  d.stage = DisplacementStage::refined;
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& v : d.axial.data()) v += u(rng);
  for (double& v : d.lateral.data()) v += u(rng);
  auto eps = solver::adaptive_eps(prior);

  double worst = 0.0;
  for (auto p : {solver::Preset::glue, solver::Preset::soul, solver::Preset::overwind, solver::Preset::l1soul}) {
    auto s = solver::assemble_system(pre, post, d, preset(p), eps);
    auto x = solver::solve_sparse(s).x;
    auto y = oracle::dense_solve(s);
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
  }
  return {worst <= kSolveAbsTol, fmt("max |sparse - dense| %.2e over 4 presets, %zux%zu", worst, m, n)};
}

Outcome dp_oracle() {
  std::mt19937_64 rng(13);
  int mismatches = 0, unique = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int ra = std::uniform_int_distribution<int>(0, 2)(rng);
    int rl = std::uniform_int_distribution<int>(0, 2)(rng);
    double S = (2.0 * ra + 1) * (2.0 * rl + 1);
    int kmax = 8;
    while (kmax > 1 && std::pow(S, kmax) > 3e6) --kmax;
    int K = std::uniform_int_distribution<int>(1, kmax)(rng);
    int dec = std::uniform_int_distribution<int>(1, 2)(rng);
    std::size_t rows = static_cast<std::size_t>((K - 1) * dec + 1);
    std::size_t lines = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    auto pre = oracle::random_frame(rows, lines, rng), post = oracle::random_frame(rows, lines, rng);

    dp::DpConfig c;
    c.axial_range = ra;
    c.lateral_range = rl;
    c.row_decimation = dec;
    c.smoothness = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    c.out_of_bounds_penalty = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    c.data_cost = trial % 2 ? dp::DataCost::squared : dp::DataCost::absolute;
    std::size_t line = std::uniform_int_distribution<std::size_t>(0, lines - 1)(rng);

    std::vector<int> pa, pl;
    if (trial % 3 == 0) {
      for (int k = 0; k < K; ++k) {
        pa.push_back(std::uniform_int_distribution<int>(-ra, ra)(rng));
        pl.push_back(std::uniform_int_distribution<int>(-rl, rl)(rng));
      }
    }
    auto got = dp::dp_line(pre, post, line, c, pa, pl);
    auto want = oracle::exhaustive_line(pre, post, line, c, pa, pl);
    bool bad = std::abs(got.cost - want.cost) > kDpCostTol * std::max(1.0, std::abs(want.cost));
    if (want.second - want.cost > kDpCostTol * std::max(1.0, std::abs(want.cost))) {
      ++unique;
      bad = bad || got.axial != want.axial || got.lateral != want.lateral;
    }
    mismatches += bad;
  }
  return {mismatches == 0, fmt("%d mismatches in 100 instances (%d with a unique optimum)", mismatches, unique)};
}

Outcome known_shift() {
  const std::size_t rows = 400, lines = 32;
  phantom::DeformationModel m;
  m.kind = phantom::ModelKind::rigid_shift;
  m.height_mm = rows * FrameGeometry{}.axial_spacing_mm + 1.0;
  m.width_mm = lines * FrameGeometry{}.lateral_spacing_mm + 2.0;
  m.shift.samples = 3.4;
  auto grid = phantom::centered_grid(m, rows, lines, FrameGeometry{});

  std::map<std::string, double> worst;
  const char* names[] = {"glue", "soul", "overwind", "l1soul"};
  for (int seed = 1; seed <= 3; ++seed) {
    auto pair = phantom::make_phantom_pair(m, grid, seed, phantom::kNoNoise, sharp_psf());
    DisplacementField prior(rows, lines, DisplacementStage::integer_prior);
    for (double& v : prior.axial.data()) v = 3.0;
    for (const char* nm : names) {
      auto r = refine_logged(fmt("shift %s seed %d", nm, seed), pair, prior, preset(*solver::parse_preset(nm)));
      double se = 0.0;
      std::size_t k = 0;
      for (std::size_t j = 2; j < lines - 2; ++j)
        for (std::size_t i = 10; i < rows - 10; ++i, ++k)
          se += std::pow(r.field.axial(i, j) - pair.truth.displacement.axial(i, j), 2);
      worst[nm] = std::max(worst[nm], std::sqrt(se / static_cast<double>(k)));
    }
  }
  bool ok = true;
  std::string s = "interior axial RMSE (worst of 3 seeds):";
  for (const char* nm : names) {
    ok = ok && worst[nm] <= kShiftRmse;
    s += fmt(" %s %.4f", nm, worst[nm]);
  }
  return {ok, s + fmt(" (bound %.2f samples)", kShiftRmse)};
}

Outcome band_shift() {
  const std::size_t rows = 1200, lines = 32, center = lines / 2;
  phantom::DeformationModel m;
  m.kind = phantom::ModelKind::rigid_shift;
  m.height_mm = 24.0;
  m.width_mm = lines * FrameGeometry{}.lateral_spacing_mm + 2.0;
  m.shift.samples = 10.0;
  m.shift.top_mm = 12.0;
  m.shift.height_mm = 6.0;
  m.shift.array_warp = true;
  auto grid = phantom::centered_grid(m, rows, lines, FrameGeometry{});
  const double dz = grid.geometry.axial_spacing_mm;
  auto pair = phantom::make_phantom_pair(m, grid, 1, phantom::kNoNoise, sharp_psf());
  dp::DpConfig dc;
  dc.smoothness = 3.0 * dp::median_abs(pair.pre.samples.data());
  auto prior = dp::dp_estimate(pair.pre, pair.post, dc);

  auto profile = [&](const DisplacementField& f) {
    strain::EsfProfile p;
    p.column = center;
    for (std::size_t i = 0; i < rows; ++i) {
      p.depth_mm.push_back(static_cast<double>(i) * dz);
      p.strain.push_back(f.axial(i, center));
    }
    return p;
  };
  auto truth = profile(pair.truth.displacement);
  const double edge = strain::half_crossing(truth, 0.0, m.shift.samples, 10.0);
  auto offset = [&](const DisplacementField& f) {
    auto p = profile(f);
    double lo = strain::plateau(p, 8.0, 11.0), hi = strain::plateau(p, 13.0, 17.0);
    return (strain::half_crossing(p, lo, hi, 10.0) - edge) / dz;
  };

  bool ok = true;
  std::string s = fmt("50%% crossing offset (samples): prior %+.2f", offset(prior));
  for (const char* nm : {"glue", "soul", "overwind", "l1soul"}) {
    auto r = refine_logged(fmt("band %s", nm), pair, prior, preset(*solver::parse_preset(nm)));
    double o = offset(r.field);
    ok = ok && std::abs(o) <= kEdgeOffsetSamples;
    s += fmt(", %s %+.2f", nm, o);
  }
  return {ok, s + fmt(" (bound %.0f)", kEdgeOffsetSamples)};
}

// Layer phantom runs shared by the edge and SSIM criteria.
struct LayerRuns {
  std::map<std::string, std::vector<StrainImage>> strain;  // per method, per seed
  std::vector<StrainImage> truth;
};

LayerRuns run_layers(const cli::RunConfig& rc, const std::string& tag) {
  static std::map<std::string, LayerRuns> cache;
  if (auto it = cache.find(tag); it != cache.end()) return it->second;
  LayerRuns out;
  const auto& p = *rc.phantom;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto pair = phantom::make_phantom_pair(p.model, p.grid, static_cast<std::uint64_t>(seed), p.psnr_db, p.render);
    auto prior = dp::dp_estimate(pair.pre, pair.post, rc.dp.resolved(pair.pre));
    for (auto& [name, c] : layer_methods()) {
      auto r = refine_logged(fmt("%s %s seed %d", tag.c_str(), name.c_str(), seed), pair, prior, c);
      out.strain[name].push_back(strain::lsq_strain(r.field, rc.strain.kernel));
    }
    out.truth.push_back(pair.truth.strain);
  }
  return cache[tag] = out;
}

Outcome edge_sharpness(const fs::path& configs) {
  auto rc = cli::load_config(configs / "thin_layer.json");
  const auto& e = *rc.evaluate->esf;
  const double dz = rc.phantom->grid.geometry.axial_spacing_mm;
  auto runs = run_layers(rc, "thin-layer");
  auto mean_edge = [&](const std::string& name, std::string& log) {
    double sum = 0.0;
    for (const auto& s : runs.strain[name]) {
      auto prof = strain::esf_profile(s, e.columns.front(), dz);
      double a = strain::plateau(prof, e.from_band_mm.first, e.from_band_mm.second);
      double b = strain::plateau(prof, e.to_band_mm.first, e.to_band_mm.second);
      double er = strain::edge_resolution(prof, a, b, e.start_mm.value_or(-INFINITY));
      log += fmt(" %.2f", er);
      sum += er;
    }
    return sum / kSeeds;
  };
  try {
    std::string ls, ll;
    double soul = mean_edge("SOUL", ls), l1 = mean_edge("L1-SOUL", ll);
    double ratio = l1 / soul;
    return {ratio <= kEdgeRatio, fmt("edge resolution L1-SOUL %.3f mm [%s ] / SOUL %.3f mm [%s ] = %.3f (bound %.2f)", l1,
                                     ll.c_str(), soul, ls.c_str(), ratio, kEdgeRatio)};
  } catch (const Error& ex) {
    return {false, std::string("edge not measurable: ") + ex.what()};
  }
}

Outcome contrast(const fs::path& configs) {
  auto rc = cli::load_config(configs / "inclusion.json");
  const auto& p = *rc.phantom;
  const auto& ev = *rc.evaluate;
  auto with_weights = [&](solver::Preset pr, double a1, double a2, double b1, double b2) {
    auto c = solver::preset_config(pr);
    c.alpha1 = a1, c.alpha2 = a2, c.beta1 = b1, c.beta2 = b2;
    if (c.second_order_multiplier) c.second_order_multiplier = 50.0;
    c.eta0 = 1e-4, c.eta1 = 1e-3, c.eta2 = 5e-4;
    return c;
  };
  std::vector<std::pair<std::string, solver::SolverConfig>> methods = {
      {"GLUE", with_weights(solver::Preset::glue, 40, 0.1, 20, 0.05)},
      {"SOUL", with_weights(solver::Preset::soul, 40, 0.05, 20, 0.025)},
      {"L1-SOUL", rc.solver.config}};

  std::map<std::string, std::vector<double>> single, hist;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto pair = phantom::make_phantom_pair(p.model, p.grid, static_cast<std::uint64_t>(seed), p.psnr_db, p.render);
    auto prior = dp::dp_estimate(pair.pre, pair.post, rc.dp.resolved(pair.pre));
    for (auto& [name, c] : methods) {
      auto r = refine_logged(fmt("inclusion %s seed %d", name.c_str(), seed), pair, prior, c);
      auto s = strain::lsq_strain(r.field, rc.strain.kernel);
      auto t = metrics::window_stats(s, ev.targets.front()), b = metrics::window_stats(s, ev.backgrounds.front());
      single[name].push_back(metrics::cnr(t, b).value_or(NAN));
      hist[name].push_back(metrics::mean_defined(metrics::cnr_histogram(s, ev.targets, ev.backgrounds)).value_or(NAN));
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  bool ok = true;
  std::string s;
  auto compare = [&](const std::string& label, const std::vector<double>& hi, const std::vector<double>& lo) {
    auto t = metrics::paired_t_test(hi, lo);
    bool pass = mean(hi) > mean(lo) && t.t > 0 && t.p < kPValue;
    ok = ok && pass;
    s += fmt("%s%s %.2f vs %.2f (t %.2f, p %.4f)", s.empty() ? "" : "; ", label.c_str(), mean(hi), mean(lo), t.t, t.p);
  };
  compare("CNR L1-SOUL>SOUL", single["L1-SOUL"], single["SOUL"]);
  compare("CNR SOUL>GLUE", single["SOUL"], single["GLUE"]);
  compare("mean-120 CNR L1-SOUL>SOUL", hist["L1-SOUL"], hist["SOUL"]);
  return {ok, s + fmt(" over %d seeds", kSeeds)};
}

Outcome ssim_ordering(const fs::path& configs) {
  bool ok = true;
  std::string s;
  for (auto [file, tag] : {std::pair{"four_layer.json", "four-layer"}, std::pair{"thin_layer.json", "thin-layer"}}) {
    auto rc = cli::load_config(configs / file);
    auto runs = run_layers(rc, tag);
    std::map<std::string, double> mean;
    int held = 0;
    for (int k = 0; k < kSeeds; ++k) {
      double g = metrics::mean_ssim(runs.truth[k], runs.strain["GLUE"][k]);
      double so = metrics::mean_ssim(runs.truth[k], runs.strain["SOUL"][k]);
      double l1 = metrics::mean_ssim(runs.truth[k], runs.strain["L1-SOUL"][k]);
      mean["GLUE"] += g / kSeeds, mean["SOUL"] += so / kSeeds, mean["L1-SOUL"] += l1 / kSeeds;
      held += l1 >= so && so >= g;
    }
    ok = ok && mean["L1-SOUL"] >= mean["SOUL"] && mean["SOUL"] >= mean["GLUE"];
    s += fmt("%s%s L1-SOUL %.4f SOUL %.4f GLUE %.4f (ordering holds on %d/%d seeds)", s.empty() ? "" : "; ", tag,
             mean["L1-SOUL"], mean["SOUL"], mean["GLUE"], held, kSeeds);
  }
  return {ok, "mean over seeds: " + s};
}

Outcome cost_behavior() {
  const std::size_t m = 60, n = 20;
  auto q = oracle::quadratic_pair(m, n);
  bool mono = true;
  std::string worst;
  for (auto p : {solver::Preset::glue, solver::Preset::soul, solver::Preset::overwind, solver::Preset::l1soul}) {
    auto c = preset(p);
    c.iterations = 10;
    c.tol = 0.0;
    auto r = solver::refine(q.pre, q.post, q.prior, c);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i)
        if (!solver::inside(q.post.samples, static_cast<double>(i) + r.field.axial(i, j),
                            static_cast<double>(j) + r.field.lateral(i, j))) {
          mono = false;
          worst += fmt(" %s left the frame", solver::to_string(p));
          i = m, j = n;
        }
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      double prev = r.trace[k - 1].cost, cur = r.trace[k].cost;
      if (cur - prev > kMonotoneRelTol * std::abs(prev)) {
        mono = false;
        worst += fmt(" %s@%zu", solver::to_string(p), k);
      }
    }
  }
  int decreased = 0;
  std::string bad;
  for (const auto& rec : g_costs) {
    if (rec.final < rec.prior) {
      ++decreased;
    } else {
      bad += " [" + rec.label + fmt(" %.6g -> %.6g]", rec.prior, rec.final);
    }
  }
  bool ok = mono && decreased == static_cast<int>(g_costs.size()) && !g_costs.empty();
  return {ok, fmt("final < prior cost on %d/%zu phantom runs%s; quadratic check %s%s", decreased, g_costs.size(),
                  bad.c_str(), mono ? "monotone for all presets" : "increase at", worst.c_str())};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(14);
  double worst = 0.0;
  std::string which;
  auto track = [&](const char* name, double got, double want) {
    double e = std::abs(got - want) / std::max(1.0, std::abs(want));
    if (e > worst) worst = e, which = name;
  };
  for (int trial = 0; trial < 20; ++trial) {
    auto x = oracle::random_strain(16, 16, rng), y = oracle::random_strain(16, 16, rng);
    track("ssim", metrics::mean_ssim(x, y), oracle::ssim(x, y));
    track("l2", metrics::l2_error(x, y), oracle::l2_error(x, y));
    auto win = [&](metrics::WindowRole role) {
      std::uniform_int_distribution<std::size_t> h(2, 6);
      metrics::WindowSpec w;
      w.height = h(rng), w.width = h(rng), w.role = role;
      w.top = std::uniform_int_distribution<std::size_t>(x.first_valid_row(), x.end_valid_row() - w.height)(rng);
      w.left = std::uniform_int_distribution<std::size_t>(0, 16 - w.width)(rng);
      return w;
    };
    auto tw = win(metrics::WindowRole::target), bw = win(metrics::WindowRole::background);
    auto t = metrics::window_stats(x, tw), b = metrics::window_stats(x, bw);
    auto to = oracle::window(x, tw), bo = oracle::window(x, bw);
    track("snr", *metrics::snr(b), oracle::snr(bo));
    track("cnr", *metrics::cnr(t, b), oracle::cnr(to, bo));
    track("sr", *metrics::strain_ratio(t, b), oracle::sr(to, bo));
    std::vector<double> u(16), v(16);
    for (std::size_t k = 0; k < 16; ++k) u[k] = x.values(8, k), v[k] = y.values(8, k);
    auto tt = metrics::paired_t_test(u, v);
    auto to2 = oracle::t_test(u, v);
    track("t", tt.t, to2.t);
    track("p", tt.p, to2.p);
  }
  // Differences 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3), df = 2.
  auto tab = metrics::paired_t_test({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
  bool ok = worst <= kMetricTol && std::abs(tab.p - kTTestTable) <= kTTestTol && tab.df == 2;
  return {ok, fmt("max relative deviation %.2e (%s) over 20 random 16x16 pairs; t %.4f df %d p %.5f (table %.4f)", worst,
                  which.c_str(), tab.t, tab.df, tab.p, kTTestTable)};
}

Outcome performance() {
  const std::size_t rows = 1000, lines = 100;
  phantom::DeformationModel m;
  const FrameGeometry g;
  m.kind = phantom::ModelKind::layers;
  m.height_mm = static_cast<double>(rows) * g.axial_spacing_mm + 1.0;
  m.width_mm = static_cast<double>(lines) * g.lateral_spacing_mm + 2.0;
  m.boundaries_mm = {m.height_mm / 4, m.height_mm / 2, 3 * m.height_mm / 4};
  m.moduli_kpa = {20, 40, 80, 20};
  m.compression = 0.01;
  auto grid = phantom::centered_grid(m, rows, lines, g);
  auto pair = phantom::make_phantom_pair(m, grid, 1, 20.0, sharp_psf());
  dp::DpConfig dc;
  dc.smoothness = 3.0 * dp::median_abs(pair.pre.samples.data());
  auto prior = dp::dp_estimate(pair.pre, pair.post, dc);
  auto t0 = clk::now();
  auto r = refine_logged("performance l1soul", pair, prior, preset(solver::Preset::l1soul));
  double t = secs(clk::now() - t0);
  double mb = static_cast<double>(r.peak_system_bytes) / 1e6;
  return {t <= kRefineSeconds && static_cast<double>(r.peak_system_bytes) < kSystemBytes,
          fmt("L1-SOUL refine %zux%zu, %zu iterations: %.1f s (bound %.0f), assembled system %.1f MB (bound 100), "
              "factor %.1f MB",
              rows, lines, r.trace.size() - 1, t, kRefineSeconds, mb, static_cast<double>(r.peak_factor_bytes) / 1e6)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI binary given (--cli)"};
  const fs::path work = fs::temp_directory_path() / fmt("elasto_acceptance_%d", static_cast<int>(::getpid()));
  fs::remove_all(work);
  const fs::path A = work / "A", echoes = work / "echo";
  fs::create_directories(A);
  fs::create_directories(echoes);
  const fs::path base = work / "base.json";
  {
    std::ofstream f(base);
    f << R"({
  "seed": 3,
  "phantom": {
    "kind": "layers", "height_mm": 8.0, "width_mm": 5.2,
    "boundaries_mm": [3, 5], "moduli_kpa": [20, 60, 20], "compression": 0.02,
    "grid": {"rows": 300, "lines": 16},
    "psf": {"axial_sigma_wavelengths": 0.5},
    "psnr_db": 20
  },
  "dp": {"smoothness_factor": 3.0},
  "solver": {"preset": "l1soul", "iterations": 5},
  "strain": {"kernel": 3},
  "evaluate": {
    "windows": [
      {"top": 200, "left": 4, "height": 20, "width": 4, "role": "target"},
      {"top": 200, "left": 9, "height": 20, "width": 4, "role": "target"},
      {"top": 60, "left": 4, "height": 20, "width": 4, "role": "background"},
      {"top": 60, "left": 9, "height": 20, "width": 4, "role": "background"}
    ],
    "esf": {"columns": [8], "from_band_mm": [1.0, 2.8], "to_band_mm": [3.2, 4.8], "start_mm": 2.5}
  }
})";
  }
  const std::string log = (work / "log.txt").string();
  auto run = [&](const std::string& args) {
    std::string cmd = "\"" + cli + "\" " + args + " >>\"" + log + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  auto P = [&](const fs::path& p) { return "\"" + p.string() + "\""; };
  struct Step {
    std::string command, dir, args;
  };
  std::vector<Step> steps = {
      {"simulate", "sim", ""},
      {"estimate", "est", "--pre " + P(A / "sim/I1.rfe") + " --post " + P(A / "sim/I2.rfe")},
      {"strain", "str", "--field " + P(A / "est/refined.dsp")},
      {"strain", "strp", "--field " + P(A / "est/prior.dsp")},
      {"evaluate", "ev", "--strain " + P(A / "str/strain.str") + " --truth " + P(A / "sim/truth.str")},
      {"evaluate", "evp", "--strain " + P(A / "strp/strain.str") + " --truth " + P(A / "sim/truth.str")},
      {"report", "rep", "--report refined=" + P(A / "ev/report.json") + " --report prior=" + P(A / "evp/report.json")},
  };
  for (const auto& s : steps)
    if (!run(s.command + " --config " + P(base) + " --out " + P(A / s.dir) + " " + s.args))
      return {false, "first run failed at '" + s.command + "' (" + s.dir + "); see " + log};
  auto first = snapshot(A);
  for (const auto& s : steps) fs::copy_file(A / s.dir / (s.command + ".config.json"), echoes / (s.dir + ".json"));
  fs::remove_all(A);
  for (const auto& s : steps)
    if (!run(s.command + " --config " + P(echoes / (s.dir + ".json"))))
      return {false, "re-run failed at '" + s.command + "' (" + s.dir + "); see " + log};
  auto second = snapshot(A);

  std::vector<std::string> differ;
  for (const auto& [name, bytes] : first) {
    auto it = second.find(name);
    if (it == second.end() || it->second != bytes) differ.push_back(name);
  }
  for (const auto& [name, bytes] : second)
    if (!first.count(name)) differ.push_back(name);
  if (!differ.empty()) {
    std::string s = fmt("%zu of %zu files differ:", differ.size(), first.size());
    for (const auto& d : differ) s += " " + d;
    return {false, s + " (kept in " + work.string() + ")"};
  }
  fs::remove_all(work);
  return {true, fmt("%zu commands re-run from their echoed configs; %zu files byte-identical", steps.size(),
                    first.size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli_path, configs_dir = "configs";
  std::vector<int> only;
  app.add_option("--cli", cli_path, "elasto CLI binary");
  app.add_option("--configs", configs_dir, "sample config directory")->check(CLI::ExistingDirectory);
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path configs = configs_dir;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"sparse vs dense solve", sparse_vs_dense},
      {"DP vs exhaustive enumeration", dp_oracle},
      {"known subsample shift", known_shift},
      {"array-warped band shift edge", band_shift},
      {"edge sharpness ordering", [&] { return edge_sharpness(configs); }},
      {"contrast ordering", [&] { return contrast(configs); }},
      {"mean SSIM ordering", [&] { return ssim_ordering(configs); }},
      {"cost behavior", cost_behavior},
      {"metric oracles", metric_oracles},
      {"performance envelope", performance},
      {"CLI determinism", [&] { return determinism(cli_path); }},
  };
  std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    auto t0 = clk::now();
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str(),
                secs(clk::now() - t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
