#pragma once

// JSON run configuration for the elasto CLI. Every section is parsed strictly:
// unknown keys and type mismatches raise ConfigError naming the JSON path.
// to_json() writes the fully expanded configuration, which parses back to the
// same RunConfig.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elasto/dpinit.hpp"
#include "elasto/error.hpp"
#include "elasto/grid.hpp"
#include "elasto/metrics.hpp"
#include "elasto/phantom.hpp"
#include "elasto/solver/config.hpp"

namespace elasto::cli {

using Json = nlohmann::ordered_json;

/// Read access to one JSON object that remembers which keys were consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  const std::string& where() const { return path_; }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

  /// The value at `key`, or nullptr when absent or null. Marks the key as used.
  const Json* find(const std::string& key) {
    used_.insert(key);
    return has(key) ? &(*j_)[key] : nullptr;
  }

  template <class T>
  T get(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError("missing required key", path(key));
    return convert<T>(*v, path(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    const Json* v = find(key);
    return v ? convert<T>(*v, path(key)) : fallback;
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    return convert<T>(*v, path(key));
  }

  Section sub(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError("missing required section", path(key));
    return Section(*v, path(key));
  }

  std::optional<Section> opt_sub(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    return Section(*v, path(key));
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key", path(it.key()));
  }

  template <class T>
  static T convert(const Json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("expected a boolean", where);
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("expected a string", where);
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("expected a non-negative integer", where);
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer", where);
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("expected a number", where);
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError("expected an array", where);
      T out;
      for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(convert<typename T::value_type>(v[k], where + "[" + std::to_string(k) + "]"));
      return out;
    }
  }

 private:
  const Json* j_;
  std::string path_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------

struct PhantomSection {
  phantom::DeformationModel model;
  phantom::GridSpec grid;
  phantom::RenderOptions render;
  double axial_sigma_wavelengths = 1.5;
  /// Infinite means no noise.
  double psnr_db = phantom::kNoNoise;
};

struct DpSection {
  dp::DpConfig config;
  /// Used when config.smoothness is unset: smoothness = factor * median|I1|.
  double smoothness_factor = 0.2;

  dp::DpConfig resolved(const RfFrame& pre) const {
    dp::DpConfig c = config;
    if (!c.smoothness) c.smoothness = smoothness_factor * dp::median_abs(pre.samples.data());
    return c;
  }
};

struct SolverSection {
  std::optional<solver::Preset> preset;
  /// Expanded and validated.
  solver::SolverConfig config;
};

struct StrainSection {
  int kernel = 3;
  /// PGM display range; min/max of the valid rows when unset.
  std::optional<std::pair<double, double>> display_range;
};

struct EsfSection {
  std::vector<std::size_t> columns;
  std::pair<double, double> from_band_mm{0, 0};
  std::pair<double, double> to_band_mm{0, 0};
  std::optional<double> start_mm;
};

struct EvaluateSection {
  /// Scalar SNR/CNR/SR use the first target and first background window.
  std::vector<metrics::WindowSpec> targets, backgrounds;
  /// JSON path of each window, for error messages.
  std::vector<std::string> target_paths, background_paths;
  std::optional<EsfSection> esf;
  metrics::SsimOptions ssim;
};

struct NamedPath {
  std::string name;
  std::string path;
};

struct InputsSection {
  std::optional<std::string> pre, post, field, strain, truth;
  std::vector<NamedPath> reports;
};

struct RunConfig {
  std::string output = ".";
  std::uint64_t seed = 1;
  std::optional<PhantomSection> phantom;
  DpSection dp;
  SolverSection solver;
  StrainSection strain;
  std::optional<EvaluateSection> evaluate;
  InputsSection inputs;
};

namespace detail {

inline std::pair<double, double> parse_range(Section& s, const std::string& key) {
  auto v = s.get<std::vector<double>>(key);
  if (v.size() != 2) throw ConfigError("expected [low, high]", s.path(key));
  if (!(v[0] < v[1])) throw ConfigError("low must be below high", s.path(key));
  return {v[0], v[1]};
}

inline phantom::ModelKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "layers") return phantom::ModelKind::layers;
  if (s == "thin_layer") return phantom::ModelKind::thin_layer;
  if (s == "inclusion") return phantom::ModelKind::inclusion;
  if (s == "rigid_shift") return phantom::ModelKind::rigid_shift;
  throw ConfigError("unknown model kind '" + s + "' (layers | thin_layer | inclusion | rigid_shift)", where);
}

inline solver::Norm parse_norm(Section& s, const std::string& key, solver::Norm fallback) {
  auto v = s.opt<std::string>(key);
  if (!v) return fallback;
  if (*v == "L1") return solver::Norm::L1;
  if (*v == "L2") return solver::Norm::L2;
  throw ConfigError("expected \"L1\" or \"L2\"", s.path(key));
}

inline double parse_psnr(Section& s, const std::string& key) {
  const Json* v = s.find(key);
  if (!v) return phantom::kNoNoise;
  if (v->is_string() && v->get<std::string>() == "none") return phantom::kNoNoise;
  if (!v->is_number()) throw ConfigError("expected a number or \"none\"", s.path(key));
  return v->get<double>();
}

inline PhantomSection parse_phantom(Section s) {
  PhantomSection p;
  auto& m = p.model;
  m.kind = parse_kind(s.get<std::string>("kind"), s.path("kind"));
  m.height_mm = s.get<double>("height_mm");
  m.width_mm = s.get<double>("width_mm");
  m.poisson = s.get<double>("poisson", m.poisson);
  if (m.kind == phantom::ModelKind::rigid_shift) {
    auto sh = s.sub("shift");
    m.shift.samples = sh.get<double>("samples");
    m.shift.top_mm = sh.get<double>("top_mm", 0.0);
    m.shift.height_mm = sh.opt<double>("height_mm");
    m.shift.array_warp = sh.get<bool>("array_warp", false);
    sh.finish();
    m.compression = s.get<double>("compression", m.compression);
  } else {
    m.compression = s.get<double>("compression");
    m.moduli_kpa = s.get<std::vector<double>>("moduli_kpa");
  }
  if (m.kind == phantom::ModelKind::layers || m.kind == phantom::ModelKind::thin_layer)
    m.boundaries_mm = s.get<std::vector<double>>("boundaries_mm");
  if (m.kind == phantom::ModelKind::inclusion) {
    auto in = s.sub("inclusion");
    m.inclusion.radius_mm = in.get<double>("radius_mm");
    m.inclusion.center_depth_mm = in.get<double>("center_depth_mm", m.height_mm / 2.0);
    m.inclusion.center_lateral_mm = in.get<double>("center_lateral_mm", m.width_mm / 2.0);
    m.inclusion.blend_mm = in.opt<double>("blend_mm");
    in.finish();
  }

  auto g = s.sub("grid");
  p.grid.rows = g.get<std::size_t>("rows");
  p.grid.lines = g.get<std::size_t>("lines");
  auto& geo = p.grid.geometry;
  geo.sampling_mhz = g.get<double>("sampling_mhz", geo.sampling_mhz);
  geo.axial_spacing_mm = g.get<double>("axial_spacing_mm", phantom::kSoundSpeed / (2.0 * geo.sampling_mhz * 1e6) * 1e3);
  geo.lateral_spacing_mm = g.get<double>("lateral_spacing_mm", geo.lateral_spacing_mm);
  geo.center_mhz = g.get<double>("center_mhz", geo.center_mhz);
  g.finish();
  if (p.grid.rows < 4 || p.grid.lines < 4) throw ConfigError("grid must be at least 4x4", s.path("grid"));
  if (!(geo.axial_spacing_mm > 0) || !(geo.lateral_spacing_mm > 0) || !(geo.center_mhz > 0) || !(geo.sampling_mhz > 0))
    throw ConfigError("spacings and frequencies must be positive", s.path("grid"));

  auto& psf = p.render.psf;
  psf.center_mhz = geo.center_mhz;
  if (auto ps = s.opt_sub("psf")) {
    p.axial_sigma_wavelengths = ps->get<double>("axial_sigma_wavelengths", p.axial_sigma_wavelengths);
    psf.lateral_sigma_mm = ps->get<double>("lateral_sigma_mm", psf.lateral_sigma_mm);
    psf.support_sigmas = ps->get<double>("support_sigmas", psf.support_sigmas);
    ps->finish();
  }
  psf.axial_sigma_mm = p.axial_sigma_wavelengths * phantom::kSoundSpeed / (geo.center_mhz * 1e6) * 1e3;
  if (!(psf.axial_sigma_mm > 0) || !(psf.lateral_sigma_mm > 0) || !(psf.support_sigmas > 0))
    throw ConfigError("PSF widths must be positive", s.path("psf"));
  p.render.scatterers_per_cell = s.get<double>("scatterers_per_cell", p.render.scatterers_per_cell);
  p.render.peak_amplitude = s.get<double>("peak_amplitude", p.render.peak_amplitude);
  if (!(p.render.scatterers_per_cell > 0) || !(p.render.peak_amplitude > 0))
    throw ConfigError("scatterer density and peak amplitude must be positive", s.path("scatterers_per_cell"));
  p.psnr_db = parse_psnr(s, "psnr_db");
  if (std::isnan(p.psnr_db)) throw ConfigError("psnr must not be NaN", s.path("psnr_db"));
  s.finish();

  if (m.kind == phantom::ModelKind::rigid_shift) m.shift.sample_mm = geo.axial_spacing_mm;
  try {
    m.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(e.what(), s.where());
  }
  p.grid = phantom::centered_grid(m, p.grid.rows, p.grid.lines, geo);
  if (p.grid.depth(p.grid.rows - 1) > m.height_mm + 1e-9 || p.grid.lateral(0) < -1e-9)
    throw ConfigError("imaging grid extends beyond the phantom region", s.path("grid"));
  return p;
}

inline DpSection parse_dp(Section s) {
  DpSection d;
  auto& c = d.config;
  c.axial_range = s.opt<int>("axial_range");
  c.lateral_range = s.get<int>("lateral_range", c.lateral_range);
  c.smoothness = s.opt<double>("smoothness");
  d.smoothness_factor = s.get<double>("smoothness_factor", d.smoothness_factor);
  if (auto dc = s.opt<std::string>("data_cost")) {
    if (*dc == "absolute") c.data_cost = dp::DataCost::absolute;
    else if (*dc == "squared") c.data_cost = dp::DataCost::squared;
    else throw ConfigError("expected \"absolute\" or \"squared\"", s.path("data_cost"));
  }
  c.row_decimation = s.get<int>("row_decimation", c.row_decimation);
  c.out_of_bounds_penalty = s.opt<double>("out_of_bounds_penalty");
  s.finish();
  if (!(d.smoothness_factor >= 0)) throw ConfigError("must be >= 0", s.path("smoothness_factor"));
  try {
    c.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(e.what(), s.where());
  }
  return d;
}

inline SolverSection parse_solver(Section s) {
  SolverSection out;
  if (auto name = s.opt<std::string>("preset")) {
    out.preset = solver::parse_preset(*name);
    if (!out.preset) throw ConfigError("unknown preset '" + *name + "' (glue | soul | overwind | l1soul)", s.path("preset"));
  }
  solver::SolverConfig c = out.preset ? solver::preset_config(*out.preset) : solver::SolverConfig{};
  auto num = [&](const char* key, double& field) { field = s.get<double>(key, field); };
  num("alpha1", c.alpha1), num("alpha2", c.alpha2), num("beta1", c.beta1), num("beta2", c.beta2);
  bool explicit_second = s.has("theta1") || s.has("theta2") || s.has("lambda1") || s.has("lambda2");
  num("theta1", c.theta1), num("theta2", c.theta2), num("lambda1", c.lambda1), num("lambda2", c.lambda2);
  num("gamma", c.gamma);
  if (s.has("second_order_multiplier")) {
    if (explicit_second)
      throw ConfigError("give either second_order_multiplier or explicit theta/lambda weights",
                        s.path("second_order_multiplier"));
    c.second_order_multiplier = s.get<double>("second_order_multiplier");
  } else {
    s.find("second_order_multiplier");
    if (explicit_second) c.second_order_multiplier.reset();
  }
  num("eta0", c.eta0), num("eta1", c.eta1), num("eta2", c.eta2), num("eta_data", c.eta_data);
  if (auto n = s.opt_sub("norms")) {
    c.first_order = parse_norm(*n, "first_order", c.first_order);
    c.second_order = parse_norm(*n, "second_order", c.second_order);
    c.data = parse_norm(*n, "data", c.data);
    n->finish();
  }
  c.iterations = s.get<int>("iterations", c.iterations);
  num("tol", c.tol), num("trust_radius", c.trust_radius);
  c.tikhonov = s.opt<double>("tikhonov");
  num("linear_tolerance", c.linear_tolerance);
  s.finish();
  c = out.preset ? solver::enforce_preset(*out.preset, c) : c.expanded();
  try {
    c.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(e.what(), s.where());
  }
  out.config = c;
  return out;
}

inline StrainSection parse_strain(Section s) {
  StrainSection st;
  st.kernel = s.get<int>("kernel", st.kernel);
  if (st.kernel < 3 || st.kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 3", s.path("kernel"));
  if (s.has("display_range")) st.display_range = parse_range(s, "display_range");
  else s.find("display_range");
  s.finish();
  return st;
}

inline metrics::WindowSpec parse_window(Section s) {
  metrics::WindowSpec w;
  w.top = s.get<std::size_t>("top");
  w.left = s.get<std::size_t>("left");
  w.height = s.get<std::size_t>("height");
  w.width = s.get<std::size_t>("width");
  auto role = s.get<std::string>("role");
  if (role == "target") w.role = metrics::WindowRole::target;
  else if (role == "background") w.role = metrics::WindowRole::background;
  else throw ConfigError("expected \"target\" or \"background\"", s.path("role"));
  if (w.height * w.width < 4) throw ConfigError("window area must be at least 4 samples", s.path("height"));
  s.finish();
  return w;
}

inline EvaluateSection parse_evaluate(Section s) {
  EvaluateSection ev;
  if (const Json* ws = s.find("windows")) {
    if (!ws->is_array()) throw ConfigError("expected an array", s.path("windows"));
    for (std::size_t k = 0; k < ws->size(); ++k) {
      std::string where = s.path("windows") + "[" + std::to_string(k) + "]";
      auto w = parse_window(Section((*ws)[k], where));
      bool target = w.role == metrics::WindowRole::target;
      (target ? ev.targets : ev.backgrounds).push_back(w);
      (target ? ev.target_paths : ev.background_paths).push_back(where);
    }
  }
  if (auto e = s.opt_sub("esf")) {
    EsfSection esf;
    esf.columns = e->get<std::vector<std::size_t>>("columns");
    if (esf.columns.empty()) throw ConfigError("needs at least one column", e->path("columns"));
    esf.from_band_mm = parse_range(*e, "from_band_mm");
    esf.to_band_mm = parse_range(*e, "to_band_mm");
    esf.start_mm = e->opt<double>("start_mm");
    e->finish();
    ev.esf = esf;
  }
  if (auto q = s.opt_sub("ssim")) {
    ev.ssim.window = q->get<int>("window", ev.ssim.window);
    ev.ssim.sigma = q->get<double>("sigma", ev.ssim.sigma);
    ev.ssim.k1 = q->get<double>("k1", ev.ssim.k1);
    ev.ssim.k2 = q->get<double>("k2", ev.ssim.k2);
    q->finish();
    if (ev.ssim.window < 1 || ev.ssim.window % 2 == 0) throw ConfigError("must be odd and positive", q->path("window"));
  }
  s.finish();
  return ev;
}

inline InputsSection parse_inputs(Section s) {
  InputsSection in;
  in.pre = s.opt<std::string>("pre");
  in.post = s.opt<std::string>("post");
  in.field = s.opt<std::string>("field");
  in.strain = s.opt<std::string>("strain");
  in.truth = s.opt<std::string>("truth");
  if (const Json* rs = s.find("reports")) {
    if (!rs->is_array()) throw ConfigError("expected an array", s.path("reports"));
    for (std::size_t k = 0; k < rs->size(); ++k) {
      Section r((*rs)[k], s.path("reports") + "[" + std::to_string(k) + "]");
      in.reports.push_back({r.get<std::string>("name"), r.get<std::string>("path")});
      r.finish();
    }
  }
  s.finish();
  return in;
}

inline Json range_json(const std::pair<double, double>& r) { return Json::array({r.first, r.second}); }

template <class T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  Section root(j, "");
  RunConfig c;
  c.output = root.get<std::string>("output", c.output);
  c.seed = root.get<std::uint64_t>("seed", c.seed);
  if (auto s = root.opt_sub("phantom")) c.phantom = detail::parse_phantom(*s);
  if (auto s = root.opt_sub("dp")) c.dp = detail::parse_dp(*s);
  if (auto s = root.opt_sub("solver")) c.solver = detail::parse_solver(*s);
  else c.solver.config = c.solver.config.expanded();
  if (auto s = root.opt_sub("strain")) c.strain = detail::parse_strain(*s);
  if (auto s = root.opt_sub("evaluate")) c.evaluate = detail::parse_evaluate(*s);
  if (auto s = root.opt_sub("inputs")) c.inputs = detail::parse_inputs(*s);
  root.finish();
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

/// Fully expanded configuration; parse_config(to_json(c)) reproduces c.
inline Json to_json(const RunConfig& c) {
  using detail::opt_json;
  Json j;
  j["output"] = c.output;
  j["seed"] = c.seed;
  if (c.phantom) {
    const auto& p = *c.phantom;
    const auto& m = p.model;
    Json ph;
    ph["kind"] = phantom::to_string(m.kind);
    ph["height_mm"] = m.height_mm;
    ph["width_mm"] = m.width_mm;
    ph["compression"] = m.compression;
    ph["poisson"] = m.poisson;
    if (m.kind != phantom::ModelKind::rigid_shift) ph["moduli_kpa"] = m.moduli_kpa;
    if (m.kind == phantom::ModelKind::layers || m.kind == phantom::ModelKind::thin_layer)
      ph["boundaries_mm"] = m.boundaries_mm;
    if (m.kind == phantom::ModelKind::inclusion)
      ph["inclusion"] = {{"center_depth_mm", m.inclusion.center_depth_mm},
                         {"center_lateral_mm", m.inclusion.center_lateral_mm},
                         {"radius_mm", m.inclusion.radius_mm},
                         {"blend_mm", m.inclusion.blend()}};
    if (m.kind == phantom::ModelKind::rigid_shift)
      ph["shift"] = {{"samples", m.shift.samples},
                     {"top_mm", m.shift.top_mm},
                     {"height_mm", opt_json(m.shift.height_mm)},
                     {"array_warp", m.shift.array_warp}};
    const auto& g = p.grid.geometry;
    ph["grid"] = {{"rows", p.grid.rows},
                  {"lines", p.grid.lines},
                  {"axial_spacing_mm", g.axial_spacing_mm},
                  {"lateral_spacing_mm", g.lateral_spacing_mm},
                  {"center_mhz", g.center_mhz},
                  {"sampling_mhz", g.sampling_mhz}};
    ph["psf"] = {{"axial_sigma_wavelengths", p.axial_sigma_wavelengths},
                 {"lateral_sigma_mm", p.render.psf.lateral_sigma_mm},
                 {"support_sigmas", p.render.psf.support_sigmas}};
    ph["scatterers_per_cell"] = p.render.scatterers_per_cell;
    ph["peak_amplitude"] = p.render.peak_amplitude;
    ph["psnr_db"] = std::isinf(p.psnr_db) ? Json("none") : Json(p.psnr_db);
    j["phantom"] = ph;
  }
  const auto& d = c.dp.config;
  j["dp"] = {{"axial_range", opt_json(d.axial_range)},
             {"lateral_range", d.lateral_range},
             {"smoothness", opt_json(d.smoothness)},
             {"smoothness_factor", c.dp.smoothness_factor},
             {"data_cost", d.data_cost == dp::DataCost::absolute ? "absolute" : "squared"},
             {"row_decimation", d.row_decimation},
             {"out_of_bounds_penalty", opt_json(d.out_of_bounds_penalty)}};
  const auto& s = c.solver.config;
  Json so;
  so["preset"] = c.solver.preset ? Json(solver::to_string(*c.solver.preset)) : Json(nullptr);
  so["alpha1"] = s.alpha1, so["alpha2"] = s.alpha2, so["beta1"] = s.beta1, so["beta2"] = s.beta2;
  so["theta1"] = s.theta1, so["theta2"] = s.theta2, so["lambda1"] = s.lambda1, so["lambda2"] = s.lambda2;
  so["gamma"] = s.gamma;
  so["eta0"] = s.eta0, so["eta1"] = s.eta1, so["eta2"] = s.eta2, so["eta_data"] = s.eta_data;
  so["norms"] = {{"first_order", solver::to_string(s.first_order)},
                 {"second_order", solver::to_string(s.second_order)},
                 {"data", solver::to_string(s.data)}};
  so["iterations"] = s.iterations;
  so["tol"] = s.tol;
  so["trust_radius"] = s.trust_radius;
  so["tikhonov"] = opt_json(s.tikhonov);
  so["linear_tolerance"] = s.linear_tolerance;
  j["solver"] = so;
  j["strain"] = {{"kernel", c.strain.kernel},
                 {"display_range", c.strain.display_range ? detail::range_json(*c.strain.display_range) : Json(nullptr)}};
  if (c.evaluate) {
    const auto& e = *c.evaluate;
    Json ws = Json::array();
    for (const auto* list : {&e.targets, &e.backgrounds})
      for (const auto& w : *list)
        ws.push_back({{"top", w.top},
                      {"left", w.left},
                      {"height", w.height},
                      {"width", w.width},
                      {"role", w.role == metrics::WindowRole::target ? "target" : "background"}});
    Json ev;
    ev["windows"] = ws;
    if (e.esf)
      ev["esf"] = {{"columns", e.esf->columns},
                   {"from_band_mm", detail::range_json(e.esf->from_band_mm)},
                   {"to_band_mm", detail::range_json(e.esf->to_band_mm)},
                   {"start_mm", opt_json(e.esf->start_mm)}};
    ev["ssim"] = {{"window", e.ssim.window}, {"sigma", e.ssim.sigma}, {"k1", e.ssim.k1}, {"k2", e.ssim.k2}};
    j["evaluate"] = ev;
  }
  Json in;
  const auto& i = c.inputs;
  in["pre"] = opt_json(i.pre), in["post"] = opt_json(i.post), in["field"] = opt_json(i.field);
  in["strain"] = opt_json(i.strain), in["truth"] = opt_json(i.truth);
  in["reports"] = Json::array();
  for (const auto& r : i.reports) in["reports"].push_back({{"name", r.name}, {"path", r.path}});
  j["inputs"] = in;
  return j;
}

}  // namespace elasto::cli
