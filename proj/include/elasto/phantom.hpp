#pragma once

// Synthetic phantoms: analytic deformation fields (layered media under uniform
// stress, a stiff circular inclusion surrogate, rigid band shifts) and a
// scatterer-convolution speckle renderer producing pre/post RF frame pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::phantom {

inline constexpr double kSoundSpeed = 1540.0;  // m/s

enum class ModelKind { layers, thin_layer, inclusion, rigid_shift };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::layers: return "layers";
    case ModelKind::thin_layer: return "thin_layer";
    case ModelKind::inclusion: return "inclusion";
    case ModelKind::rigid_shift: return "rigid_shift";
  }
  return "?";
}

struct InclusionGeometry {
  double center_depth_mm = 0.0;
  double center_lateral_mm = 0.0;
  double radius_mm = 0.0;
  /// Width of the radial ramp between inclusion and background; radius/4 when unset.
  std::optional<double> blend_mm;

  double blend() const { return blend_mm.value_or(radius_mm / 4.0); }
};

struct BandShift {
  double samples = 0.0;
  double sample_mm = FrameGeometry{}.axial_spacing_mm;
  double top_mm = 0.0;
  /// Band height; the band extends to the bottom of the region when unset.
  std::optional<double> height_mm;
  /// Build the post frame by shifting rows of the pre frame instead of moving scatterers.
  bool array_warp = false;
};

/// Region is [0, height] in depth and [0, width] laterally; the centerline is width / 2.
struct DeformationModel {
  ModelKind kind = ModelKind::layers;
  double height_mm = 40.0;
  double width_mm = 10.0;
  /// Interior layer boundaries (layers, thin_layer).
  std::vector<double> boundaries_mm;
  /// Per-layer moduli, or {background, inclusion} for the inclusion model.
  std::vector<double> moduli_kpa;
  double compression = 0.04;
  double poisson = 0.49;
  InclusionGeometry inclusion;
  BandShift shift;

  double centerline_mm() const { return width_mm / 2.0; }

  void validate() const {
    if (!(height_mm > 0.0) || !(width_mm > 0.0)) throw InvariantError("region extents must be positive");
    if (kind == ModelKind::rigid_shift) {
      if (!(shift.sample_mm > 0.0)) throw InvariantError("shift sample size must be positive");
      if (shift.array_warp && shift.samples != std::round(shift.samples))
        throw InvariantError("array-warped shift must be a whole number of samples");
      return;
    }
    if (!(compression > 0.0 && compression <= 0.1)) throw InvariantError("compression must lie in (0, 0.1]");
    for (double e : moduli_kpa)
      if (!(e > 0.0)) throw InvariantError("elastic moduli must be positive");
    if (kind == ModelKind::inclusion) {
      if (moduli_kpa.size() != 2) throw InvariantError("inclusion model needs {background, inclusion} moduli");
      if (inclusion.radius_mm < 0.0 || inclusion.blend() < 0.0)
        throw InvariantError("inclusion radius and blend must be non-negative");
      return;
    }
    if (moduli_kpa.size() != boundaries_mm.size() + 1)
      throw InvariantError("need exactly one modulus per layer");
    double prev = 0.0;
    for (double b : boundaries_mm) {
      if (!(b > prev) || !(b < height_mm))
        throw InvariantError("layer boundaries must be strictly increasing and inside the region");
      prev = b;
    }
    if (kind == ModelKind::thin_layer && boundaries_mm.size() != 2)
      throw InvariantError("thin_layer model has exactly one embedded band");
  }
};

/// Homogeneous background of modulus `background_kpa` with a band of `band_kpa`.
inline DeformationModel thin_layer_model(double height_mm, double width_mm, double band_top_mm,
                                         double band_height_mm, double background_kpa, double band_kpa,
                                         double compression) {
  DeformationModel m;
  m.kind = ModelKind::thin_layer;
  m.height_mm = height_mm;
  m.width_mm = width_mm;
  m.boundaries_mm = {band_top_mm, band_top_mm + band_height_mm};
  m.moduli_kpa = {background_kpa, band_kpa, background_kpa};
  m.compression = compression;
  return m;
}

struct Displacement2 {
  double axial_mm = 0.0;
  double lateral_mm = 0.0;
};

namespace detail {

inline void check_inside(const DeformationModel& m, double depth, double lateral) {
  constexpr double slack = 1e-9;
  if (depth < -slack || depth > m.height_mm + slack || lateral < -slack || lateral > m.width_mm + slack)
    throw DomainError("point (" + std::to_string(depth) + ", " + std::to_string(lateral) +
                      ") mm lies outside the phantom region");
}

/// Gauss-Legendre nodes/weights on [-1, 1].
template <int N>
struct GaussLegendre {
  std::array<double, N> x{};
  std::array<double, N> w{};
  GaussLegendre() {
    for (int k = 0; k < N; ++k) {
      double z = std::cos(std::numbers::pi * (k + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int r = 2; r <= N; ++r) {
          double p2 = ((2.0 * r - 1.0) * z * p1 - (r - 1.0) * p0) / r;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (z * p1 - p0) / (z * z - 1.0);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1.0, p1 = z;
      for (int r = 2; r <= N; ++r) {
        double p2 = ((2.0 * r - 1.0) * z * p1 - (r - 1.0) * p0) / r;
        p0 = p1;
        p1 = p2;
      }
      dp = N * (z * p1 - p0) / (z * z - 1.0);
      x[k] = z;
      w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

inline double smootherstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

}  // namespace detail

/// Per-layer axial strains under uniform stress (series springs): strain_k is
/// proportional to 1/E_k and the bottom of the region moves by -compression * height.
inline std::vector<double> layer_strains(const DeformationModel& m) {
  std::vector<double> heights;
  double top = 0.0;
  for (double b : m.boundaries_mm) {
    heights.push_back(b - top);
    top = b;
  }
  heights.push_back(m.height_mm - top);
  double compliance = 0.0;
  for (std::size_t k = 0; k < heights.size(); ++k) compliance += heights[k] / m.moduli_kpa[k];
  std::vector<double> strains(heights.size());
  for (std::size_t k = 0; k < heights.size(); ++k)
    strains[k] = -m.compression * m.height_mm * (1.0 / m.moduli_kpa[k]) / compliance;
  return strains;
}

inline std::size_t layer_index(const DeformationModel& m, double depth) {
  return static_cast<std::size_t>(std::upper_bound(m.boundaries_mm.begin(), m.boundaries_mm.end(), depth) -
                                  m.boundaries_mm.begin());
}

inline Displacement2 analytic_layer_displacement(const DeformationModel& m, double depth, double lateral) {
  if (m.kind != ModelKind::layers && m.kind != ModelKind::thin_layer)
    throw DomainError("layer displacement requires a layers or thin_layer model");
  detail::check_inside(m, depth, lateral);
  auto strains = layer_strains(m);
  double axial = 0.0, top = 0.0;
  for (std::size_t k = 0; k < strains.size(); ++k) {
    double bottom = k < m.boundaries_mm.size() ? m.boundaries_mm[k] : m.height_mm;
    if (depth <= top) break;
    axial += strains[k] * (std::min(depth, bottom) - top);
    top = bottom;
  }
  double local = strains[layer_index(m, depth)];
  return {axial, -m.poisson * local * (lateral - m.centerline_mm())};
}

/// Fraction of inclusion stiffness at radius r: 1 inside, 0 outside, quintic ramp in between.
inline double inclusion_weight(const InclusionGeometry& g, double r) {
  if (g.radius_mm <= 0.0) return 0.0;
  double b = g.blend();
  if (b <= 0.0) return r <= g.radius_mm ? 1.0 : 0.0;
  return 1.0 - detail::smootherstep((r - (g.radius_mm - b / 2.0)) / b);
}

inline double inclusion_strain(const DeformationModel& m, double depth, double lateral) {
  const auto& g = m.inclusion;
  double background = -m.compression;
  double kappa = 1.0 - m.moduli_kpa[0] / m.moduli_kpa[1];
  double r = std::hypot(depth - g.center_depth_mm, lateral - g.center_lateral_mm);
  return background * (1.0 - kappa * inclusion_weight(g, r));
}

inline Displacement2 analytic_inclusion_displacement(const DeformationModel& m, double depth, double lateral) {
  if (m.kind != ModelKind::inclusion) throw DomainError("inclusion displacement requires an inclusion model");
  detail::check_inside(m, depth, lateral);
  const auto& g = m.inclusion;
  double background = -m.compression;
  double kappa = 1.0 - m.moduli_kpa[0] / m.moduli_kpa[1];
  double axial = background * depth;

  // Subtract background * kappa * integral_0^depth weight(r(z)) dz, integrating the
  // plateau exactly and the ramp pieces by composite Gauss-Legendre.
  double dx = std::abs(lateral - g.center_lateral_mm);
  double b = g.blend();
  double outer = g.radius_mm + b / 2.0;
  if (g.radius_mm > 0.0 && dx < outer && depth > 0.0) {
    double inner = g.radius_mm - b / 2.0;
    double half_out = std::sqrt(outer * outer - dx * dx);
    std::vector<double> cuts = {g.center_depth_mm - half_out, g.center_depth_mm + half_out};
    if (dx < inner) {
      double half_in = std::sqrt(inner * inner - dx * dx);
      cuts.push_back(g.center_depth_mm - half_in);
      cuts.push_back(g.center_depth_mm + half_in);
    }
    std::sort(cuts.begin(), cuts.end());
    static const detail::GaussLegendre<16> gl;
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double lo = std::max(cuts[k], 0.0), hi = std::min(cuts[k + 1], depth);
      if (hi <= lo) continue;
      double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      double rmid = std::hypot(mid - g.center_depth_mm, dx);
      if (dx < inner && rmid <= inner) {
        integral += hi - lo;
        continue;
      }
      constexpr int panels = 8;
      double h = (hi - lo) / panels;
      for (int p = 0; p < panels; ++p) {
        double a = lo + p * h;
        for (int q = 0; q < 16; ++q) {
          double z = a + 0.5 * h * (gl.x[q] + 1.0);
          integral += 0.5 * h * gl.w[q] * inclusion_weight(g, std::hypot(z - g.center_depth_mm, dx));
        }
      }
    }
    axial -= background * kappa * integral;
  }
  double local = inclusion_strain(m, depth, lateral);
  return {axial, -m.poisson * local * (lateral - m.centerline_mm())};
}

inline bool in_shift_band(const BandShift& s, double depth) {
  return depth >= s.top_mm && (!s.height_mm || depth < s.top_mm + *s.height_mm);
}

/// Dispatch on model kind.
inline Displacement2 analytic_displacement(const DeformationModel& m, double depth, double lateral) {
  switch (m.kind) {
    case ModelKind::layers:
    case ModelKind::thin_layer: return analytic_layer_displacement(m, depth, lateral);
    case ModelKind::inclusion: return analytic_inclusion_displacement(m, depth, lateral);
    case ModelKind::rigid_shift:
      detail::check_inside(m, depth, lateral);
      return {in_shift_band(m.shift, depth) ? m.shift.samples * m.shift.sample_mm : 0.0, 0.0};
  }
  return {};
}

/// d(axial displacement)/d(depth), evaluated in closed form.
inline double analytic_axial_strain(const DeformationModel& m, double depth, double lateral) {
  detail::check_inside(m, depth, lateral);
  switch (m.kind) {
    case ModelKind::layers:
    case ModelKind::thin_layer: return layer_strains(m)[layer_index(m, depth)];
    case ModelKind::inclusion: return inclusion_strain(m, depth, lateral);
    case ModelKind::rigid_shift: return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Speckle rendering

struct ScattererField {
  std::vector<double> depth_mm;
  std::vector<double> lateral_mm;
  std::vector<double> amplitude;
  double height_mm = 0.0;
  double width_mm = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return amplitude.size(); }
};

/// Gaussian-envelope pulse modulated at the center frequency along depth.
struct Psf {
  double center_mhz = 7.27;
  double axial_sigma_mm = 1.5 * kSoundSpeed / 7.27e6 * 1e3;  // 1.5 wavelengths
  double lateral_sigma_mm = 0.4;
  /// Envelope truncation in standard deviations.
  double support_sigmas = 4.0;

  /// Round-trip wavenumber along depth (rad/mm): the echo phase advances twice per wavelength.
  double axial_wavenumber() const { return 4.0 * std::numbers::pi * center_mhz * 1e6 / kSoundSpeed * 1e-3; }

  double operator()(double d_depth, double d_lateral) const {
    return std::exp(-0.5 * d_depth * d_depth / (axial_sigma_mm * axial_sigma_mm)) *
           std::cos(axial_wavenumber() * d_depth) *
           std::exp(-0.5 * d_lateral * d_lateral / (lateral_sigma_mm * lateral_sigma_mm));
  }

  /// Area of one resolution cell: product of the axial and lateral envelope FWHMs.
  double resolution_cell_mm2() const {
    const double fwhm = 2.0 * std::sqrt(2.0 * std::log(2.0));
    return fwhm * axial_sigma_mm * fwhm * lateral_sigma_mm;
  }
};

/// Sampling lattice of a rendered frame: depth_i = i * axial spacing,
/// lateral_j = lateral_origin + j * lateral spacing.
struct GridSpec {
  std::size_t rows = 0;
  std::size_t lines = 0;
  FrameGeometry geometry;
  double lateral_origin_mm = 0.0;

  double depth(std::size_t i) const { return static_cast<double>(i) * geometry.axial_spacing_mm; }
  double lateral(std::size_t j) const {
    return lateral_origin_mm + static_cast<double>(j) * geometry.lateral_spacing_mm;
  }
};

/// Uniformly placed scatterers with standard normal amplitudes; fully determined by `seed`.
inline ScattererField make_scatterers(double height_mm, double width_mm, double per_mm2, std::uint64_t seed) {
  ScattererField f;
  f.height_mm = height_mm;
  f.width_mm = width_mm;
  f.seed = seed;
  auto count = static_cast<std::size_t>(std::llround(per_mm2 * height_mm * width_mm));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, height_mm), ul(0.0, width_mm);
  std::normal_distribution<double> amp(0.0, 1.0);
  f.depth_mm.reserve(count);
  f.lateral_mm.reserve(count);
  f.amplitude.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    f.depth_mm.push_back(ud(rng));
    f.lateral_mm.push_back(ul(rng));
    f.amplitude.push_back(amp(rng));
  }
  return f;
}

/// frame(i, j) = sum over scatterers of amplitude * psf(depth_i - z_s, lateral_j - x_s).
inline RfFrame render_rf(const ScattererField& scat, const GridSpec& grid, const Psf& psf = {}) {
  if (!(grid.geometry.axial_spacing_mm > 0.0) || !(grid.geometry.lateral_spacing_mm > 0.0))
    throw DomainError("grid spacings must be positive");
  RfFrame frame{Image(grid.rows, grid.lines, 0.0), grid.geometry};
  const double dz = grid.geometry.axial_spacing_mm, dx = grid.geometry.lateral_spacing_mm;
  const double reach_z = psf.support_sigmas * psf.axial_sigma_mm;
  const double reach_x = psf.support_sigmas * psf.lateral_sigma_mm;
  const double k = psf.axial_wavenumber();
  const double inv_az = 1.0 / (2.0 * psf.axial_sigma_mm * psf.axial_sigma_mm);
  const double inv_lx = 1.0 / (2.0 * psf.lateral_sigma_mm * psf.lateral_sigma_mm);
  const auto m = static_cast<long>(grid.rows), n = static_cast<long>(grid.lines);
  std::vector<double> axial_factor;
  for (std::size_t s = 0; s < scat.size(); ++s) {
    const double zs = scat.depth_mm[s], xs = scat.lateral_mm[s];
    long i0 = std::max(0L, static_cast<long>(std::ceil((zs - reach_z) / dz)));
    long i1 = std::min(m - 1, static_cast<long>(std::floor((zs + reach_z) / dz)));
    long j0 = std::max(0L, static_cast<long>(std::ceil((xs - reach_x - grid.lateral_origin_mm) / dx)));
    long j1 = std::min(n - 1, static_cast<long>(std::floor((xs + reach_x - grid.lateral_origin_mm) / dx)));
    if (i0 > i1 || j0 > j1) continue;
    axial_factor.resize(static_cast<std::size_t>(i1 - i0 + 1));
    for (long i = i0; i <= i1; ++i) {
      double d = grid.depth(static_cast<std::size_t>(i)) - zs;
      axial_factor[static_cast<std::size_t>(i - i0)] = std::exp(-d * d * inv_az) * std::cos(k * d);
    }
    for (long j = j0; j <= j1; ++j) {
      double d = grid.lateral(static_cast<std::size_t>(j)) - xs;
      double lat = scat.amplitude[s] * std::exp(-d * d * inv_lx);
      auto col = frame.samples.column(static_cast<std::size_t>(j));
      for (long i = i0; i <= i1; ++i) col[static_cast<std::size_t>(i)] += lat * axial_factor[static_cast<std::size_t>(i - i0)];
    }
  }
  return frame;
}

/// PSNR sentinel meaning "add no noise".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds N(0, sigma^2) noise, sigma = max|frame| / 10^(psnr_db / 20).
inline RfFrame add_noise(const RfFrame& frame, double psnr_db, std::uint64_t seed) {
  if (std::isnan(psnr_db)) throw DomainError("psnr must not be NaN");
  RfFrame out = frame;
  if (std::isinf(psnr_db) && psnr_db > 0) return out;
  double peak = 0.0;
  for (double v : frame.samples.data()) peak = std::max(peak, std::abs(v));
  double sigma = peak / std::pow(10.0, psnr_db / 20.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : out.samples.data()) v += sigma * noise(rng);
  return out;
}

inline double noise_sigma(double peak, double psnr_db) { return peak / std::pow(10.0, psnr_db / 20.0); }

struct GroundTruth {
  DisplacementField displacement;
  StrainImage strain;
};

struct PhantomPair {
  RfFrame pre;
  RfFrame post;
  GroundTruth truth;
  std::size_t scatterers = 0;
};

struct RenderOptions {
  Psf psf;
  double scatterers_per_cell = 12.0;
  /// Both frames are scaled so that max|pre| (before noise) equals this value.
  double peak_amplitude = 1.0;
};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Grid of `rows` x `lines` centered laterally in the model region.
inline GridSpec centered_grid(const DeformationModel& m, std::size_t rows, std::size_t lines, FrameGeometry g) {
  GridSpec grid{rows, lines, g, 0.0};
  grid.lateral_origin_mm = m.centerline_mm() - 0.5 * static_cast<double>(lines - 1) * g.lateral_spacing_mm;
  return grid;
}

inline GroundTruth sample_ground_truth(const DeformationModel& m, const GridSpec& grid) {
  GroundTruth t{DisplacementField(grid.rows, grid.lines, DisplacementStage::refined),
                StrainImage{Image(grid.rows, grid.lines, 0.0), 3}};
  for (std::size_t j = 0; j < grid.lines; ++j)
    for (std::size_t i = 0; i < grid.rows; ++i) {
      double z = grid.depth(i), x = grid.lateral(j);
      auto u = analytic_displacement(m, z, x);
      t.displacement.axial(i, j) = u.axial_mm / grid.geometry.axial_spacing_mm;
      t.displacement.lateral(i, j) = u.lateral_mm / grid.geometry.lateral_spacing_mm;
      t.strain.values(i, j) = analytic_axial_strain(m, z, x);
    }
  return t;
}

inline PhantomPair make_phantom_pair(DeformationModel model, const GridSpec& grid, std::uint64_t seed,
                                     double psnr_db, const RenderOptions& opt = {}) {
  if (model.kind == ModelKind::rigid_shift) model.shift.sample_mm = grid.geometry.axial_spacing_mm;
  model.validate();
  if (grid.rows < 4 || grid.lines < 4) throw InvariantError("grid must be at least 4x4");
  if (grid.depth(grid.rows - 1) > model.height_mm + 1e-9 || grid.lateral(0) < -1e-9 ||
      grid.lateral(grid.lines - 1) > model.width_mm + 1e-9)
    throw InvariantError("imaging grid extends beyond the phantom region");

  auto density = opt.scatterers_per_cell / opt.psf.resolution_cell_mm2();
  auto scat = make_scatterers(model.height_mm, model.width_mm, density, mix_seed(seed, 0));

  PhantomPair pair;
  pair.scatterers = scat.size();
  pair.pre = render_rf(scat, grid, opt.psf);
  pair.truth = sample_ground_truth(model, grid);

  if (model.kind == ModelKind::rigid_shift && model.shift.array_warp) {
    pair.post = pair.pre;
    auto k = static_cast<long>(model.shift.samples);
    for (std::size_t j = 0; j < grid.lines; ++j)
      for (std::size_t i = 0; i < grid.rows; ++i) {
        if (!in_shift_band(model.shift, grid.depth(i))) continue;
        long dst = static_cast<long>(i) + k;
        if (dst >= 0 && dst < static_cast<long>(grid.rows)) pair.post.samples(static_cast<std::size_t>(dst), j) = pair.pre.samples(i, j);
      }
  } else {
    ScattererField moved = scat;
    for (std::size_t s = 0; s < scat.size(); ++s) {
      auto u = analytic_displacement(model, scat.depth_mm[s], scat.lateral_mm[s]);
      moved.depth_mm[s] += u.axial_mm;
      moved.lateral_mm[s] += u.lateral_mm;
    }
    pair.post = render_rf(moved, grid, opt.psf);
  }

  double peak = 0.0;
  for (double v : pair.pre.samples.data()) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    double scale = opt.peak_amplitude / peak;
    for (double& v : pair.pre.samples.data()) v *= scale;
    for (double& v : pair.post.samples.data()) v *= scale;
  }
  pair.pre = add_noise(pair.pre, psnr_db, mix_seed(seed, 1));
  pair.post = add_noise(pair.post, psnr_db, mix_seed(seed, 2));
  return pair;
}

}  // namespace elasto::phantom
