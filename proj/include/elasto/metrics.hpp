#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::metrics {

enum class WindowRole { target, background };

/// Rectangular window: rows [top, top+height), lines [left, left+width).
struct WindowSpec {
  std::size_t top = 0, left = 0, height = 0, width = 0;
  WindowRole role = WindowRole::background;
};

struct WindowStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample (N-1) standard deviation over the window.
inline WindowStats window_stats(const StrainImage& s, const WindowSpec& w) {
  if (w.height * w.width < 4) throw DomainError("window area must be at least 4 samples");
  if (w.top + w.height > s.rows() || w.left + w.width > s.cols()) throw DomainError("window outside the image");
  if (!s.row_valid(w.top) || !s.row_valid(w.top + w.height - 1)) throw DomainError("window overlaps invalid rows");
  double sum = 0.0;
  for (std::size_t j = w.left; j < w.left + w.width; ++j)
    for (std::size_t i = w.top; i < w.top + w.height; ++i) sum += s.values(i, j);
  const double N = static_cast<double>(w.height * w.width);
  double mean = sum / N, ss = 0.0;
  for (std::size_t j = w.left; j < w.left + w.width; ++j)
    for (std::size_t i = w.top; i < w.top + w.height; ++i) ss += (s.values(i, j) - mean) * (s.values(i, j) - mean);
  return {mean, std::sqrt(ss / (N - 1.0))};
}

/// A metric value, or nullopt when its denominator vanishes.
using Metric = std::optional<double>;

inline Metric snr(const WindowStats& background) {
  if (background.std == 0.0) return std::nullopt;
  return background.mean / background.std;
}

inline Metric cnr(const WindowStats& target, const WindowStats& background) {
  double v = target.std * target.std + background.std * background.std;
  if (v == 0.0) return std::nullopt;
  double d = background.mean - target.mean;
  return std::sqrt(2.0 * d * d / v);
}

inline Metric strain_ratio(const WindowStats& target, const WindowStats& background) {
  if (background.mean == 0.0) return std::nullopt;
  return target.mean / background.mean;
}

namespace detail {

inline void check_same(const StrainImage& a, const StrainImage& b) {
  if (!a.values.same_shape(b.values)) throw DomainError("strain images differ in shape");
}

/// Rows valid in both images.
inline std::pair<std::size_t, std::size_t> common_rows(const StrainImage& a, const StrainImage& b) {
  return {std::max(a.first_valid_row(), b.first_valid_row()), std::min(a.end_valid_row(), b.end_valid_row())};
}

inline std::vector<double> gaussian_window(int radius, double sigma) {
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) sum += w[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace detail

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;
};

/// Mean SSIM over every window position lying entirely inside the rows valid in
/// both images. Dynamic range L = max - min of the ground truth over those rows.
inline double mean_ssim(const StrainImage& ground, const StrainImage& estimate, const SsimOptions& o = {}) {
  detail::check_same(ground, estimate);
  if (o.window < 1 || o.window % 2 == 0) throw DomainError("SSIM window must be odd");
  auto [r0, r1] = detail::common_rows(ground, estimate);
  const std::size_t n = ground.cols(), W = static_cast<std::size_t>(o.window);
  if (r1 < r0 + W || n < W) throw DomainError("image smaller than the SSIM window");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = r0; i < r1; ++i) {
      lo = std::min(lo, ground.values(i, j));
      hi = std::max(hi, ground.values(i, j));
    }
  const double L = hi - lo;
  const double c1 = (o.k1 * L) * (o.k1 * L), c2 = (o.k2 * L) * (o.k2 * L);
  const auto g = detail::gaussian_window(o.window / 2, o.sigma);

  // Separable weighted moments: filter along depth, then across lines.
  const std::size_t rows = r1 - r0, orow = rows - W + 1, ocol = n - W + 1;
  enum { X, Y, XX, YY, XY, K };
  std::vector<Image> vert(K, Image(orow, n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < orow; ++i) {
      double acc[K] = {};
      for (std::size_t k = 0; k < W; ++k) {
        double x = ground.values(r0 + i + k, j), y = estimate.values(r0 + i + k, j), w = g[k];
        acc[X] += w * x;
        acc[Y] += w * y;
        acc[XX] += w * x * x;
        acc[YY] += w * y * y;
        acc[XY] += w * x * y;
      }
      for (int q = 0; q < K; ++q) vert[q](i, j) = acc[q];
    }
  double total = 0.0;
  for (std::size_t j = 0; j < ocol; ++j)
    for (std::size_t i = 0; i < orow; ++i) {
      double acc[K] = {};
      for (std::size_t k = 0; k < W; ++k)
        for (int q = 0; q < K; ++q) acc[q] += g[k] * vert[q](i, j + k);
      double mx = acc[X], my = acc[Y];
      double vx = acc[XX] - mx * mx, vy = acc[YY] - my * my, cxy = acc[XY] - mx * my;
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  return total / static_cast<double>(orow * ocol);
}

/// sqrt of the summed squared difference over rows valid in both images.
inline double l2_error(const StrainImage& ground, const StrainImage& estimate) {
  detail::check_same(ground, estimate);
  auto [r0, r1] = detail::common_rows(ground, estimate);
  double s = 0.0;
  for (std::size_t j = 0; j < ground.cols(); ++j)
    for (std::size_t i = r0; i < r1; ++i) {
      double d = estimate.values(i, j) - ground.values(i, j);
      s += d * d;
    }
  return std::sqrt(s);
}

/// CNR for every (target, background) pair, target-major.
inline std::vector<Metric> cnr_histogram(const StrainImage& s, const std::vector<WindowSpec>& targets,
                                         const std::vector<WindowSpec>& backgrounds) {
  std::vector<WindowStats> bs;
  for (const auto& b : backgrounds) bs.push_back(window_stats(s, b));
  std::vector<Metric> out;
  out.reserve(targets.size() * backgrounds.size());
  for (const auto& t : targets) {
    auto ts = window_stats(s, t);
    for (const auto& b : bs) out.push_back(cnr(ts, b));
  }
  return out;
}

/// Mean over the non-degenerate entries; nullopt if there are none.
inline Metric mean_defined(const std::vector<Metric>& v) {
  double s = 0.0;
  std::size_t k = 0;
  for (const auto& x : v)
    if (x) {
      s += *x;
      ++k;
    }
  if (k == 0) return std::nullopt;
  return s / static_cast<double>(k);
}

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300, eps = 1e-15;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int k = 1; k <= 10000; ++k) {
    double m2 = 2.0 * k;
    double aa = k * (b - k) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + k) * (a + b + k) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw DomainError("incomplete beta requires a, b > 0");
  if (!(x >= 0 && x <= 1)) throw DomainError("incomplete beta requires 0 <= x <= 1");
  if (x == 0 || x == 1) return x;
  double lnfront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lnfront) * detail::beta_cf(a, b, x) / a;
  return 1.0 - std::exp(lnfront) * detail::beta_cf(b, a, 1.0 - x) / b;
}

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  /// Zero-variance differences with nonzero mean: t is infinite and p is 0 by convention.
  bool degenerate = false;
  /// p fell below 1e-300 and is reported as 0.
  bool underflow = false;
};

/// Two-tailed paired Student t-test on x - y.
inline TTest paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("paired samples differ in length");
  if (x.size() < 2) throw DomainError("paired t-test needs at least 2 pairs");
  const std::size_t n = x.size();
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += x[k] - y[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) ss += (x[k] - y[k] - mean) * (x[k] - y[k] - mean);
  TTest r;
  r.df = static_cast<int>(n) - 1;
  double sd = std::sqrt(ss / (n - 1.0));
  if (mean == 0.0) return r;
  if (sd == 0.0) {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  if (r.p < 1e-300) {
    r.p = 0.0;
    r.underflow = true;
  }
  return r;
}

}  // namespace elasto::metrics
