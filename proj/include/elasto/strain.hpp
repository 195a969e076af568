#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::strain {

/// Axial strain as the OLS slope of axial displacement over a centred window
/// of `kernel` samples. Rows where the window does not fit are set to 0.
inline StrainImage lsq_strain(const DisplacementField& field, int kernel = 3) {
  if (kernel < 3 || kernel % 2 == 0) throw DomainError("strain kernel must be odd and >= 3");
  const std::size_t m = field.rows(), n = field.cols();
  if (static_cast<std::size_t>(kernel) > m) throw DomainError("strain kernel longer than the displacement column");
  const int h = kernel / 2;
  // Slope = sum_k k * a(i+k) / sum_k k^2 with k = -h..h.
  double sxx = 0.0;
  for (int k = -h; k <= h; ++k) sxx += static_cast<double>(k) * k;
  StrainImage s{Image(m, n, 0.0), kernel};
  for (std::size_t j = 0; j < n; ++j) {
    auto a = field.axial.column(j);
    for (std::size_t i = static_cast<std::size_t>(h); i + h < m; ++i) {
      double sxy = 0.0;
      for (int k = 1; k <= h; ++k) sxy += k * (a[i + k] - a[i - k]);
      s.values(i, j) = sxy / sxx;
    }
  }
  return s;
}

struct EsfProfile {
  std::vector<double> depth_mm;
  std::vector<double> strain;
  std::size_t column = 0;
};

/// Valid rows of one strain column with their depths (row index * axial spacing).
inline EsfProfile esf_profile(const StrainImage& s, std::size_t column, double axial_spacing_mm) {
  if (column >= s.cols()) throw DomainError("ESF column outside the strain image");
  if (!(axial_spacing_mm > 0.0)) throw DomainError("axial spacing must be positive");
  EsfProfile p;
  p.column = column;
  for (std::size_t i = s.first_valid_row(); i < s.end_valid_row(); ++i) {
    p.depth_mm.push_back(static_cast<double>(i) * axial_spacing_mm);
    p.strain.push_back(s.values(i, column));
  }
  return p;
}

/// Median strain of the profile over depths in [from_mm, to_mm].
inline double plateau(const EsfProfile& p, double from_mm, double to_mm) {
  std::vector<double> v;
  for (std::size_t k = 0; k < p.depth_mm.size(); ++k)
    if (p.depth_mm[k] >= from_mm && p.depth_mm[k] <= to_mm) v.push_back(p.strain[k]);
  if (v.empty()) throw DomainError("plateau band contains no samples");
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// 10%-90% rise distance of the transition from plateau `from` to plateau `to`
/// along increasing depth, searching depths >= start_mm. The 90% point is the first
/// interpolated crossing of 0.9 in normalized units; the 10% point is the last
/// crossing of 0.1 before it. Never less than one sample spacing, so an ideal
/// step resolves to one spacing.
inline double edge_resolution(const EsfProfile& p, double from, double to, double start_mm = -INFINITY) {
  if (from == to) throw DomainError("edge plateaus must differ");
  const std::size_t N = p.strain.size();
  auto norm = [&](std::size_t k) { return (p.strain[k] - from) / (to - from); };
  auto cross = [&](std::size_t k, double level) {
    double u0 = norm(k - 1), u1 = norm(k);
    return p.depth_mm[k - 1] + (level - u0) / (u1 - u0) * (p.depth_mm[k] - p.depth_mm[k - 1]);
  };
  std::size_t k90 = 0;
  for (std::size_t k = 1; k < N; ++k) {
    if (p.depth_mm[k - 1] < start_mm) continue;
    if (norm(k - 1) < 0.9 && norm(k) >= 0.9) {
      k90 = k;
      break;
    }
  }
  if (k90 == 0) throw DomainError("edge not found");
  for (std::size_t k = k90; k >= 1; --k) {
    if (p.depth_mm[k - 1] < start_mm) break;
    if (norm(k - 1) <= 0.1 && norm(k) > 0.1)
      return std::max(cross(k90, 0.9) - cross(k, 0.1), p.depth_mm[k90] - p.depth_mm[k90 - 1]);
  }
  throw DomainError("edge not found");
}

/// Depth where the profile first crosses the midpoint between the plateaus (at or after start_mm).
inline double half_crossing(const EsfProfile& p, double from, double to, double start_mm = -INFINITY) {
  if (from == to) throw DomainError("edge plateaus must differ");
  for (std::size_t k = 1; k < p.strain.size(); ++k) {
    if (p.depth_mm[k - 1] < start_mm) continue;
    double u0 = (p.strain[k - 1] - from) / (to - from), u1 = (p.strain[k] - from) / (to - from);
    if (u0 < 0.5 && u1 >= 0.5)
      return p.depth_mm[k - 1] + (0.5 - u0) / (u1 - u0) * (p.depth_mm[k] - p.depth_mm[k - 1]);
  }
  throw DomainError("edge not found");
}

}  // namespace elasto::strain
