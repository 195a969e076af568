#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "elasto/error.hpp"

namespace elasto {

/// Dense 2-D array stored depth-fast: element (i, j) lives at j * rows + i.
/// Row index i is depth (sample along a line), column index j is the scan line.
template <class T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  /// One scan line (all depths of column j).
  std::span<T> column(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const T> column(std::size_t j) const noexcept { return {data_.data() + j * rows_, rows_}; }

  bool same_shape(const Grid2& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Grid2&, const Grid2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Image = Grid2<double>;

/// Acquisition geometry of an RF frame.
struct FrameGeometry {
  double axial_spacing_mm = 1540.0 / (2.0 * 40.0e6) * 1e3;  // c / (2 fs)
  double lateral_spacing_mm = 0.2;
  double center_mhz = 7.27;
  double sampling_mhz = 40.0;

  friend bool operator==(const FrameGeometry&, const FrameGeometry&) = default;
};

/// One RF echo field: rows() samples per line, lines() scan lines.
struct RfFrame {
  Image samples;
  FrameGeometry geometry;

  std::size_t rows() const noexcept { return samples.rows(); }
  std::size_t lines() const noexcept { return samples.cols(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return samples(i, j); }

  /// Throws InvariantError unless m, n >= 4, spacings > 0 and every sample is finite.
  void validate() const {
    if (rows() < 4 || lines() < 4) throw InvariantError("RF frame must be at least 4x4");
    if (!(geometry.axial_spacing_mm > 0.0) || !(geometry.lateral_spacing_mm > 0.0))
      throw InvariantError("RF frame spacings must be positive");
    for (double v : samples.data())
      if (!std::isfinite(v)) throw InvariantError("RF frame contains a non-finite sample");
  }
};

enum class DisplacementStage : unsigned char { integer_prior = 0, refined = 1 };

/// Per-sample axial (samples) and lateral (lines) displacement.
struct DisplacementField {
  Image axial;
  Image lateral;
  DisplacementStage stage = DisplacementStage::refined;

  DisplacementField() = default;
  DisplacementField(std::size_t m, std::size_t n, DisplacementStage s = DisplacementStage::refined)
      : axial(m, n, 0.0), lateral(m, n, 0.0), stage(s) {}

  std::size_t rows() const noexcept { return axial.rows(); }
  std::size_t cols() const noexcept { return axial.cols(); }

  void validate() const {
    if (!axial.same_shape(lateral)) throw InvariantError("axial and lateral planes differ in shape");
    if (stage == DisplacementStage::integer_prior) {
      auto whole = [](double v) { return std::isfinite(v) && v == std::round(v); };
      if (!std::all_of(axial.data().begin(), axial.data().end(), whole) ||
          !std::all_of(lateral.data().begin(), lateral.data().end(), whole))
        throw InvariantError("integer_prior field contains a non-integer entry");
    }
  }
};

/// Axial strain from least-squares differentiation with an odd kernel.
/// The first and last kernel/2 rows are invalid (kernel does not fit); their values carry no meaning.
struct StrainImage {
  Image values;
  int kernel = 3;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  std::size_t first_valid_row() const noexcept { return static_cast<std::size_t>(kernel / 2); }
  /// One past the last valid row.
  std::size_t end_valid_row() const noexcept {
    auto h = static_cast<std::size_t>(kernel / 2);
    return rows() > h ? rows() - h : 0;
  }
  bool row_valid(std::size_t i) const noexcept { return i >= first_valid_row() && i < end_valid_row(); }

  void validate() const {
    if (kernel < 3 || kernel % 2 == 0) throw InvariantError("strain kernel length must be odd and >= 3");
  }
};

}  // namespace elasto
