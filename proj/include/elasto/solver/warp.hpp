#pragma once

#include <cmath>
#include <cstddef>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::solver {

/// Central-difference gradients of an image (one-sided on the borders).
struct ImageGradients {
  Image axial;
  Image lateral;
};

inline ImageGradients image_gradients(const Image& img) {
  const std::size_t m = img.rows(), n = img.cols();
  ImageGradients g{Image(m, n), Image(m, n)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      if (m > 1) {
        if (i == 0) g.axial(i, j) = img(1, j) - img(0, j);
        else if (i + 1 == m) g.axial(i, j) = img(i, j) - img(i - 1, j);
        else g.axial(i, j) = 0.5 * (img(i + 1, j) - img(i - 1, j));
      }
      if (n > 1) {
        if (j == 0) g.lateral(i, j) = img(i, 1) - img(i, 0);
        else if (j + 1 == n) g.lateral(i, j) = img(i, j) - img(i, j - 1);
        else g.lateral(i, j) = 0.5 * (img(i, j + 1) - img(i, j - 1));
      }
    }
  return g;
}

namespace detail {

/// Cell index and fraction for continuous coordinate y in [0, size-1].
inline void cell(double y, std::size_t size, std::size_t& i0, double& f) {
  if (size == 1) {
    i0 = 0;
    f = 0.0;
    return;
  }
  double fl = std::floor(y);
  auto k = static_cast<std::size_t>(fl);
  if (k >= size - 1) k = size - 2;
  i0 = k;
  f = y - static_cast<double>(k);
}

}  // namespace detail

inline bool inside(const Image& img, double y, double x) {
  return y >= 0.0 && y <= static_cast<double>(img.rows() - 1) && x >= 0.0 && x <= static_cast<double>(img.cols() - 1);
}

/// Bilinear interpolation at (row y, column x); the point must be inside the image.
inline double bilinear(const Image& img, double y, double x) {
  std::size_t i0, j0;
  double fy, fx;
  detail::cell(y, img.rows(), i0, fy);
  detail::cell(x, img.cols(), j0, fx);
  std::size_t i1 = img.rows() > 1 ? i0 + 1 : i0, j1 = img.cols() > 1 ? j0 + 1 : j0;
  double top = (1.0 - fx) * img(i0, j0) + fx * img(i0, j1);
  double bot = (1.0 - fx) * img(i1, j0) + fx * img(i1, j1);
  return (1.0 - fy) * top + fy * bot;
}

/// I2 and its gradients sampled at (i + a, j + l), and the residual I1 - warped I2.
/// Samples warped outside I2 are invalid; their entries are 0.
struct WarpResult {
  Image warped;
  Image grad_axial;
  Image grad_lateral;
  Image residual;
  Grid2<unsigned char> valid;
  std::size_t valid_count = 0;
};

inline WarpResult warp_and_gradient(const RfFrame& pre, const RfFrame& post, const ImageGradients& grads,
                                    const DisplacementField& d) {
  const std::size_t m = post.rows(), n = post.lines();
  if (!pre.samples.same_shape(post.samples) || d.rows() != m || d.cols() != n)
    throw DomainError("frame and displacement shapes differ");
  WarpResult w{Image(m, n), Image(m, n), Image(m, n), Image(m, n), Grid2<unsigned char>(m, n, 0), 0};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      double y = static_cast<double>(i) + d.axial(i, j), x = static_cast<double>(j) + d.lateral(i, j);
      if (!inside(post.samples, y, x)) continue;
      w.valid(i, j) = 1;
      ++w.valid_count;
      w.warped(i, j) = bilinear(post.samples, y, x);
      w.grad_axial(i, j) = bilinear(grads.axial, y, x);
      w.grad_lateral(i, j) = bilinear(grads.lateral, y, x);
      w.residual(i, j) = pre(i, j) - w.warped(i, j);
    }
  return w;
}

inline WarpResult warp_and_gradient(const RfFrame& pre, const RfFrame& post, const DisplacementField& d) {
  return warp_and_gradient(pre, post, image_gradients(post.samples), d);
}

}  // namespace elasto::solver
