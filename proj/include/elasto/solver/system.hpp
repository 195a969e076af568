#pragma once

// Assembly of the IRLS/Gauss-Newton normal equations
//
//   (H + D + D2 + delta I) dd = H1 mu - (D + D2) d + b_s
//
// for the refinement step dd. Unknowns are interleaved depth-fast:
// p(i,j) = 2 (j m + i) holds the axial update, p + 1 the lateral one.
// The matrix is stored as its diagonal plus five upper bands, one per coupling
// pattern the cost can produce:
//   pair      (p, p+1)  axial-lateral data coupling of one sample (p even)
//   axial1    (p, p+2)  depth neighbours
//   axial2    (p, p+4)  depth neighbours two apart (second differences)
//   lateral1  (p, p+2m) line neighbours
//   lateral2  (p, p+4m) line neighbours two apart
// Every term of the cost is a weighted square w (u0 + c^T dd)^2 (L2 terms, or
// the IRLS surrogate of L1 terms), which adds w c c^T to the matrix and
// -w u0 c to the right-hand side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/SparseCore>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"
#include "elasto/solver/config.hpp"
#include "elasto/solver/derivatives.hpp"
#include "elasto/solver/penalty.hpp"
#include "elasto/solver/warp.hpp"

namespace elasto::solver {

struct SparseSystem {
  std::size_t m = 0, n = 0;
  std::vector<double> diag, pair, axial1, axial2, lateral1, lateral2;
  std::vector<double> rhs;
  double lift = 0.0;

  SparseSystem() = default;
  SparseSystem(std::size_t rows, std::size_t cols)
      : m(rows), n(cols), diag(2 * m * n), pair(2 * m * n), axial1(2 * m * n), axial2(2 * m * n),
        lateral1(2 * m * n), lateral2(2 * m * n), rhs(2 * m * n) {}

  std::size_t unknowns() const noexcept { return 2 * m * n; }

  /// Structural nonzeros of the full symmetric matrix.
  std::size_t nonzeros() const noexcept {
    auto pos = [](std::size_t k, std::size_t off) { return k > off ? k - off : 0; };
    const std::size_t per_axial = pos(m, 1) + pos(m, 2), per_lateral = pos(n, 1) + pos(n, 2);
    return unknowns() + 2 * (m * n + 2 * n * per_axial + 2 * m * per_lateral);
  }

  std::size_t bytes() const noexcept {
    return sizeof(double) * (diag.size() + pair.size() + axial1.size() + axial2.size() + lateral1.size() +
                             lateral2.size() + rhs.size());
  }

  /// Visits every structural upper-triangular entry (row <= col), lift included.
  template <class F>
  void for_each_upper(F&& f) const {
    const std::size_t N = unknowns();
    for (std::size_t p = 0; p < N; ++p) {
      const std::size_t i = (p / 2) % m;
      f(p, p, diag[p] + lift);
      if (p % 2 == 0) f(p, p + 1, pair[p]);
      if (i + 1 < m) f(p, p + 2, axial1[p]);
      if (i + 2 < m) f(p, p + 4, axial2[p]);
      if (p + 2 * m < N) f(p, p + 2 * m, lateral1[p]);
      if (p + 4 * m < N) f(p, p + 4 * m, lateral2[p]);
    }
  }

  /// Upper triangle as an Eigen column-major matrix (duplicates summed).
  Eigen::SparseMatrix<double> upper() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(6 * unknowns());
    for_each_upper([&](std::size_t r, std::size_t c, double v) {
      t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    });
    auto N = static_cast<Eigen::Index>(unknowns());
    Eigen::SparseMatrix<double> a(N, N);
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }

  /// y = A x.
  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> y(unknowns(), 0.0);
    for_each_upper([&](std::size_t r, std::size_t c, double v) {
      y[r] += v * x[c];
      if (r != c) y[c] += v * x[r];
    });
    return y;
  }

  double trace() const {
    double t = 0.0;
    for (double v : diag) t += v;
    return t;
  }
};

namespace detail {

struct Stencil {
  SparseSystem& s;

  /// w (u0 + x_hi - x_lo)^2 with the hi/lo unknowns coupled through `band`.
  void difference(std::size_t lo, std::size_t hi, std::vector<double>& band, double w, double u0) {
    s.diag[lo] += w;
    s.diag[hi] += w;
    band[lo] -= w;
    s.rhs[hi] -= w * u0;
    s.rhs[lo] += w * u0;
  }

  /// w (u0 + x_lo + x_hi - 2 x_mid)^2 with neighbour coupling in `near` and
  /// lo-hi coupling in `far`.
  void second(std::size_t lo, std::size_t mid, std::size_t hi, std::vector<double>& near, std::vector<double>& far,
              double w, double u0) {
    s.diag[lo] += w;
    s.diag[hi] += w;
    s.diag[mid] += 4.0 * w;
    near[lo] -= 2.0 * w;
    near[mid] -= 2.0 * w;
    far[lo] += w;
    s.rhs[lo] -= w * u0;
    s.rhs[hi] -= w * u0;
    s.rhs[mid] += 2.0 * w * u0;
  }
};

inline double term_weight(double base, Norm norm, double u0, double eta) {
  return norm == Norm::L1 ? base * irls_weight(u0, eta) : base;
}

}  // namespace detail

/// Builds the linearized system at the current total displacement `d`; IRLS
/// weights are evaluated at `d` as well.
inline SparseSystem assemble_system(const RfFrame& pre, const RfFrame& post, const ImageGradients& grads,
                                    const DisplacementField& d, const SolverConfig& config, const AdaptiveEps& eps) {
  const SolverConfig c = config.expanded();
  c.validate();
  const std::size_t m = post.rows(), n = post.lines();
  if (eps.axial.size() != n || eps.lateral.size() != m) throw DomainError("eps does not match frame shape");
  auto warp = warp_and_gradient(pre, post, grads, d);
  if (warp.valid_count == 0) throw NumericError("no data support: every sample warps outside the post frame");

  SparseSystem s(m, n);
  detail::Stencil st{s};
  auto P = [m](std::size_t i, std::size_t j) { return 2 * (j * m + i); };
  const auto& A = d.axial;
  const auto& L = d.lateral;

  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t p = P(i, j);
      if (warp.valid(i, j)) {
        double ga = warp.grad_axial(i, j), gl = warp.grad_lateral(i, j), r = warp.residual(i, j);
        double w = c.data == Norm::L1 ? irls_weight(r, c.eta_data) : 1.0;
        s.diag[p] += w * ga * ga;
        s.diag[p + 1] += w * gl * gl;
        s.pair[p] += w * ga * gl;
        s.rhs[p] += w * ga * r;
        s.rhs[p + 1] += w * gl * r;
      }

      if (i == 0) {
        if (c.gamma > 0) {
          double u0 = A(0, j);
          double w = detail::term_weight(c.gamma, c.first_order, u0, c.eta0);
          s.diag[p] += w;
          s.rhs[p] -= w * u0;
        }
      } else {
        const std::size_t q = P(i - 1, j);
        if (c.alpha1 > 0) {
          double u0 = A(i, j) - A(i - 1, j) - eps.axial[j];
          st.difference(q, p, s.axial1, detail::term_weight(c.alpha1, c.first_order, u0, c.eta1), u0);
        }
        if (c.beta1 > 0) {
          double u0 = L(i, j) - L(i - 1, j) - eps.lateral[i];
          st.difference(q + 1, p + 1, s.axial1, detail::term_weight(c.beta1, c.first_order, u0, c.eta1), u0);
        }
      }
      if (j > 0) {
        const std::size_t q = P(i, j - 1);
        if (c.alpha2 > 0) {
          double u0 = A(i, j) - A(i, j - 1) - eps.axial[j];
          st.difference(q, p, s.lateral1, detail::term_weight(c.alpha2, c.first_order, u0, c.eta1), u0);
        }
        if (c.beta2 > 0) {
          double u0 = L(i, j) - L(i, j - 1) - eps.lateral[i];
          st.difference(q + 1, p + 1, s.lateral1, detail::term_weight(c.beta2, c.first_order, u0, c.eta1), u0);
        }
      }
      if (i > 0 && i + 1 < m) {
        const std::size_t lo = P(i - 1, j), hi = P(i + 1, j);
        if (c.theta1 > 0) {
          double u0 = A(i - 1, j) + A(i + 1, j) - 2.0 * A(i, j);
          st.second(lo, p, hi, s.axial1, s.axial2, detail::term_weight(c.theta1, c.second_order, u0, c.eta2), u0);
        }
        if (c.lambda1 > 0) {
          double u0 = L(i - 1, j) + L(i + 1, j) - 2.0 * L(i, j);
          st.second(lo + 1, p + 1, hi + 1, s.axial1, s.axial2,
                    detail::term_weight(c.lambda1, c.second_order, u0, c.eta2), u0);
        }
      }
      if (j > 0 && j + 1 < n) {
        const std::size_t lo = P(i, j - 1), hi = P(i, j + 1);
        if (c.theta2 > 0) {
          double u0 = A(i, j - 1) + A(i, j + 1) - 2.0 * A(i, j);
          st.second(lo, p, hi, s.lateral1, s.lateral2, detail::term_weight(c.theta2, c.second_order, u0, c.eta2),
                    u0);
        }
        if (c.lambda2 > 0) {
          double u0 = L(i, j - 1) + L(i, j + 1) - 2.0 * L(i, j);
          st.second(lo + 1, p + 1, hi + 1, s.lateral1, s.lateral2,
                    detail::term_weight(c.lambda2, c.second_order, u0, c.eta2), u0);
        }
      }
    }

  s.lift = c.tikhonov ? *c.tikhonov : 1e-8 * s.trace() / static_cast<double>(s.unknowns());
  return s;
}

inline SparseSystem assemble_system(const RfFrame& pre, const RfFrame& post, const DisplacementField& d,
                                    const SolverConfig& config, const AdaptiveEps& eps) {
  return assemble_system(pre, post, image_gradients(post.samples), d, config, eps);
}

/// Exact (non-surrogate) cost at displacement d: data term plus, per group,
/// weight * u^2 (L2) or 2 * weight * eta * sqrt(eta^2 + u^2) (L1).
inline double cost_value(const RfFrame& pre, const RfFrame& post, const DisplacementField& d,
                         const SolverConfig& config, const AdaptiveEps& eps) {
  const SolverConfig c = config.expanded();
  c.validate();
  const std::size_t m = post.rows(), n = post.lines();
  auto warp = warp_and_gradient(pre, post, d);
  double data = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      if (!warp.valid(i, j)) continue;
      double r = warp.residual(i, j);
      data += c.data == Norm::L1 ? 2.0 * c.eta_data * smoothed_abs(r, c.eta_data) : r * r;
    }

  auto penalty = [](double w, Norm norm, double eta, double u) {
    if (w == 0.0) return 0.0;
    return norm == Norm::L1 ? 2.0 * w * eta * smoothed_abs(u, eta) : w * u * u;
  };
  auto first = first_order_derivs(d, eps);
  auto second = second_order_derivs(d);
  double reg = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0) {
        reg += penalty(c.gamma, c.first_order, c.eta0, first.dy_a(i, j));
      } else {
        reg += penalty(c.alpha1, c.first_order, c.eta1, first.dy_a(i, j));
        reg += penalty(c.beta1, c.first_order, c.eta1, first.dy_l(i, j));
      }
      if (j > 0) {
        reg += penalty(c.alpha2, c.first_order, c.eta1, first.dx_a(i, j));
        reg += penalty(c.beta2, c.first_order, c.eta1, first.dx_l(i, j));
      }
      if (i > 0 && i + 1 < m) {
        reg += penalty(c.theta1, c.second_order, c.eta2, second.dyy_a(i, j));
        reg += penalty(c.lambda1, c.second_order, c.eta2, second.dyy_l(i, j));
      }
      if (j > 0 && j + 1 < n) {
        reg += penalty(c.theta2, c.second_order, c.eta2, second.dxx_a(i, j));
        reg += penalty(c.lambda2, c.second_order, c.eta2, second.dxx_l(i, j));
      }
    }
  return data + reg;
}

}  // namespace elasto::solver
