#pragma once

// Biased first differences and unbiased second differences of a displacement
// field. Indices are 0-based here; row 0 is the first sample of a line.
//
//   dy_a(i,j) = A(i,j) - A(i-1,j) - eps_a(j)      i >= 1
//   dy_a(0,j) = A(0,j)                           (anchor: zero displacement above the line)
//   dx_a(i,j) = A(i,j) - A(i,j-1) - eps_a(j)      j >= 1
//   dy_l(i,j) = L(i,j) - L(i-1,j) - eps_l(i)      i >= 1
//   dx_l(i,j) = L(i,j) - L(i,j-1) - eps_l(i)      j >= 1
//   dyy_a(i,j) = A(i-1,j) + A(i+1,j) - 2A(i,j)    1 <= i <= m-2, likewise for the others
//
// where A = a + delta_a, L = l + delta_l. Entries outside these ranges are not
// part of the cost and are set to 0.

#include <cstddef>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::solver {

/// Expected displacement slope: eps_a per line j, eps_l per row i.
struct AdaptiveEps {
  std::vector<double> axial;
  std::vector<double> lateral;

  static AdaptiveEps zero(std::size_t m, std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)}; }
};

/// eps_a(j) = (a(m-1,j) - a(0,j)) / (m-1), eps_l(i) = (l(i,n-1) - l(i,0)) / (n-1).
/// Defined only on the integer prior.
inline AdaptiveEps adaptive_eps(const DisplacementField& prior) {
  if (prior.stage != DisplacementStage::integer_prior)
    throw InvariantError("adaptive eps is computed from the integer prior only");
  const std::size_t m = prior.rows(), n = prior.cols();
  if (m < 2 || n < 2) throw DomainError("adaptive eps needs at least 2 rows and 2 lines");
  AdaptiveEps e{std::vector<double>(n), std::vector<double>(m)};
  for (std::size_t j = 0; j < n; ++j)
    e.axial[j] = (prior.axial(m - 1, j) - prior.axial(0, j)) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i)
    e.lateral[i] = (prior.lateral(i, n - 1) - prior.lateral(i, 0)) / static_cast<double>(n - 1);
  return e;
}

struct FirstOrderDerivs {
  Image dy_a, dx_a, dy_l, dx_l;
};

struct SecondOrderDerivs {
  Image dyy_a, dxx_a, dyy_l, dxx_l;
};

namespace detail {

inline DisplacementField total(const DisplacementField& d, const DisplacementField* delta) {
  if (!delta) return d;
  if (!d.axial.same_shape(delta->axial)) throw DomainError("displacement and update differ in shape");
  DisplacementField t = d;
  for (std::size_t k = 0; k < t.axial.size(); ++k) {
    t.axial.data()[k] += delta->axial.data()[k];
    t.lateral.data()[k] += delta->lateral.data()[k];
  }
  return t;
}

}  // namespace detail

inline FirstOrderDerivs first_order_derivs(const DisplacementField& d, const DisplacementField* delta,
                                           const AdaptiveEps& eps) {
  auto t = detail::total(d, delta);
  const std::size_t m = t.rows(), n = t.cols();
  if (eps.axial.size() != n || eps.lateral.size() != m) throw DomainError("eps does not match field shape");
  FirstOrderDerivs r{Image(m, n), Image(m, n), Image(m, n), Image(m, n)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      r.dy_a(i, j) = i == 0 ? t.axial(0, j) : t.axial(i, j) - t.axial(i - 1, j) - eps.axial[j];
      if (i > 0) r.dy_l(i, j) = t.lateral(i, j) - t.lateral(i - 1, j) - eps.lateral[i];
      if (j > 0) {
        r.dx_a(i, j) = t.axial(i, j) - t.axial(i, j - 1) - eps.axial[j];
        r.dx_l(i, j) = t.lateral(i, j) - t.lateral(i, j - 1) - eps.lateral[i];
      }
    }
  return r;
}

inline FirstOrderDerivs first_order_derivs(const DisplacementField& d, const AdaptiveEps& eps) {
  return first_order_derivs(d, nullptr, eps);
}

inline SecondOrderDerivs second_order_derivs(const DisplacementField& d, const DisplacementField* delta = nullptr) {
  auto t = detail::total(d, delta);
  const std::size_t m = t.rows(), n = t.cols();
  SecondOrderDerivs r{Image(m, n), Image(m, n), Image(m, n), Image(m, n)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      if (i > 0 && i + 1 < m) {
        r.dyy_a(i, j) = t.axial(i - 1, j) + t.axial(i + 1, j) - 2.0 * t.axial(i, j);
        r.dyy_l(i, j) = t.lateral(i - 1, j) + t.lateral(i + 1, j) - 2.0 * t.lateral(i, j);
      }
      if (j > 0 && j + 1 < n) {
        r.dxx_a(i, j) = t.axial(i, j - 1) + t.axial(i, j + 1) - 2.0 * t.axial(i, j);
        r.dxx_l(i, j) = t.lateral(i, j - 1) + t.lateral(i, j + 1) - 2.0 * t.lateral(i, j);
      }
    }
  return r;
}

}  // namespace elasto::solver
