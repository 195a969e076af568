#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/solver/grid_cholesky.hpp"
#include "elasto/solver/system.hpp"

namespace elasto::solver {

struct LinearSolution {
  std::vector<double> x;
  double relative_residual = 0.0;
  int refinements = 0;
  /// Approximate bytes held by the factorization.
  std::size_t factor_bytes = 0;
};

namespace detail {

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// Sparse Cholesky with up to `max_refinements` rounds of iterative refinement
/// until ||Ax - b|| <= tolerance * ||b||. The symbolic part in `factor` is reused.
/// Throws NumericError when the factorization fails or the residual stays above
/// 1000 * tolerance.
inline LinearSolution solve_sparse(GridCholesky& factor, const SparseSystem& s, double tolerance = 1e-10,
                                   int max_refinements = 3) {
  const std::size_t N = s.unknowns();
  LinearSolution out;
  out.x.assign(N, 0.0);
  double bnorm = detail::norm2(s.rhs);
  if (bnorm == 0.0) return out;

  factor.factorize(s);
  out.factor_bytes = factor.factor_bytes();
  out.x = factor.solve(s.rhs);
  for (int k = 0;; ++k) {
    auto ax = s.multiply(out.x);
    std::vector<double> r(N);
    for (std::size_t p = 0; p < N; ++p) r[p] = s.rhs[p] - ax[p];
    out.relative_residual = detail::norm2(r) / bnorm;
    if (!std::isfinite(out.relative_residual)) throw NumericError("linear solve produced non-finite values");
    if (out.relative_residual <= tolerance || k == max_refinements) break;
    auto dx = factor.solve(r);
    for (std::size_t p = 0; p < N; ++p) out.x[p] += dx[p];
    ++out.refinements;
  }
  if (out.relative_residual > 1000.0 * tolerance)
    throw NumericError("linear solve residual " + std::to_string(out.relative_residual) + " above tolerance");
  return out;
}

inline LinearSolution solve_sparse(const SparseSystem& s, double tolerance = 1e-10, int max_refinements = 3) {
  GridCholesky factor(s.m, s.n);
  return solve_sparse(factor, s, tolerance, max_refinements);
}

}  // namespace elasto::solver
