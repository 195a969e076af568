#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"
#include "elasto/solver/config.hpp"
#include "elasto/solver/derivatives.hpp"
#include "elasto/solver/linear.hpp"
#include "elasto/solver/system.hpp"
#include "elasto/solver/warp.hpp"

namespace elasto::solver {

/// Iteration 0 is the prior; iteration k >= 1 is the field after the k-th solve.
struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double max_step = 0.0;
};

struct RefineResult {
  DisplacementField field;
  std::vector<IterationRecord> trace;
  AdaptiveEps eps;
  /// Largest footprint of the assembled system (bands plus compressed matrix) over all iterations.
  std::size_t peak_system_bytes = 0;
  /// Largest footprint of the Cholesky factor over all iterations.
  std::size_t peak_factor_bytes = 0;
};

namespace detail {

inline std::size_t matrix_bytes(const SparseSystem& s) {
  std::size_t nnz_upper = (s.nonzeros() + s.unknowns()) / 2;
  return nnz_upper * (sizeof(double) + sizeof(int)) + (s.unknowns() + 1) * sizeof(int);
}

}  // namespace detail

/// Refines an integer prior. Each iteration linearizes at the current field,
/// solves for the update and clamps each entry to [-trust_radius, trust_radius].
inline RefineResult refine(const RfFrame& pre, const RfFrame& post, const DisplacementField& prior,
                           const SolverConfig& config) {
  const SolverConfig c = config.expanded();
  c.validate();
  const std::size_t m = post.rows(), n = post.lines();
  if (!pre.samples.same_shape(post.samples) || prior.rows() != m || prior.cols() != n)
    throw DomainError("frame and prior shapes differ");

  RefineResult out;
  out.eps = adaptive_eps(prior);
  out.field = prior;
  out.field.stage = DisplacementStage::refined;
  const auto grads = image_gradients(post.samples);

  auto cost = [&](int iteration) {
    double v = cost_value(pre, post, out.field, c, out.eps);
    if (!std::isfinite(v)) throw NumericError("iteration " + std::to_string(iteration) + ": non-finite cost");
    return v;
  };
  out.trace.push_back({0, cost(0), 0.0});

  GridCholesky factor(m, n);
  for (int k = 1; k <= c.iterations; ++k) {
    LinearSolution sol;
    try {
      SparseSystem s = assemble_system(pre, post, grads, out.field, c, out.eps);
      sol = solve_sparse(factor, s, c.linear_tolerance);
      out.peak_system_bytes = std::max(out.peak_system_bytes, s.bytes() + detail::matrix_bytes(s));
      out.peak_factor_bytes = std::max(out.peak_factor_bytes, sol.factor_bytes);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(k) + ": " + e.what());
    }
    double step = 0.0;
    for (double& v : sol.x) {
      v = std::clamp(v, -c.trust_radius, c.trust_radius);
      step = std::max(step, std::abs(v));
    }
    auto A = out.field.axial.data();
    auto L = out.field.lateral.data();
    for (std::size_t q = 0; q < m * n; ++q) {
      A[q] += sol.x[2 * q];
      L[q] += sol.x[2 * q + 1];
    }
    out.trace.push_back({k, cost(k), step});
    if (step < c.tol) break;
  }
  return out;
}

}  // namespace elasto::solver
