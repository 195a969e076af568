#pragma once

#include <cmath>

#include "elasto/error.hpp"

namespace elasto::solver {

/// Smoothed absolute value sqrt(eta^2 + u^2).
inline double smoothed_abs(double u, double eta) {
  if (!(eta > 0.0)) throw DomainError("smoothed_abs requires eta > 0");
  return std::hypot(eta, u);
}

/// IRLS factor eta / sqrt(eta^2 + u_prev^2), in (0, 1].
///
/// base * irls_weight(u0) * u^2 is the quadratic surrogate of 2 * base * eta * sqrt(eta^2 + u^2)
/// that touches it (value up to a constant, and slope) at u0 and lies above it everywhere.
inline double irls_weight(double u_prev, double eta) {
  if (!(eta > 0.0)) throw DomainError("irls_weight requires eta > 0");
  return eta / std::hypot(eta, u_prev);
}

/// The full quadratic surrogate (unit base weight) of 2 * eta * sqrt(eta^2 + u^2) around u_prev:
/// eta * (u^2 + eta^2 + xi0^2) / xi0 with xi0 = sqrt(eta^2 + u_prev^2).
inline double l1_surrogate(double u, double u_prev, double eta) {
  double xi0 = smoothed_abs(u_prev, eta);
  return eta * (u * u + eta * eta + xi0 * xi0) / xi0;
}

}  // namespace elasto::solver
