#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "elasto/error.hpp"

namespace elasto::solver {

enum class Norm { L1, L2 };

inline const char* to_string(Norm n) { return n == Norm::L1 ? "L1" : "L2"; }

/// Regularization weights, smoothness parameters, norms and iteration controls.
/// Weight names follow their role: alpha = first-order axial-displacement,
/// beta = first-order lateral-displacement, theta/lambda = the second-order
/// counterparts; index 1 differentiates along depth, index 2 across lines.
struct SolverConfig {
  double alpha1 = 10.0, alpha2 = 2.0;
  double beta1 = 10.0, beta2 = 2.0;
  double theta1 = 0.0, theta2 = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  /// Anchor of each line's first sample to the zero displacement above it.
  double gamma = 0.1;
  /// When set, (theta, lambda) = multiplier * (alpha, beta) on expansion.
  std::optional<double> second_order_multiplier;

  double eta0 = 1e-4;  // anchor
  double eta1 = 1e-4;  // first-order terms
  double eta2 = 1e-4;  // second-order terms
  double eta_data = 1e-2;

  Norm first_order = Norm::L2;
  Norm second_order = Norm::L2;
  Norm data = Norm::L2;

  int iterations = 1;
  /// Stop once max|step| falls below this (samples).
  double tol = 1e-4;
  /// Per-iteration clamp on |step| (samples).
  double trust_radius = 2.0;
  /// Diagonal lift; 1e-8 * trace(A) / (2mn) when unset.
  std::optional<double> tikhonov;
  /// Target relative residual of the linear solve.
  double linear_tolerance = 1e-10;

  /// Applies the second-order multiplier and clears it.
  SolverConfig expanded() const {
    SolverConfig c = *this;
    if (c.second_order_multiplier) {
      double k = *c.second_order_multiplier;
      c.theta1 = k * c.alpha1;
      c.theta2 = k * c.alpha2;
      c.lambda1 = k * c.beta1;
      c.lambda2 = k * c.beta2;
      c.second_order_multiplier.reset();
    }
    return c;
  }

  void validate() const {
    auto c = expanded();
    for (double w : {c.alpha1, c.alpha2, c.beta1, c.beta2, c.theta1, c.theta2, c.lambda1, c.lambda2, c.gamma})
      if (!(w >= 0.0)) throw InvariantError("regularization weights must be >= 0");
    bool first = c.alpha1 > 0 || c.alpha2 > 0 || c.beta1 > 0 || c.beta2 > 0;
    bool second = c.theta1 > 0 || c.theta2 > 0 || c.lambda1 > 0 || c.lambda2 > 0;
    if (c.first_order == Norm::L1 && c.gamma > 0 && !(c.eta0 > 0))
      throw InvariantError("eta0 must be > 0 for an L1 anchor term");
    if (c.first_order == Norm::L1 && first && !(c.eta1 > 0))
      throw InvariantError("eta1 must be > 0 for L1 first-order terms");
    if (c.second_order == Norm::L1 && second && !(c.eta2 > 0))
      throw InvariantError("eta2 must be > 0 for L1 second-order terms");
    if (c.data == Norm::L1 && !(c.eta_data > 0)) throw InvariantError("eta_data must be > 0 for an L1 data term");
    if (c.iterations < 1) throw InvariantError("iterations must be >= 1");
    if (c.tikhonov && !(*c.tikhonov >= 0)) throw InvariantError("tikhonov lift must be >= 0");
    if (!(c.tol >= 0)) throw InvariantError("tol must be >= 0");
    if (!(c.trust_radius > 0)) throw InvariantError("trust radius must be > 0");
    if (!(c.linear_tolerance > 0)) throw InvariantError("linear solver tolerance must be > 0");
  }
};

enum class Preset { glue, soul, overwind, l1soul };

inline std::optional<Preset> parse_preset(std::string_view name) {
  if (name == "glue") return Preset::glue;
  if (name == "soul") return Preset::soul;
  if (name == "overwind") return Preset::overwind;
  if (name == "l1soul") return Preset::l1soul;
  return std::nullopt;
}

inline const char* to_string(Preset p) {
  switch (p) {
    case Preset::glue: return "glue";
    case Preset::soul: return "soul";
    case Preset::overwind: return "overwind";
    case Preset::l1soul: return "l1soul";
  }
  return "?";
}

/// Preset defaults use the layer-phantom weight sets.
///   glue     L2 first order only, one pass
///   soul     L2 first + second order, one pass
///   overwind L1 first order only, iterated
///   l1soul   L1 first + second order, iterated
inline SolverConfig preset_config(Preset p) {
  SolverConfig c;
  switch (p) {
    case Preset::glue:
      c.alpha1 = 10, c.alpha2 = 2, c.beta1 = 10, c.beta2 = 2;
      c.iterations = 1;
      break;
    case Preset::soul:
      c.alpha1 = 5, c.alpha2 = 1, c.beta1 = 5, c.beta2 = 1;
      c.second_order_multiplier = 100.0;
      c.iterations = 1;
      break;
    case Preset::overwind:
      c.alpha1 = 40, c.alpha2 = 8, c.beta1 = 20, c.beta2 = 4;
      c.first_order = Norm::L1;
      c.iterations = 20;
      break;
    case Preset::l1soul:
      c.alpha1 = 10, c.alpha2 = 2, c.beta1 = 10, c.beta2 = 2;
      c.second_order_multiplier = 100.0;
      c.first_order = Norm::L1;
      c.second_order = Norm::L1;
      c.iterations = 20;
      break;
  }
  return c;
}

/// Re-imposes what defines a preset on a config that may carry user overrides:
/// first-order-only presets have no second-order terms, and the norms are fixed.
inline SolverConfig enforce_preset(Preset p, SolverConfig c) {
  c = c.expanded();
  bool second = p == Preset::soul || p == Preset::l1soul;
  if (!second) c.theta1 = c.theta2 = c.lambda1 = c.lambda2 = 0.0;
  c.first_order = (p == Preset::overwind || p == Preset::l1soul) ? Norm::L1 : Norm::L2;
  c.second_order = p == Preset::l1soul ? Norm::L1 : Norm::L2;
  return c;
}

}  // namespace elasto::solver
