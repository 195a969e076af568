#pragma once

// Integer displacement prior by dynamic programming. Each scan line is solved
// exactly over joint (axial, lateral) integer shift states with an L1 jump
// penalty between consecutive samples and an L1 pull toward the previous
// line's solution. The L1 transition is separable, so the min-convolution is a
// pair of 1-D distance transforms and each step costs O(states).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "elasto/error.hpp"
#include "elasto/grid.hpp"

namespace elasto::dp {

enum class DataCost { absolute, squared };

struct DpConfig {
  /// Axial search range (+/- samples); ceil(0.05 m) when unset.
  std::optional<int> axial_range;
  int lateral_range = 2;
  /// Cost per sample of jump; 0.2 * median|I1| when unset.
  std::optional<double> smoothness;
  DataCost data_cost = DataCost::absolute;
  int row_decimation = 1;
  /// Added to states whose lookup leaves I2; 10x the line's median data cost when unset.
  std::optional<double> out_of_bounds_penalty;

  void validate() const {
    if (axial_range && *axial_range < 0) throw InvariantError("axial search range must be >= 0");
    if (lateral_range < 0) throw InvariantError("lateral search range must be >= 0");
    if (smoothness && !(*smoothness >= 0.0)) throw InvariantError("DP smoothness weight must be >= 0");
    if (row_decimation < 1) throw InvariantError("row decimation must be >= 1");
    if (out_of_bounds_penalty && !(*out_of_bounds_penalty >= 0.0))
      throw InvariantError("out-of-bounds penalty must be >= 0");
  }
};

inline double median_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  std::vector<double> a(v.size());
  std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
  auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  return *mid;
}

/// Fills the defaulted fields from the frame dimensions and data.
inline DpConfig resolve(DpConfig cfg, const RfFrame& pre) {
  cfg.validate();
  if (!cfg.axial_range) cfg.axial_range = static_cast<int>(std::ceil(0.05 * static_cast<double>(pre.rows())));
  if (!cfg.smoothness) cfg.smoothness = 0.2 * median_abs(pre.samples.data());
  return cfg;
}

struct LinePath {
  std::vector<int> axial;
  std::vector<int> lateral;
  double cost = 0.0;
};

namespace detail {

inline double data_term(double r, DataCost c) { return c == DataCost::absolute ? std::abs(r) : r * r; }

inline std::vector<std::size_t> dp_rows(std::size_t m, int decimation) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m; i += static_cast<std::size_t>(decimation)) rows.push_back(i);
  return rows;
}

struct LineProblem {
  const RfFrame& pre;
  const RfFrame& post;
  std::size_t line;
  int ra, rl;
  DataCost kind;
  std::vector<std::size_t> rows;

  int states_axial() const { return 2 * ra + 1; }
  int states() const { return states_axial() * (2 * rl + 1); }

  /// Data residual cost and whether the lookup stayed inside I2.
  std::pair<double, bool> data(std::size_t k, int da, int dl) const {
    const auto m = static_cast<long>(post.rows()), n = static_cast<long>(post.lines());
    long i2 = static_cast<long>(rows[k]) + da, j2 = static_cast<long>(line) + dl;
    bool inside = i2 >= 0 && i2 < m && j2 >= 0 && j2 < n;
    i2 = std::clamp(i2, 0L, m - 1);
    j2 = std::clamp(j2, 0L, n - 1);
    double r = pre(rows[k], line) - post(static_cast<std::size_t>(i2), static_cast<std::size_t>(j2));
    return {data_term(r, kind), inside};
  }
};

/// In-place 1-D L1 distance transform f(x) <- min_y f(y) + w|x - y| over a strided
/// sequence, carrying the argmin source index along.
inline void l1_transform(double* f, std::int32_t* src, int count, int stride, double w) {
  for (int x = 1; x < count; ++x) {
    double cand = f[(x - 1) * stride] + w;
    if (cand < f[x * stride]) {
      f[x * stride] = cand;
      src[x * stride] = src[(x - 1) * stride];
    }
  }
  for (int x = count - 2; x >= 0; --x) {
    double cand = f[(x + 1) * stride] + w;
    if (cand < f[x * stride]) {
      f[x * stride] = cand;
      src[x * stride] = src[(x + 1) * stride];
    }
  }
}

}  // namespace detail

/// Exact minimizer of the line energy
///   sum_i data(i, s_i) + prior(i, s_i) + w * (|da_i - da_{i-1}| + |dl_i - dl_{i-1}|)
/// over rows 0, r, 2r, ... of line `line`. `cfg` must be resolved.
/// `prior_axial`/`prior_lateral`, when non-empty, hold the previous line's path on those rows.
inline LinePath dp_line(const RfFrame& pre, const RfFrame& post, std::size_t line, const DpConfig& cfg,
                        std::span<const int> prior_axial = {}, std::span<const int> prior_lateral = {}) {
  cfg.validate();
  if (!cfg.axial_range || !cfg.smoothness) throw ConfigError("dp_line needs a resolved DpConfig");
  if (!pre.samples.same_shape(post.samples)) throw DomainError("frames differ in shape");
  detail::LineProblem P{pre, post, line, *cfg.axial_range, cfg.lateral_range, cfg.data_cost,
                        detail::dp_rows(pre.rows(), cfg.row_decimation)};
  const std::size_t K = P.rows.size();
  const int S = P.states(), Sa = P.states_axial(), Sl = 2 * P.rl + 1;
  if (K == 0 || S <= 0) throw ConfigError("empty DP state space");
  const bool has_prior = !prior_axial.empty();
  if (has_prior && (prior_axial.size() != K || prior_lateral.size() != K))
    throw DomainError("prior path length does not match the DP rows");
  const double w = *cfg.smoothness;

  std::vector<double> unary(K * static_cast<std::size_t>(S));
  std::vector<unsigned char> outside(unary.size());
  for (std::size_t k = 0; k < K; ++k)
    for (int dl = -P.rl; dl <= P.rl; ++dl)
      for (int da = -P.ra; da <= P.ra; ++da) {
        auto idx = k * static_cast<std::size_t>(S) + static_cast<std::size_t>((dl + P.rl) * Sa + da + P.ra);
        auto [c, inside] = P.data(k, da, dl);
        unary[idx] = c;
        outside[idx] = !inside;
      }

  double penalty = 0.0;
  if (cfg.out_of_bounds_penalty) {
    penalty = *cfg.out_of_bounds_penalty;
  } else {
    std::vector<double> inside_costs;
    inside_costs.reserve(unary.size());
    for (std::size_t q = 0; q < unary.size(); ++q)
      if (!outside[q]) inside_costs.push_back(unary[q]);
    if (!inside_costs.empty()) {
      auto mid = inside_costs.begin() + static_cast<std::ptrdiff_t>(inside_costs.size() / 2);
      std::nth_element(inside_costs.begin(), mid, inside_costs.end());
      penalty = 10.0 * *mid;
    }
  }

  for (std::size_t k = 0; k < K; ++k)
    for (int dl = -P.rl; dl <= P.rl; ++dl)
      for (int da = -P.ra; da <= P.ra; ++da) {
        auto idx = k * static_cast<std::size_t>(S) + static_cast<std::size_t>((dl + P.rl) * Sa + da + P.ra);
        if (outside[idx]) unary[idx] += penalty;
        if (has_prior) unary[idx] += w * (std::abs(da - prior_axial[k]) + std::abs(dl - prior_lateral[k]));
      }

  std::vector<std::int32_t> back(K * static_cast<std::size_t>(S));
  std::vector<double> acc(unary.begin(), unary.begin() + S), msg(static_cast<std::size_t>(S));
  std::vector<std::int32_t> src(static_cast<std::size_t>(S));
  for (std::size_t k = 1; k < K; ++k) {
    msg = acc;
    for (int s = 0; s < S; ++s) src[static_cast<std::size_t>(s)] = s;
    for (int l = 0; l < Sl; ++l) detail::l1_transform(msg.data() + l * Sa, src.data() + l * Sa, Sa, 1, w);
    for (int a = 0; a < Sa; ++a) detail::l1_transform(msg.data() + a, src.data() + a, Sl, Sa, w);
    const double* u = unary.data() + k * static_cast<std::size_t>(S);
    std::int32_t* b = back.data() + k * static_cast<std::size_t>(S);
    for (int s = 0; s < S; ++s) {
      acc[static_cast<std::size_t>(s)] = u[s] + msg[static_cast<std::size_t>(s)];
      b[s] = src[static_cast<std::size_t>(s)];
    }
  }

  auto best = static_cast<std::int32_t>(std::min_element(acc.begin(), acc.end()) - acc.begin());
  LinePath path;
  path.cost = acc[static_cast<std::size_t>(best)];
  path.axial.resize(K);
  path.lateral.resize(K);
  for (std::size_t k = K; k-- > 0;) {
    path.axial[k] = best % Sa - P.ra;
    path.lateral[k] = best / Sa - P.rl;
    if (k > 0) best = back[k * static_cast<std::size_t>(S) + static_cast<std::size_t>(best)];
  }
  return path;
}

/// Integer prior for the whole frame: lines are solved left to right, each
/// conditioned on the previous line's path. Rows skipped by decimation copy the
/// nearest solved row.
inline DisplacementField dp_estimate(const RfFrame& pre, const RfFrame& post, const DpConfig& config) {
  if (!pre.samples.same_shape(post.samples)) throw DomainError("frames differ in shape");
  auto cfg = resolve(config, pre);
  const std::size_t m = pre.rows(), n = pre.lines();
  const auto r = static_cast<std::size_t>(cfg.row_decimation);
  DisplacementField field(m, n, DisplacementStage::integer_prior);
  LinePath prev;
  for (std::size_t j = 0; j < n; ++j) {
    auto path = j == 0 ? dp_line(pre, post, j, cfg) : dp_line(pre, post, j, cfg, prev.axial, prev.lateral);
    const std::size_t K = path.axial.size();
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t k = std::min(K - 1, (i + r / 2) / r);
      field.axial(i, j) = path.axial[k];
      field.lateral(i, j) = path.lateral[k];
    }
    prev = std::move(path);
  }
  return field;
}

}  // namespace elasto::dp
