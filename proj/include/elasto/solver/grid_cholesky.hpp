#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elasto/error.hpp"
#include "elasto/solver/system.hpp"

namespace elasto::solver {

/// Multifrontal Cholesky for systems whose couplings reach at most two grid
/// steps along either axis. Elimination follows a geometric nested dissection
/// of the m x n grid with separators two nodes thick, so every front is dense.
class GridCholesky {
 public:
  GridCholesky(std::size_t m, std::size_t n, std::size_t leaf_nodes = 32) : m_(m), n_(n), leaf_(leaf_nodes) {
    if (m == 0 || n == 0) throw DomainError("grid must be non-empty");
    build(0, m, 0, n);
  }

  std::size_t unknowns() const noexcept { return 2 * m_ * n_; }

  /// Numeric factorization. Throws NumericError if a front is not positive definite.
  void factorize(const SparseSystem& s) {
    if (s.m != m_ || s.n != n_) throw DomainError("system shape differs from the factorization grid");
    const std::size_t N = unknowns();
    std::vector<int> owner(N);
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      for (int p : nodes_[k].own) owner[p] = static_cast<int>(k);

    // Each upper entry belongs to the front that eliminates its first variable.
    struct Entry {
      int r, c;
      double v;
    };
    std::vector<std::vector<Entry>> bucket(nodes_.size());
    s.for_each_upper([&](std::size_t r, std::size_t c, double v) {
      int k = std::min(owner[r], owner[c]);
      bucket[k].push_back({static_cast<int>(r), static_cast<int>(c), v});
    });

    std::vector<int> loc(N, -1);
    std::vector<Eigen::MatrixXd> updates;  // stack of child update matrices
    bytes_ = 0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      Node& nd = nodes_[k];
      const Eigen::Index a = static_cast<Eigen::Index>(nd.own.size()), b = static_cast<Eigen::Index>(nd.bnd.size());
      for (Eigen::Index q = 0; q < a; ++q) loc[nd.own[q]] = static_cast<int>(q);
      for (Eigen::Index q = 0; q < b; ++q) loc[nd.bnd[q]] = static_cast<int>(a + q);

      Eigen::MatrixXd F = Eigen::MatrixXd::Zero(a + b, a + b);
      for (const Entry& e : bucket[k]) {
        int x = loc[e.r], y = loc[e.c];
        F(std::max(x, y), std::min(x, y)) += e.v;
      }
      for (int c = 0; c < nd.children; ++c) {
        const Node& ch = nodes_[nd.child[c]];
        const Eigen::MatrixXd& U = updates[updates.size() - nd.children + c];
        std::vector<int> map(ch.bnd.size());
        for (std::size_t q = 0; q < ch.bnd.size(); ++q) map[q] = loc[ch.bnd[q]];
        for (Eigen::Index y = 0; y < U.cols(); ++y)
          for (Eigen::Index x = y; x < U.rows(); ++x) {
            int X = map[x], Y = map[y];
            F(std::max(X, Y), std::min(X, Y)) += U(x, y);
          }
      }
      updates.resize(updates.size() - nd.children);

      Eigen::Ref<Eigen::MatrixXd> F11 = F.topLeftCorner(a, a);
      Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(F11);
      if (llt.info() != Eigen::Success)
        throw NumericError("sparse Cholesky failed: front " + std::to_string(k) + " is not positive definite");
      Eigen::MatrixXd U = F.bottomRightCorner(b, b);
      if (b > 0) {
        F11.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(F.bottomLeftCorner(b, a));
        U = F.bottomRightCorner(b, b);
        U.selfadjointView<Eigen::Lower>().rankUpdate(F.bottomLeftCorner(b, a), -1.0);
      }
      updates.push_back(std::move(U));
      nd.L = F.leftCols(a);
      bytes_ += static_cast<std::size_t>(nd.L.size()) * sizeof(double);
      for (int p : nd.own) loc[p] = -1;
      for (int p : nd.bnd) loc[p] = -1;
    }
    factored_ = true;
  }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    if (!factored_) throw DomainError("solve before factorize");
    if (rhs.size() != unknowns()) throw DomainError("right-hand side length differs from the system");
    std::vector<double> x = rhs;
    Eigen::VectorXd u, v;
    for (const Node& nd : nodes_) {
      const Eigen::Index a = static_cast<Eigen::Index>(nd.own.size()), b = static_cast<Eigen::Index>(nd.bnd.size());
      u.resize(a);
      for (Eigen::Index q = 0; q < a; ++q) u[q] = x[nd.own[q]];
      nd.L.topRows(a).triangularView<Eigen::Lower>().solveInPlace(u);
      for (Eigen::Index q = 0; q < a; ++q) x[nd.own[q]] = u[q];
      if (b > 0) {
        v.noalias() = nd.L.bottomRows(b) * u;
        for (Eigen::Index q = 0; q < b; ++q) x[nd.bnd[q]] -= v[q];
      }
    }
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      const Node& nd = *it;
      const Eigen::Index a = static_cast<Eigen::Index>(nd.own.size()), b = static_cast<Eigen::Index>(nd.bnd.size());
      u.resize(a);
      for (Eigen::Index q = 0; q < a; ++q) u[q] = x[nd.own[q]];
      if (b > 0) {
        v.resize(b);
        for (Eigen::Index q = 0; q < b; ++q) v[q] = x[nd.bnd[q]];
        u.noalias() -= nd.L.bottomRows(b).transpose() * v;
      }
      nd.L.topRows(a).triangularView<Eigen::Lower>().transpose().solveInPlace(u);
      for (Eigen::Index q = 0; q < a; ++q) x[nd.own[q]] = u[q];
    }
    return x;
  }

  /// Bytes held by the stored factor columns.
  std::size_t factor_bytes() const noexcept { return bytes_; }

 private:
  struct Node {
    std::vector<int> own, bnd;
    std::vector<int> child;  // postorder indices
    int children = 0;
    Eigen::MatrixXd L;
  };

  void add_node(std::vector<int>& dst, std::size_t i, std::size_t j) const {
    int q = static_cast<int>(2 * (j * m_ + i));
    dst.push_back(q);
    dst.push_back(q + 1);
  }

  // Appends the subtree for rows [i0, i1) x lines [j0, j1) in postorder; returns its root index.
  int build(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
    const std::size_t h = i1 - i0, w = j1 - j0, t = 2;
    Node nd;
    if (h * w > leaf_ && std::max(h, w) > 2 * t + 1) {
      if (h >= w) {
        std::size_t s = i0 + (h - t) / 2;
        nd.child.push_back(build(i0, s, j0, j1));
        nd.child.push_back(build(s + t, i1, j0, j1));
        for (std::size_t j = j0; j < j1; ++j)
          for (std::size_t i = s; i < s + t; ++i) add_node(nd.own, i, j);
      } else {
        std::size_t s = j0 + (w - t) / 2;
        nd.child.push_back(build(i0, i1, j0, s));
        nd.child.push_back(build(i0, i1, s + t, j1));
        for (std::size_t j = s; j < s + t; ++j)
          for (std::size_t i = i0; i < i1; ++i) add_node(nd.own, i, j);
      }
    } else {
      for (std::size_t j = j0; j < j1; ++j)
        for (std::size_t i = i0; i < i1; ++i) add_node(nd.own, i, j);
    }
    // Halo of the rectangle: nodes outside it within two steps along an axis.
    for (std::size_t j = j0; j < j1; ++j) {
      for (std::size_t i = i0 >= t ? i0 - t : 0; i < i0; ++i) add_node(nd.bnd, i, j);
      for (std::size_t i = i1; i < std::min(i1 + t, m_); ++i) add_node(nd.bnd, i, j);
    }
    for (std::size_t i = i0; i < i1; ++i) {
      for (std::size_t j = j0 >= t ? j0 - t : 0; j < j0; ++j) add_node(nd.bnd, i, j);
      for (std::size_t j = j1; j < std::min(j1 + t, n_); ++j) add_node(nd.bnd, i, j);
    }
    nd.children = static_cast<int>(nd.child.size());
    nodes_.push_back(std::move(nd));
    return static_cast<int>(nodes_.size() - 1);
  }

  std::size_t m_, n_, leaf_;
  std::vector<Node> nodes_;
  std::size_t bytes_ = 0;
  bool factored_ = false;
};

}  // namespace elasto::solver
