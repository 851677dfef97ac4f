#pragma once

// Seeded generators and dense reference implementations shared by the unit
// and acceptance tests. The dense paths use Eigen's own factorizations and
// never call into the sparse kernels under test.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "bsp/belief.hpp"
#include "bsp/bounds.hpp"
#include "bsp/sparse.hpp"

namespace bsp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Dense storage of a random matrix with the given fill density.
inline Eigen::MatrixXd random_sparse_dense(Rng& rng, Index rows, Index cols, double density) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (coin(rng, density)) a(i, j) = uniform(rng, -2.0, 2.0);
  return a;
}

/// A^T A + d I with sparse A.
inline Eigen::MatrixXd random_spd_dense(Rng& rng, Index n, double density, double shift = 0.5) {
  const Eigen::MatrixXd a = random_sparse_dense(rng, n, n, density);
  Eigen::MatrixXd m = a.transpose() * a;
  m.diagonal().array() += shift;
  return m;
}

inline SparseSymmetricd random_spd(Rng& rng, Index n, double density, double shift = 0.5) {
  return SparseSymmetricd::fromDense(random_spd_dense(rng, n, density, shift));
}

/// Upper factor of a random SPD matrix, computed by the dense oracle.
inline UpperTriangulard random_root(Rng& rng, Index n, double density) {
  const Eigen::MatrixXd m = random_spd_dense(rng, n, density);
  Eigen::MatrixXd r = Eigen::LLT<Eigen::MatrixXd>(m).matrixU();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (std::abs(r(i, j)) < 1e-14) r(i, j) = 0.0;
  return UpperTriangulard::fromDense(r);
}

/// Update rows over n + n_new columns; every new column gets a supporting row.
inline Eigen::MatrixXd random_update_dense(Rng& rng, Index n, Index n_new, Index rows, double density) {
  Eigen::MatrixXd u = random_sparse_dense(rng, rows, n + n_new, density);
  if (n_new == 0) return u;
  Eigen::MatrixXd support = Eigen::MatrixXd::Zero(n_new, n + n_new);
  for (Index k = 0; k < n_new; ++k) {
    support(k, n + k) = uniform(rng, 0.5, 2.0) * (coin(rng, 0.5) ? 1.0 : -1.0);
    if (n > 0) support(k, uniform_int(rng, 0, static_cast<int>(n - 1))) = uniform(rng, -1.0, 1.0);
  }
  Eigen::MatrixXd out(u.rows() + n_new, n + n_new);
  out << u, support;
  return out;
}

/// [Lambda 0; 0 0] + U^T U.
inline Eigen::MatrixXd dense_posterior(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& u) {
  const Index n = lambda.rows();
  const Index total = u.cols();
  Eigen::MatrixXd post = Eigen::MatrixXd::Zero(total, total);
  post.topLeftCorner(n, n) = lambda;
  post += u.transpose() * u;
  return post;
}

inline double dense_logdet(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

inline double dense_objective(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& u) {
  const auto n = static_cast<double>(u.cols());
  return 0.5 * (dense_logdet(dense_posterior(lambda, u)) - n * kLogTwoPiE);
}

/// Reference sparsification: dense permute, dense Cholesky, diagonalize the
/// selected rows, rebuild the information and permute back.
inline Eigen::MatrixXd dense_sparsified_information(const Eigen::MatrixXd& lambda, const std::vector<Index>& s) {
  const Index n = lambda.rows();
  std::vector<Index> order;
  std::vector<char> sel(static_cast<std::size_t>(n), 0);
  for (Index i : s) sel[static_cast<std::size_t>(i)] = 1;
  for (Index i = 0; i < n; ++i)
    if (sel[static_cast<std::size_t>(i)]) order.push_back(i);
  const auto k = static_cast<Index>(order.size());
  for (Index i = 0; i < n; ++i)
    if (!sel[static_cast<std::size_t>(i)]) order.push_back(i);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);  // column i selects original order[i]
  for (Index i = 0; i < n; ++i) p(order[static_cast<std::size_t>(i)], i) = 1.0;
  const Eigen::MatrixXd permuted = p.transpose() * lambda * p;
  Eigen::MatrixXd r = Eigen::LLT<Eigen::MatrixXd>(permuted).matrixU();
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < n; ++j) r(i, j) = 0.0;
  return p * (r.transpose() * r) * p.transpose();
}

inline VariableLayout random_layout(Rng& rng, Index dim) {
  VariableLayout layout;
  Index used = 0;
  int id = 0;
  while (used < dim) {
    const Index size = std::min<Index>(dim - used, uniform_int(rng, 1, 3));
    layout.append(id++, BlockKind::Generic, size);
    used += size;
  }
  return layout;
}

inline std::vector<int> random_block_subset(Rng& rng, const VariableLayout& layout, double p) {
  std::vector<int> out;
  for (const auto& b : layout.blocks())
    if (coin(rng, p)) out.push_back(b.id);
  return out;
}

inline CandidateAction make_action(int id, const Eigen::MatrixXd& u, Index n_new) {
  CandidateAction a;
  a.id = id;
  a.jacobian = SparseRowBlockd::fromDense(u);
  a.n_new_vars = n_new;
  a.predicted_new_means = Eigen::VectorXd::Zero(n_new);
  return a;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Linear relative factor rows [-I | I] between blocks of `size` scalars;
/// from < 0 gives an absolute factor [I].
inline void add_relative_rows(std::vector<SparseRowd>& rows, Index size, Index from, Index to, double w = 1.0) {
  for (Index k = 0; k < size; ++k) {
    SparseRowd row;
    if (from >= 0) row.push_back({from * size + k, -w});
    row.push_back({to * size + k, w});
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
    rows.push_back(std::move(row));
  }
}

inline Eigen::MatrixXd gram_dense(const std::vector<SparseRowd>& rows, Index cols) {
  return SparseRowBlockd(cols, rows).toDense().transpose() * SparseRowBlockd(cols, rows).toDense();
}

/// Three poses and three landmarks (scalar blocks ordered x1, l1, l2, x2, x3,
/// l3) joined by the eight factors of the sparsification walkthrough figure.
inline GaussianBelief walkthrough_belief() {
  enum { x1, l1, l2, x2, x3, l3 };
  std::vector<SparseRowd> rows;
  add_relative_rows(rows, 1, -1, x1, 1.0);
  add_relative_rows(rows, 1, x1, l1, 0.9);
  add_relative_rows(rows, 1, x1, l2, 1.1);
  add_relative_rows(rows, 1, x1, x2, 1.2);
  add_relative_rows(rows, 1, l1, x2, 0.8);
  add_relative_rows(rows, 1, l2, x2, 1.3);
  add_relative_rows(rows, 1, x2, x3, 1.0);
  add_relative_rows(rows, 1, x3, l3, 0.7);
  const Eigen::MatrixXd lambda = gram_dense(rows, 6);
  Eigen::MatrixXd r = Eigen::LLT<Eigen::MatrixXd>(lambda).matrixU();
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j)
      if (lambda(i, j) == 0.0 && std::abs(r(i, j)) < 1e-14) r(i, j) = 0.0;
  VariableLayout layout;
  const BlockKind kinds[6] = {BlockKind::Pose, BlockKind::Landmark, BlockKind::Landmark,
                              BlockKind::Pose, BlockKind::Pose, BlockKind::Landmark};
  for (int i = 0; i < 6; ++i) layout.append(i, kinds[i], 1);
  return GaussianBelief(Eigen::VectorXd::Zero(6), UpperTriangulard::fromDense(r), layout);
}

/// Full-SLAM toy with planar blocks x1, x2, x3, l1, l2, l3 and two candidate
/// paths that each add two poses from x3; one observes l1, the other l3.
struct TwoPathToy {
  GaussianBelief prior;
  std::vector<CandidateAction> candidates;
};

inline TwoPathToy two_path_toy() {
  enum { x1, x2, x3, l1, l2, l3 };
  constexpr Index d = 2;
  std::vector<SparseRowd> rows;
  add_relative_rows(rows, d, -1, x1);
  add_relative_rows(rows, d, x1, x2);
  add_relative_rows(rows, d, x2, x3);
  add_relative_rows(rows, d, x1, l1);
  add_relative_rows(rows, d, x1, l2);
  add_relative_rows(rows, d, x2, l2);
  add_relative_rows(rows, d, x2, l1);
  add_relative_rows(rows, d, x3, l3);
  add_relative_rows(rows, d, x3, l1);
  const Eigen::MatrixXd lambda = gram_dense(rows, 6 * d);
  Eigen::MatrixXd r = Eigen::LLT<Eigen::MatrixXd>(lambda).matrixU();
  for (Index i = 0; i < r.rows(); ++i)
    for (Index j = i + 1; j < r.cols(); ++j)
      if (std::abs(r(i, j)) < 1e-14) r(i, j) = 0.0;
  VariableLayout layout;
  for (int i = 0; i < 3; ++i) layout.append(i, BlockKind::Pose, d);
  for (int i = 3; i < 6; ++i) layout.append(i, BlockKind::Landmark, d);
  TwoPathToy toy{GaussianBelief(Eigen::VectorXd::Zero(6 * d), UpperTriangulard::fromDense(r), layout), {}};

  auto path = [&](int id, int observed, double w) {
    std::vector<SparseRowd> u;
    constexpr int x4 = 6, x5 = 7;
    add_relative_rows(u, d, x3, x4);
    add_relative_rows(u, d, x4, x5);
    add_relative_rows(u, d, observed, x4, w);
    CandidateAction a;
    a.id = id;
    a.jacobian = SparseRowBlockd(8 * d, std::move(u));
    a.n_new_vars = 2 * d;
    a.predicted_new_means = Eigen::VectorXd::Zero(2 * d);
    a.new_blocks = {{BlockKind::Pose, d}, {BlockKind::Pose, d}};
    return a;
  };
  toy.candidates.push_back(path(0, l1, 1.0));
  toy.candidates.push_back(path(1, l3, 1.5));
  return toy;
}

/// Spanning trees by exhaustive edge-subset enumeration with union-find.
inline long long brute_force_trees(const PoseGraph& g) {
  const int n = g.n_nodes;
  const int m = static_cast<int>(g.edges.size());
  const int k = n - 1;
  if (k == 0) return 1;
  if (m < k) return 0;
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);
  long long count = 0;
  std::vector<int> parent(static_cast<std::size_t>(n));
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  while (true) {
    std::iota(parent.begin(), parent.end(), 0);
    bool acyclic = true;
    for (int e : pick) {
      const auto [a, b] = g.edges[static_cast<std::size_t>(e)];
      const int ra = find(a), rb = find(b);
      if (ra == rb) {
        acyclic = false;
        break;
      }
      parent[static_cast<std::size_t>(ra)] = rb;
    }
    if (acyclic) ++count;
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return count;
}

inline PoseGraph complete(int n) {
  PoseGraph g{n, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

}  // namespace bsp::testing
