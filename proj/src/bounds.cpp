#include "bsp/bounds.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>

namespace bsp {

void PoseGraph::validate() const {
  if (n_nodes < 1) throw InvalidSpec("pose graph needs at least one node");
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_nodes || j >= n_nodes) throw InvalidSpec("edge endpoint out of range");
    if (i == j) throw InvalidSpec("self-loop on node " + std::to_string(i));
  }
}

std::vector<int> PoseGraph::degrees() const {
  std::vector<int> d(static_cast<std::size_t>(n_nodes), 0);
  for (const auto& [i, j] : edges) {
    ++d[static_cast<std::size_t>(i)];
    ++d[static_cast<std::size_t>(j)];
  }
  return d;
}

bool PoseGraph::connected() const {
  std::vector<int> parent(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = n_nodes;
  for (const auto& [i, j] : edges) {
    const int a = find(i), b = find(j);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components == 1;
}

SparseSymmetricd reduced_laplacian(const PoseGraph& g) {
  g.validate();
  if (g.n_nodes < 2) throw DisconnectedGraph("reduced Laplacian of a single node is empty");
  std::map<std::pair<Index, Index>, double> acc;
  for (const auto& [i, j] : g.edges) {
    const Index a = std::min(i, j) - 1, b = std::max(i, j) - 1;
    if (a >= 0) {
      acc[{a, a}] += 1.0;
      acc[{a, b}] -= 1.0;
    }
    acc[{b, b}] += 1.0;
  }
  std::vector<Triplet<double>> entries;
  entries.reserve(acc.size());
  for (const auto& [key, v] : acc)
    if (v != 0.0) entries.push_back({key.first, key.second, v});
  return SparseSymmetricd(g.n_nodes - 1, std::move(entries));
}

namespace {

double reduced_logdet(const PoseGraph& g) {
  if (!g.connected()) throw DisconnectedGraph("pose graph is not connected");
  if (g.n_nodes == 1) return 0.0;
  return logdet_triangular(cholesky(reduced_laplacian(g)));
}

}  // namespace

double spanning_tree_count(const PoseGraph& g) {
  g.validate();
  return reduced_logdet(g);
}

BoundPair topological_bounds(const PoseGraph& g, const TopologicalNoiseConfig& cfg) {
  g.validate();
  if (cfg.psi < 0.0) throw InvalidSpec("psi must be non-negative");
  const double log_l = reduced_logdet(g);
  const auto d = g.degrees();
  double hadamard = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) hadamard += std::log(static_cast<double>(d[i]) + cfg.psi);
  const double lb = 3.0 * log_l + cfg.mu;
  const double ub = lb + hadamard - log_l;
  if (ub < lb - 1e-9 * (1.0 + std::abs(lb))) throw InconsistentBounds("topological upper bound below lower bound");
  return {lb, std::max(lb, ub)};
}

BoundPair determinant_bounds(const GaussianBelief& b, const CandidateAction& a) {
  a.validate(b.dim());
  const Index n = b.dim();
  const Index n_new = a.n_new_vars;
  const double norm = static_cast<double>(n + n_new) * kLogTwoPiE;

  Eigen::VectorXd diag(n + n_new);
  diag << gram_diagonal(b.root()), Eigen::VectorXd::Zero(n_new);
  for (const auto& row : a.jacobian.rows())
    for (const auto& e : row) diag[e.col] += e.value * e.value;

  double lower = b.logdet();
  if (n_new > 0) {
    // |Lambda+| >= |Lambda| * |U_new^T U_new| by the Schur complement.
    Eigen::MatrixXd un = Eigen::MatrixXd::Zero(a.jacobian.nRows(), n_new);
    for (Index r = 0; r < a.jacobian.nRows(); ++r)
      for (const auto& e : a.jacobian.row(r))
        if (e.col >= n) un(r, e.col - n) = e.value;
    Eigen::LLT<Eigen::MatrixXd> llt(un.transpose() * un);
    if (llt.info() != Eigen::Success) throw RankDeficientAugmentation("new variables are not fully supported");
    lower += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  } else if (a.jacobian.nRows() >= n) {
    // Full Minkowski form: |A+B|^(1/N) >= |A|^(1/N) + |B|^(1/N).
    const Eigen::MatrixXd u = a.jacobian.toDense();
    Eigen::LLT<Eigen::MatrixXd> llt(u.transpose() * u);
    if (llt.info() == Eigen::Success) {
      const double log_b = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      const double nn = static_cast<double>(n);
      const double hi = std::max(lower, log_b) / nn, lo = std::min(lower, log_b) / nn;
      lower = nn * (hi + std::log1p(std::exp(lo - hi)));
    }
  }

  const double upper = diag.array().log().sum();
  return {0.5 * (lower - norm), 0.5 * (upper - norm)};
}

Eigen::MatrixXd inverse_columns(const UpperTriangulard& r, std::span<const Index> cols) {
  Eigen::MatrixXd out(r.dim(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(r.dim());
    e[cols[k]] = 1.0;
    out.col(static_cast<Index>(k)) = solve_upper(r, solve_upper_transpose(r, std::move(e)));
  }
  return out;
}

double rank1_alpha(std::span<const CandidateAction> candidates) {
  double alpha = 0.0;
  for (const auto& a : candidates)
    for (const auto& row : a.jacobian.rows())
      for (const auto& e : row) alpha = std::max(alpha, e.value * e.value);
  return alpha;
}

Rank1OffsetBound rank1_offset_bound(const GaussianBelief& b, const GaussianBelief& b_s,
                                    std::span<const CandidateAction> candidates, const InvolvementMask& mask,
                                    double alpha) {
  if (b.dim() != b_s.dim()) throw DimensionMismatch("beliefs differ in dimension");
  for (const auto& a : candidates) {
    a.validate(b.dim());
    if (a.jacobian.nRows() != 1 || a.n_new_vars != 0)
      throw NotRankOne("candidate " + std::to_string(a.id) + " is not a single-row update");
  }
  if (alpha < rank1_alpha(candidates)) throw AlphaTooSmall("alpha below the largest squared Jacobian entry");

  const auto inv = b.layout().scalarIndices(mask.involved_blocks);
  const Eigen::MatrixXd d = inverse_columns(b.root(), inv) - inverse_columns(b_s.root(), inv);
  double signed_sum = 0.0, abs_sum = 0.0;
  for (std::size_t j = 0; j < inv.size(); ++j)
    for (std::size_t i = 0; i < inv.size(); ++i) {
      const double v = d(inv[i], static_cast<Index>(j));
      signed_sum += v;
      abs_sum += std::abs(v);
    }
  Rank1OffsetBound out{std::abs(std::log1p(alpha * abs_sum)), std::nullopt};
  if (1.0 + alpha * signed_sum > 0.0) out.literal = std::abs(std::log1p(alpha * signed_sum));
  return out;
}

double post_solution_loss_bound(std::span<const double> values_simp, std::size_t simplified_best,
                                std::span<const double> ub_per_candidate, double lb_simplified_best,
                                Monotonicity monotonicity) {
  if (values_simp.size() != ub_per_candidate.size())
    throw LengthMismatch("bounds not aligned with candidates");
  if (simplified_best >= values_simp.size()) throw IndexOutOfRange("selected index out of range");
  const double max_ub = *std::max_element(ub_per_candidate.begin(), ub_per_candidate.end());
  double bound = 0.0;
  switch (monotonicity) {
    case Monotonicity::None:
      bound = max_ub - lb_simplified_best;
      break;
    case Monotonicity::Overestimates:
      bound = max_ub - values_simp[simplified_best];
      break;
    case Monotonicity::Underestimates:
      bound = values_simp[simplified_best] - lb_simplified_best;
      break;
  }
  if (bound < 0.0) throw InconsistentBounds("loss bound is negative (" + std::to_string(bound) + ")");
  return bound;
}

}  // namespace bsp
