#pragma once

#include <Eigen/Core>

#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsp/sparse.hpp"
#include "bsp/sparse_linalg.hpp"

namespace bsp {

/// ln(2*pi*e), the per-dimension normalization of the Gaussian entropy.
inline const double kLogTwoPiE = std::log(2.0 * std::numbers::pi * std::numbers::e);

enum class BlockKind { Pose, Landmark, Generic };

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& s);

struct VariableBlock {
  int id;
  BlockKind kind;
  Index size;
  Index offset;

  friend bool operator==(const VariableBlock&, const VariableBlock&) = default;
};

/// Ordered variable blocks of a state vector; offsets are contiguous.
class VariableLayout {
 public:
  VariableLayout() = default;

  static VariableLayout uniform(int count, Index block_size, BlockKind kind = BlockKind::Generic);

  void append(int id, BlockKind kind, Index size);

  const std::vector<VariableBlock>& blocks() const { return blocks_; }
  std::size_t blockCount() const { return blocks_.size(); }
  Index dim() const { return dim_; }

  std::optional<std::size_t> indexOf(int block_id) const;
  const VariableBlock& block(int block_id) const;
  /// Position (in blocks()) of the block owning scalar `scalar`.
  std::size_t blockIndexOfScalar(Index scalar) const;

  /// Scalar indices covered by the given blocks, sorted ascending.
  std::vector<Index> scalarIndices(std::span<const int> block_ids) const;

  int nextFreeId() const;

  friend bool operator==(const VariableLayout&, const VariableLayout&) = default;

 private:
  std::vector<VariableBlock> blocks_;
  Index dim_ = 0;
};

struct NewBlock {
  BlockKind kind;
  Index size;
};

/// One candidate action: its whitened collective Jacobian over the prior
/// variables followed by the n_new_vars variables it introduces.
struct CandidateAction {
  int id = 0;
  SparseRowBlockd jacobian{1};
  Index n_new_vars = 0;
  Eigen::VectorXd predicted_new_means;
  // Layout of the introduced variables; empty means one generic block.
  std::vector<NewBlock> new_blocks;

  /// Throws LayoutMismatch when the action does not fit a prior of `prior_dim`.
  void validate(Index prior_dim) const;
};

/// Gaussian belief in square-root information form, Lambda = R^T R.
class GaussianBelief {
 public:
  GaussianBelief(Eigen::VectorXd mean, UpperTriangulard root, VariableLayout layout);

  const Eigen::VectorXd& mean() const { return mean_; }
  const UpperTriangulard& root() const { return root_; }
  const VariableLayout& layout() const { return layout_; }
  Index dim() const { return root_.dim(); }
  /// ln|Lambda|, cached at construction.
  double logdet() const { return logdet_; }

  SparseSymmetricd information() const { return gram(root_); }

 private:
  Eigen::VectorXd mean_;
  UpperTriangulard root_;
  VariableLayout layout_;
  double logdet_;
};

/// Differential entropy: 0.5 * (N ln(2 pi e) - ln|Lambda|).
double entropy(const GaussianBelief& b);

/// Entropy objective of the posterior after applying `a`:
/// 0.5 * (ln|Lambda_aug + U^T U| - N+ ln(2 pi e)), through the root update.
double objective(const GaussianBelief& b, const CandidateAction& a);

/// Maximum-likelihood propagation: factor updated, new means appended.
GaussianBelief propagate(const GaussianBelief& b, const CandidateAction& a);

struct NnzReport {
  Index root_nnz;
  Index info_nnz;
};

NnzReport nnz_report(const GaussianBelief& b);

}  // namespace bsp
