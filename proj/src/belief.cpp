#include "bsp/belief.hpp"

#include <algorithm>
#include <numeric>

namespace bsp {

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Pose:
      return "pose";
    case BlockKind::Landmark:
      return "landmark";
    case BlockKind::Generic:
      return "generic";
  }
  return "generic";
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "pose") return BlockKind::Pose;
  if (s == "landmark") return BlockKind::Landmark;
  if (s == "generic") return BlockKind::Generic;
  throw LayoutMismatch("unknown block kind '" + s + "'");
}

VariableLayout VariableLayout::uniform(int count, Index block_size, BlockKind kind) {
  VariableLayout layout;
  for (int i = 0; i < count; ++i) layout.append(i, kind, block_size);
  return layout;
}

void VariableLayout::append(int id, BlockKind kind, Index size) {
  if (size <= 0) throw LayoutMismatch("block size must be positive");
  if (indexOf(id)) throw LayoutMismatch("duplicate block id " + std::to_string(id));
  blocks_.push_back({id, kind, size, dim_});
  dim_ += size;
}

std::optional<std::size_t> VariableLayout::indexOf(int block_id) const {
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (blocks_[k].id == block_id) return k;
  return std::nullopt;
}

const VariableBlock& VariableLayout::block(int block_id) const {
  auto k = indexOf(block_id);
  if (!k) throw LayoutMismatch("unknown block id " + std::to_string(block_id));
  return blocks_[*k];
}

std::size_t VariableLayout::blockIndexOfScalar(Index scalar) const {
  if (scalar < 0 || scalar >= dim_) throw LayoutMismatch("scalar index out of range");
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), scalar,
                             [](Index s, const VariableBlock& b) { return s < b.offset; });
  return static_cast<std::size_t>(std::distance(blocks_.begin(), it)) - 1;
}

std::vector<Index> VariableLayout::scalarIndices(std::span<const int> block_ids) const {
  std::vector<Index> out;
  for (int id : block_ids) {
    const auto& b = block(id);
    for (Index k = 0; k < b.size; ++k) out.push_back(b.offset + k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int VariableLayout::nextFreeId() const {
  int next = 0;
  for (const auto& b : blocks_) next = std::max(next, b.id + 1);
  return next;
}

void CandidateAction::validate(Index prior_dim) const {
  if (n_new_vars < 0) throw LayoutMismatch("negative count of new variables");
  if (jacobian.nCols() != prior_dim + n_new_vars)
    throw LayoutMismatch("candidate " + std::to_string(id) + " Jacobian has " + std::to_string(jacobian.nCols()) +
                         " columns, expected " + std::to_string(prior_dim + n_new_vars));
  if (predicted_new_means.size() != n_new_vars)
    throw LayoutMismatch("candidate " + std::to_string(id) + " predicted means length differs from new variables");
  if (!new_blocks.empty()) {
    Index total = 0;
    for (const auto& nb : new_blocks) total += nb.size;
    if (total != n_new_vars) throw LayoutMismatch("new block sizes do not sum to the new variable count");
  }
}

GaussianBelief::GaussianBelief(Eigen::VectorXd mean, UpperTriangulard root, VariableLayout layout)
    : mean_(std::move(mean)), root_(std::move(root)), layout_(std::move(layout)), logdet_(logdet_triangular(root_)) {
  if (mean_.size() != root_.dim()) throw LayoutMismatch("mean length differs from factor dimension");
  if (layout_.dim() != root_.dim()) throw LayoutMismatch("layout dimension differs from factor dimension");
}

double entropy(const GaussianBelief& b) {
  return 0.5 * (static_cast<double>(b.dim()) * kLogTwoPiE - b.logdet());
}

double objective(const GaussianBelief& b, const CandidateAction& a) {
  a.validate(b.dim());
  const double posterior_logdet = updated_logdet(b.root(), b.logdet(), a.jacobian, a.n_new_vars);
  const auto n = static_cast<double>(b.dim() + a.n_new_vars);
  return 0.5 * (posterior_logdet - n * kLogTwoPiE);
}

GaussianBelief propagate(const GaussianBelief& b, const CandidateAction& a) {
  a.validate(b.dim());
  UpperTriangulard root = lowrank_update(b.root(), a.jacobian, a.n_new_vars);
  Eigen::VectorXd mean(b.dim() + a.n_new_vars);
  mean << b.mean(), a.predicted_new_means;
  VariableLayout layout = b.layout();
  if (a.n_new_vars > 0) {
    int next_id = layout.nextFreeId();
    if (a.new_blocks.empty()) {
      layout.append(next_id, BlockKind::Generic, a.n_new_vars);
    } else {
      for (const auto& nb : a.new_blocks) layout.append(next_id++, nb.kind, nb.size);
    }
  }
  return GaussianBelief(std::move(mean), std::move(root), std::move(layout));
}

NnzReport nnz_report(const GaussianBelief& b) {
  return {b.root().nnz(), gram(b.root()).nnz()};
}

}  // namespace bsp
