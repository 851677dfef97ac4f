#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsp/belief.hpp"

namespace bsp {

enum class SparsificationMode { None, Uninvolved, Full, Custom };

std::string to_string(SparsificationMode mode);
SparsificationMode parse_mode(const std::string& s);

struct SparsificationSpec {
  SparsificationMode mode = SparsificationMode::None;
  std::vector<int> custom_blocks;

  static SparsificationSpec none() { return {}; }
  static SparsificationSpec uninvolved() { return {SparsificationMode::Uninvolved, {}}; }
  static SparsificationSpec full() { return {SparsificationMode::Full, {}}; }
  static SparsificationSpec custom(std::vector<int> blocks) { return {SparsificationMode::Custom, std::move(blocks)}; }

  /// Report label: the mode name.
  std::string name() const { return to_string(mode); }

  friend bool operator==(const SparsificationSpec&, const SparsificationSpec&) = default;
};

/// Block ids touched by each candidate's Jacobian (prior columns only).
struct InvolvementMask {
  std::vector<int> involved_blocks;                 // sorted
  std::vector<std::vector<int>> per_candidate;      // sorted, candidate order

  bool involved(int block_id) const;
};

InvolvementMask detect_involvement(const VariableLayout& layout, std::span<const CandidateAction> candidates);

/// Prior blocks absent from every candidate mask, in layout order.
std::vector<int> never_involved_blocks(const VariableLayout& layout, const InvolvementMask& mask);

/// Block ids selected by `spec`, in layout order. Uninvolved mode needs `mask`.
std::vector<int> resolve_blocks(const VariableLayout& layout, const SparsificationSpec& spec,
                                const InvolvementMask* mask);

/// Intermediate matrices of one sparsification, for inspection and tests.
/// information/permuted_information/permuted_root are empty when S was
/// already a prefix and the factorization was skipped.
struct SparsificationTrace {
  Permutation permutation = Permutation::identity(0);  // S-first ordering
  std::optional<SparseSymmetricd> information;
  std::optional<SparseSymmetricd> permuted_information;
  std::optional<UpperTriangulard> permuted_root;
  UpperTriangulard sparsified_permuted_root = UpperTriangulard::identity(1);
  UpperTriangulard root = UpperTriangulard::identity(1);

  bool refactorized() const { return permuted_root.has_value(); }
};

/// Sparsifies the scalar set `s` of a root factor and records every stage.
SparsificationTrace sparsify_root_traced(const UpperTriangulard& r, std::span<const Index> s);

/// How sparsify_root rebuilds the factor in the selected-first ordering. Both
/// give the same factor up to rounding; Auto starts with rotations and falls
/// back to refactorization once the rotations grow costlier than it would be.
enum class ReorderMethod { Auto, Rotations, Refactorization };

/// Production path: same result as sparsify_root_traced(r, s).root, without
/// keeping the intermediates and restricted to the rows past the leading
/// selected prefix.
UpperTriangulard sparsify_root(const UpperTriangulard& r, std::span<const Index> s,
                               ReorderMethod method = ReorderMethod::Auto);

/// Same mean and layout, root R_s with ln|Lambda_s| = ln|Lambda|.
GaussianBelief sparsify_belief(const GaussianBelief& b, const SparsificationSpec& spec,
                               const InvolvementMask* mask = nullptr);

/// Diagonal of the root; the full mode without any factorization.
GaussianBelief fast_full_sparsify(const GaussianBelief& b);

}  // namespace bsp
