#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bsp/belief.hpp"

namespace bsp {

enum class ObjectiveKind { Entropy };

struct DecisionProblem {
  GaussianBelief belief;
  std::vector<CandidateAction> candidates;
  ObjectiveKind objective_kind = ObjectiveKind::Entropy;

  /// Throws InvalidSpec for an empty or duplicate-id candidate list.
  void validate() const;
};

struct Solution {
  std::size_t best_index = 0;
  std::vector<double> values;
};

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

/// Objective of every candidate, in candidate order. `workers` = 0 uses the
/// hardware concurrency. Failures are rethrown as CandidateError.
std::vector<double> evaluate_candidates(const GaussianBelief& b, std::span<const CandidateAction> candidates,
                                        unsigned workers = 0);

Solution solve(const DecisionProblem& p, unsigned workers = 0);

/// max(original_values) - original_values[simplified_best].
double simplification_loss(std::span<const double> original_values, std::size_t simplified_best);

/// Same strict ordering on every pair; ties must co-occur.
bool action_consistent(std::span<const double> v1, std::span<const double> v2);

/// As action_consistent, with differences within `tol` treated as ties.
bool action_consistent_tol(std::span<const double> v1, std::span<const double> v2, double tol = 1e-9);

using BalanceMap = std::function<double(double)>;

/// max_i |orig_i - balance(simp_i)|; identity balance when empty.
double offset(std::span<const double> values_orig, std::span<const double> values_simp,
              const BalanceMap& balance = {});

/// Best constant-shift offset, (max d - min d) / 2 with d = orig - simp.
/// An upper bound on the balanced offset over all monotone maps.
double balanced_offset_upper(std::span<const double> values_orig, std::span<const double> values_simp);

/// Pearson correlation of average ranks. A constant vector gives 1 when both
/// are constant and 0 otherwise. Throws DegenerateInput below two entries.
double rank_correlation(std::span<const double> v1, std::span<const double> v2);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

}  // namespace bsp
