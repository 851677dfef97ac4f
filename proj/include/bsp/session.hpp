#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsp/bounds.hpp"
#include "bsp/decision.hpp"
#include "bsp/scenario.hpp"
#include "bsp/sparsify.hpp"

namespace bsp {

struct SessionOptions {
  std::vector<SparsificationSpec> modes{SparsificationSpec::uninvolved(), SparsificationSpec::full()};
  std::vector<double> ratios{0.01, 0.25, 0.85};
  int repetitions = 5;
  unsigned workers = 0;
  double consistency_tol = 1e-9;
};

struct ModeResult {
  SparsificationSpec spec;
  std::vector<double> values;
  std::size_t best_index = 0;
  std::size_t sparsified_blocks = 0;
  Index root_nnz = 0;
  Index info_nnz = 0;
  double sparsify_seconds = 0.0;  // median over repetitions
  double evaluate_seconds = 0.0;

  // Comparisons with the baseline; empty for the baseline itself.
  std::optional<double> loss;
  std::optional<double> offset;
  std::optional<double> balanced_offset_upper;
  std::optional<double> rho;
  std::optional<bool> consistent;
  std::optional<bool> consistent_tol;

  std::vector<BoundPair> det_bounds;       // on this mode's objective
  std::optional<double> det_loss_bound;    // from the baseline determinant bounds
  std::optional<double> top_loss_bound;    // from the actual-noise topological bounds
  std::vector<double> ratio_loss_bounds;   // one per swept ratio, mu = 0

  double totalSeconds() const { return sparsify_seconds + evaluate_seconds; }
  double sparsifyShare() const {
    const double t = totalSeconds();
    return t > 0.0 ? sparsify_seconds / t : 0.0;
  }
};

struct SessionReport {
  std::uint64_t seed = 0;
  Index dim = 0;
  std::size_t n_blocks = 0;
  std::size_t n_never_involved = 0;
  std::vector<int> candidate_ids;
  std::vector<double> ratios;
  double actual_ratio = 0.0;

  std::vector<BoundPair> top_bounds;                    // actual noise, objective scale
  std::vector<std::vector<BoundPair>> ratio_top_bounds;  // [ratio][candidate], mu = 0

  std::vector<ModeResult> modes;  // modes[0] is the unsimplified baseline

  std::size_t top_violations = 0;   // lb <= J <= ub failures on the baseline
  std::size_t det_violations = 0;   // lb <= J <= ub failures, any mode
  std::size_t loss_bound_violations = 0;

  const ModeResult& baseline() const { return modes.front(); }
  const ModeResult* find(SparsificationMode mode) const;
  double neverInvolvedRatio() const {
    return n_blocks ? static_cast<double>(n_never_involved) / static_cast<double>(n_blocks) : 0.0;
  }
  /// Max |J - J_s| for the uninvolved mode, if present.
  std::optional<double> theorem1Discrepancy() const;
};

SessionReport run_session(const Scenario& s, const SessionOptions& opts = {});

/// Converts a log-determinant bound pair to the objective scale for a
/// posterior of `dim` scalars.
BoundPair to_objective_scale(const BoundPair& logdet_bounds, Index dim);

/// Medians across sessions for one mode, in the shape of a run-time summary
/// table. Deltas are fractions relative to the baseline (negative = smaller).
struct BenchRow {
  std::string mode;
  std::size_t sessions = 0;
  double median_dim = 0.0;
  double never_involved_ratio = 0.0;
  double runtime_delta = 0.0;
  double sparsify_share = 0.0;
  double nnz_delta = 0.0;
  double rho_median = 1.0;
  double rho_min = 1.0;
  double loss_max = 0.0;
};

std::vector<BenchRow> aggregate(const std::vector<SessionReport>& reports);

}  // namespace bsp
