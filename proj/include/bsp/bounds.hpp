#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bsp/belief.hpp"
#include "bsp/sparsify.hpp"

namespace bsp {

/// Undirected multigraph over poses. Node 0 is removed from the Laplacian.
struct PoseGraph {
  int n_nodes = 1;
  std::vector<std::pair<int, int>> edges;

  /// Throws InvalidSpec on self-loops or out-of-range endpoints.
  void validate() const;
  std::vector<int> degrees() const;
  bool connected() const;
};

/// Laplacian with row and column 0 deleted.
SparseSymmetricd reduced_laplacian(const PoseGraph& g);

/// ln t(g) by the matrix-tree theorem.
double spanning_tree_count(const PoseGraph& g);

struct TopologicalNoiseConfig {
  double mu = 0.0;
  double psi = 1.0;
  double ratio = 1.0;  // angular : position variance, informational
};

struct BoundPair {
  double lb;
  double ub;
};

/// lb = 3 ln t + mu, ub = lb + sum_i ln(d_i + psi) - ln|L~|, on the
/// log-determinant scale of the posterior information.
BoundPair topological_bounds(const PoseGraph& g, const TopologicalNoiseConfig& cfg);

/// Minkowski lower and Hadamard upper bounds on objective(b, a).
BoundPair determinant_bounds(const GaussianBelief& b, const CandidateAction& a);

/// Columns of Lambda^{-1} at `cols`, by two triangular solves per column.
Eigen::MatrixXd inverse_columns(const UpperTriangulard& r, std::span<const Index> cols);

struct Rank1OffsetBound {
  double certified;              // |ln(1 + alpha * sum |D_ij|)|
  std::optional<double> literal;  // |ln(1 + alpha * sum D_ij)|, empty if the argument is not positive
};

/// Offset bound for single-row candidates; D = Lambda^{-1} - Lambda_s^{-1}
/// restricted to the involved scalars.
Rank1OffsetBound rank1_offset_bound(const GaussianBelief& b, const GaussianBelief& b_s,
                                    std::span<const CandidateAction> candidates, const InvolvementMask& mask,
                                    double alpha);

/// Smallest admissible alpha: max squared Jacobian entry over all candidates.
double rank1_alpha(std::span<const CandidateAction> candidates);

enum class Monotonicity { None, Overestimates, Underestimates };

double post_solution_loss_bound(std::span<const double> values_simp, std::size_t simplified_best,
                                std::span<const double> ub_per_candidate, double lb_simplified_best,
                                Monotonicity monotonicity = Monotonicity::None);

}  // namespace bsp
