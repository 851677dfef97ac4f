#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsp/belief.hpp"
#include "bsp/bounds.hpp"

namespace bsp {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  int n_prior_poses = 100;
  double world_extent = 30.0;  // side of the square workspace, meters
  double position_std = 0.1;   // meters
  double angular_std = 0.05;   // radians
  double loop_closure_radius = 2.0;
  int n_candidates = 8;
  int candidate_length = 10;
  int min_loop_gap = 10;  // index gap between loop-closing poses
  double step_length = 1.0;
  double turn_std = 0.3;  // heading random walk per step, radians

  /// Throws InvalidSpec on non-positive sizes or noise.
  void validate() const;
  /// Angular to position variance ratio of the factor noise.
  double noiseRatio() const { return (angular_std * angular_std) / (position_std * position_std); }
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

enum class FactorType { Prior, Odometry, Loop };

std::string to_string(FactorType t);
FactorType factor_type_from_string(const std::string& s);

/// Relative-pose factor from pose i to pose j. Prior factors anchor pose j to
/// the world origin and use i = -1. Pose indices count prior poses first,
/// then the new poses of a candidate.
struct PoseFactor {
  FactorType type = FactorType::Odometry;
  int i = -1;
  int j = 0;
  Eigen::Matrix3d sqrt_info = Eigen::Matrix3d::Identity();

  bool operator==(const PoseFactor& o) const {
    return type == o.type && i == o.i && j == o.j && sqrt_info == o.sqrt_info;
  }
};

struct CandidatePath {
  int id = 0;
  std::vector<Pose2> new_poses;
  std::vector<PoseFactor> factors;

  friend bool operator==(const CandidatePath&, const CandidatePath&) = default;
};

/// Serializable scenario content plus the prior belief and candidate
/// actions assembled from it.
struct Scenario {
  ScenarioConfig config;
  std::vector<Pose2> poses;
  std::vector<PoseFactor> factors;
  std::vector<CandidatePath> candidates;

  GaussianBelief prior;
  std::vector<CandidateAction> actions;

  int branchIndex() const { return static_cast<int>(poses.size()) - 1; }
};

/// Jacobians of the whitened-free residual [R(ti)^T (pj - pi); tj - ti]
/// with respect to pose i and pose j.
std::pair<Eigen::Matrix3d, Eigen::Matrix3d> relative_pose_jacobian(const Pose2& pi, const Pose2& pj);

/// Whitened rows of a factor list over `layout` (prior blocks, then new
/// pose blocks). `poses` holds linearization points for every index.
CandidateAction build_collective_jacobian(std::span<const PoseFactor> factors, const VariableLayout& layout,
                                          std::span<const Pose2> poses, int n_prior_poses, int candidate_id = 0);

/// Factorizes the accumulated whitened prior factors.
GaussianBelief build_prior(std::span<const Pose2> poses, std::span<const PoseFactor> factors);

/// Builds prior and actions from serializable content.
Scenario assemble_scenario(ScenarioConfig cfg, std::vector<Pose2> poses, std::vector<PoseFactor> factors,
                           std::vector<CandidatePath> candidates);

Scenario generate(const ScenarioConfig& cfg);

/// Diagonal square-root information shared by every generated factor.
Eigen::Matrix3d factor_sqrt_info(const ScenarioConfig& cfg);

/// Node 0 is the world frame, node k + 1 is pose k.
PoseGraph prior_pose_graph(const Scenario& s);
PoseGraph posterior_pose_graph(const Scenario& s, std::size_t candidate);

/// Noise constants for the topological bounds of one candidate posterior.
/// mu is exact for the shared diagonal noise model; psi = ratio * max_i delta_i
/// where delta_i sums squared factor displacements leaving pose i.
TopologicalNoiseConfig topological_noise(const Scenario& s, std::size_t candidate, double ratio);

}  // namespace bsp
