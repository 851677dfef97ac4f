#include "bsp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "bsp/sparsify.hpp"

namespace bsp {

void ScenarioConfig::validate() const {
  if (n_prior_poses < 1) throw InvalidSpec("n_prior_poses must be positive");
  if (n_candidates < 1) throw InvalidSpec("n_candidates must be positive");
  if (candidate_length < 1) throw InvalidSpec("candidate_length must be positive");
  if (!(position_std > 0.0) || !(angular_std > 0.0)) throw InvalidSpec("noise standard deviations must be positive");
  if (!(loop_closure_radius > 0.0)) throw InvalidSpec("loop_closure_radius must be positive");
  if (!(world_extent > 0.0)) throw InvalidSpec("world_extent must be positive");
  if (!(step_length > 0.0)) throw InvalidSpec("step_length must be positive");
  if (turn_std < 0.0) throw InvalidSpec("turn_std must be non-negative");
  if (min_loop_gap < 1) throw InvalidSpec("min_loop_gap must be positive");
}

std::string to_string(FactorType t) {
  switch (t) {
    case FactorType::Prior:
      return "prior";
    case FactorType::Odometry:
      return "odom";
    case FactorType::Loop:
      return "loop";
  }
  return "odom";
}

FactorType factor_type_from_string(const std::string& s) {
  if (s == "prior") return FactorType::Prior;
  if (s == "odom") return FactorType::Odometry;
  if (s == "loop") return FactorType::Loop;
  throw SchemaError("unknown factor type '" + s + "'");
}

std::pair<Eigen::Matrix3d, Eigen::Matrix3d> relative_pose_jacobian(const Pose2& pi, const Pose2& pj) {
  const double c = std::cos(pi.theta), s = std::sin(pi.theta);
  const double dx = pj.x - pi.x, dy = pj.y - pi.y;
  Eigen::Matrix3d ji, jj;
  ji << -c, -s, -s * dx + c * dy,
         s, -c, -c * dx - s * dy,
         0, 0, -1;
  jj << c, s, 0,
       -s, c, 0,
        0, 0, 1;
  return {ji, jj};
}

namespace {

const Pose2 kOrigin{};

/// Whitened 3x3 blocks of one factor: (block for i, block for j).
std::pair<Eigen::Matrix3d, Eigen::Matrix3d> whitened_blocks(const PoseFactor& f, std::span<const Pose2> poses) {
  const auto n = static_cast<int>(poses.size());
  if (f.j < 0 || f.j >= n || f.i >= n || (f.i < 0 && f.type != FactorType::Prior))
    throw LayoutMismatch("factor references a missing pose");
  const Pose2& from = f.i < 0 ? kOrigin : poses[static_cast<std::size_t>(f.i)];
  auto [ji, jj] = relative_pose_jacobian(from, poses[static_cast<std::size_t>(f.j)]);
  return {f.sqrt_info * ji, f.sqrt_info * jj};
}

void append_rows(std::vector<SparseRowd>& rows, const PoseFactor& f, const Eigen::Matrix3d& wi,
                 const Eigen::Matrix3d& wj, Index off_i, Index off_j) {
  for (int r = 0; r < 3; ++r) {
    SparseRowd row;
    for (int k = 0; k < 3; ++k) {
      if (f.i >= 0) row.push_back({off_i + k, wi(r, k)});
      row.push_back({off_j + k, wj(r, k)});
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
    std::erase_if(row, [](const auto& e) { return e.value == 0.0; });
    rows.push_back(std::move(row));
  }
}

}  // namespace

CandidateAction build_collective_jacobian(std::span<const PoseFactor> factors, const VariableLayout& layout,
                                          std::span<const Pose2> poses, int n_prior_poses, int candidate_id) {
  const auto total = static_cast<int>(poses.size());
  const int n_new = total - n_prior_poses;
  if (n_new < 0 || static_cast<int>(layout.blockCount()) != n_prior_poses || layout.dim() != 3 * n_prior_poses)
    throw LayoutMismatch("layout does not hold the prior poses as 3-scalar blocks");
  auto offset = [&](int pose) -> Index {
    if (pose < n_prior_poses) return layout.blocks()[static_cast<std::size_t>(pose)].offset;
    return layout.dim() + 3 * static_cast<Index>(pose - n_prior_poses);
  };

  std::vector<SparseRowd> rows;
  rows.reserve(3 * factors.size());
  for (const auto& f : factors) {
    auto [wi, wj] = whitened_blocks(f, poses);
    append_rows(rows, f, wi, wj, f.i >= 0 ? offset(f.i) : 0, offset(f.j));
  }

  CandidateAction a;
  a.id = candidate_id;
  a.n_new_vars = 3 * static_cast<Index>(n_new);
  a.jacobian = SparseRowBlockd(layout.dim() + a.n_new_vars, std::move(rows));
  a.predicted_new_means.resize(a.n_new_vars);
  for (int k = 0; k < n_new; ++k) {
    const Pose2& p = poses[static_cast<std::size_t>(n_prior_poses + k)];
    a.predicted_new_means.segment<3>(3 * k) << p.x, p.y, p.theta;
    a.new_blocks.push_back({BlockKind::Pose, 3});
  }
  return a;
}

GaussianBelief build_prior(std::span<const Pose2> poses, std::span<const PoseFactor> factors) {
  const auto n = static_cast<int>(poses.size());
  if (n < 1) throw InvalidSpec("prior needs at least one pose");
  std::map<std::pair<Index, Index>, double> acc;
  for (const auto& f : factors) {
    auto [wi, wj] = whitened_blocks(f, poses);
    struct Part {
      Index offset;
      const Eigen::Matrix3d* m;
    };
    std::vector<Part> parts{{3 * static_cast<Index>(f.j), &wj}};
    if (f.i >= 0) parts.push_back({3 * static_cast<Index>(f.i), &wi});
    for (const auto& a : parts)
      for (const auto& b : parts) {
        const Eigen::Matrix3d block = a.m->transpose() * *b.m;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) {
            const Index row = a.offset + r, col = b.offset + c;
            if (row <= col && block(r, c) != 0.0) acc[{row, col}] += block(r, c);
          }
      }
  }
  std::vector<Triplet<double>> entries;
  entries.reserve(acc.size());
  for (const auto& [key, v] : acc)
    if (v != 0.0) entries.push_back({key.first, key.second, v});
  const Index dim = 3 * static_cast<Index>(n);
  UpperTriangulard root = cholesky(SparseSymmetricd(dim, std::move(entries)));

  Eigen::VectorXd mean(dim);
  for (int k = 0; k < n; ++k) mean.segment<3>(3 * k) << poses[k].x, poses[k].y, poses[k].theta;
  return GaussianBelief(std::move(mean), std::move(root), VariableLayout::uniform(n, 3, BlockKind::Pose));
}

Scenario assemble_scenario(ScenarioConfig cfg, std::vector<Pose2> poses, std::vector<PoseFactor> factors,
                           std::vector<CandidatePath> candidates) {
  GaussianBelief prior = build_prior(poses, factors);
  std::vector<CandidateAction> actions;
  actions.reserve(candidates.size());
  const auto n_prior = static_cast<int>(poses.size());
  for (const auto& c : candidates) {
    std::vector<Pose2> all = poses;
    all.insert(all.end(), c.new_poses.begin(), c.new_poses.end());
    actions.push_back(build_collective_jacobian(c.factors, prior.layout(), all, n_prior, c.id));
  }
  return Scenario{std::move(cfg), std::move(poses), std::move(factors), std::move(candidates), std::move(prior),
                  std::move(actions)};
}

Eigen::Matrix3d factor_sqrt_info(const ScenarioConfig& cfg) {
  return Eigen::Vector3d(1.0 / cfg.position_std, 1.0 / cfg.position_std, 1.0 / cfg.angular_std).asDiagonal();
}

namespace {

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

double distance(const Pose2& a, const Pose2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Nearest pose among poses[0..last] within `radius`, or -1.
int nearest_within(std::span<const Pose2> poses, int last, const Pose2& p, double radius) {
  int best = -1;
  double best_d = radius;
  for (int i = 0; i <= last; ++i) {
    const double d = distance(poses[static_cast<std::size_t>(i)], p);
    if (d <= best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<Pose2> random_walk(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> turn(0.0, cfg.turn_std);
  std::uniform_real_distribution<double> heading0(-std::numbers::pi, std::numbers::pi);
  const double half = 0.5 * cfg.world_extent;
  std::vector<Pose2> poses{{0.0, 0.0, heading0(rng)}};
  for (int k = 1; k < cfg.n_prior_poses; ++k) {
    const Pose2& prev = poses.back();
    double h = prev.theta + turn(rng);
    double x = prev.x + cfg.step_length * std::cos(h);
    double y = prev.y + cfg.step_length * std::sin(h);
    if (std::abs(x) > half || std::abs(y) > half) {
      h = std::atan2(-prev.y, -prev.x) + turn(rng);
      x = prev.x + cfg.step_length * std::cos(h);
      y = prev.y + cfg.step_length * std::sin(h);
    }
    poses.push_back({x, y, wrap_angle(h)});
  }
  return poses;
}

/// Poses evenly spaced by arc length along start -> via -> goal, excluding start.
std::vector<Pose2> resample_polyline(const Pose2& start, const Pose2& via, const Pose2& goal, int count) {
  const Pose2 pts[3] = {start, via, goal};
  const double l1 = distance(start, via), l2 = distance(via, goal);
  const double total = l1 + l2;
  std::vector<Pose2> out;
  for (int k = 1; k <= count; ++k) {
    const double s = total * k / count;
    const int seg = (s <= l1 || l2 == 0.0) ? 0 : 1;
    const double len = seg == 0 ? l1 : l2;
    const double t = len > 0.0 ? std::clamp((s - (seg == 0 ? 0.0 : l1)) / len, 0.0, 1.0) : 1.0;
    const Pose2& a = pts[seg];
    const Pose2& b = pts[seg + 1];
    const double heading = len > 0.0 ? std::atan2(b.y - a.y, b.x - a.x) : start.theta;
    out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), heading});
  }
  return out;
}

std::vector<CandidatePath> sample_candidates(const ScenarioConfig& cfg, std::span<const Pose2> poses,
                                             const Eigen::Matrix3d& info, std::mt19937_64& rng) {
  const auto n = static_cast<int>(poses.size());
  const int branch = n - 1;
  const int last_closable = n - 1 - cfg.min_loop_gap;
  std::uniform_int_distribution<int> goal_pick(0, std::max(0, last_closable));
  std::normal_distribution<double> jitter(0.0, 0.1);

  const Pose2& start = poses[static_cast<std::size_t>(branch)];
  const Pose2& goal = poses[static_cast<std::size_t>(goal_pick(rng))];
  const double dx = goal.x - start.x, dy = goal.y - start.y;
  const double len = std::hypot(dx, dy);
  const double nx = len > 0.0 ? -dy / len : 0.0, ny = len > 0.0 ? dx / len : 1.0;
  const double spread = std::max(len, 2.0 * cfg.step_length);

  std::vector<CandidatePath> out;
  for (int c = 0; c < cfg.n_candidates; ++c) {
    const double lateral =
        cfg.n_candidates == 1 ? 0.0 : (static_cast<double>(c) / (cfg.n_candidates - 1) - 0.5) * spread;
    const Pose2 via{start.x + 0.5 * dx + (lateral + jitter(rng)) * nx,
                    start.y + 0.5 * dy + (lateral + jitter(rng)) * ny, 0.0};
    CandidatePath path;
    path.id = c;
    path.new_poses = resample_polyline(start, via, goal, cfg.candidate_length);
    for (int k = 0; k < cfg.candidate_length; ++k) {
      const int pose = n + k;
      path.factors.push_back({FactorType::Odometry, k == 0 ? branch : pose - 1, pose, info});
      if (last_closable < 0) continue;
      const int target =
          nearest_within(poses, last_closable, path.new_poses[static_cast<std::size_t>(k)], cfg.loop_closure_radius);
      if (target >= 0) path.factors.push_back({FactorType::Loop, target, pose, info});
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const Eigen::Matrix3d info = factor_sqrt_info(cfg);

  std::vector<Pose2> poses = random_walk(cfg, rng);
  std::vector<PoseFactor> factors{{FactorType::Prior, -1, 0, info}};
  for (int j = 1; j < cfg.n_prior_poses; ++j) {
    factors.push_back({FactorType::Odometry, j - 1, j, info});
    const int target = nearest_within(poses, j - cfg.min_loop_gap, poses[static_cast<std::size_t>(j)],
                                      cfg.loop_closure_radius);
    if (target >= 0) factors.push_back({FactorType::Loop, target, j, info});
  }

  constexpr int kMaxAttempts = 32;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto candidates = sample_candidates(cfg, poses, info, rng);
    Scenario s = assemble_scenario(cfg, poses, factors, std::move(candidates));
    if (cfg.n_prior_poses < 10) return s;
    const auto mask = detect_involvement(s.prior.layout(), s.actions);
    if (!never_involved_blocks(s.prior.layout(), mask).empty()) return s;
  }
  throw InfeasibleConfig("no candidate set leaves a prior pose uninvolved after " + std::to_string(kMaxAttempts) +
                         " attempts");
}

namespace {

void add_edges(PoseGraph& g, std::span<const PoseFactor> factors) {
  for (const auto& f : factors) g.edges.emplace_back(f.i + 1, f.j + 1);
}

}  // namespace

PoseGraph prior_pose_graph(const Scenario& s) {
  PoseGraph g{static_cast<int>(s.poses.size()) + 1, {}};
  add_edges(g, s.factors);
  return g;
}

PoseGraph posterior_pose_graph(const Scenario& s, std::size_t candidate) {
  const auto& c = s.candidates.at(candidate);
  PoseGraph g{static_cast<int>(s.poses.size() + c.new_poses.size()) + 1, {}};
  add_edges(g, s.factors);
  add_edges(g, c.factors);
  return g;
}

TopologicalNoiseConfig topological_noise(const Scenario& s, std::size_t candidate, double ratio) {
  if (!(ratio > 0.0)) throw InvalidSpec("noise ratio must be positive");
  const auto& c = s.candidates.at(candidate);
  std::vector<Pose2> all = s.poses;
  all.insert(all.end(), c.new_poses.begin(), c.new_poses.end());

  const Eigen::Matrix3d& ref = s.factors.front().sqrt_info;
  std::vector<double> delta(all.size(), 0.0);
  auto visit = [&](const PoseFactor& f) {
    if (f.sqrt_info != ref || !ref.isDiagonal() || ref(0, 0) != ref(1, 1))
      throw InvalidSpec("topological bounds need one shared diagonal noise model");
    if (f.i >= 0) {
      const double d = distance(all[static_cast<std::size_t>(f.i)], all[static_cast<std::size_t>(f.j)]);
      delta[static_cast<std::size_t>(f.i)] += d * d;
    }
  };
  for (const auto& f : s.factors) visit(f);
  for (const auto& f : c.factors) visit(f);

  const double w_p = ref(0, 0) * ref(0, 0), w_t = ref(2, 2) * ref(2, 2);
  const double n = static_cast<double>(all.size());
  TopologicalNoiseConfig out;
  out.mu = n * (2.0 * std::log(w_p) + std::log(w_t));
  out.psi = ratio * *std::max_element(delta.begin(), delta.end());
  out.ratio = ratio;
  return out;
}

}  // namespace bsp
