#include "doctest.h"

#include <set>

#include "bsp/decision.hpp"
#include "bsp/report_io.hpp"
#include "bsp/scenario.hpp"
#include "bsp/session.hpp"
#include "bsp/sparsify.hpp"
#include "support.hpp"

using namespace bsp;
using namespace bsp::testing;

namespace {

Eigen::Vector3d residual(const Pose2& pi, const Pose2& pj) {
  const double c = std::cos(pi.theta), s = std::sin(pi.theta);
  const double dx = pj.x - pi.x, dy = pj.y - pi.y;
  return {c * dx + s * dy, -s * dx + c * dy, pj.theta - pi.theta};
}

Pose2 nudge(Pose2 p, int k, double h) {
  (k == 0 ? p.x : k == 1 ? p.y : p.theta) += h;
  return p;
}

ScenarioConfig small_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.n_prior_poses = 40;
  cfg.world_extent = 12.0;
  cfg.n_candidates = 4;
  cfg.candidate_length = 6;
  return cfg;
}

}  // namespace

TEST_CASE("relative-pose Jacobian matches finite differences") {
  Rng rng(61);
  for (int t = 0; t < 100; ++t) {
    const Pose2 pi{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -3, 3)};
    const Pose2 pj{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -3, 3)};
    const auto [ji, jj] = relative_pose_jacobian(pi, pj);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d di = (residual(nudge(pi, k, h), pj) - residual(nudge(pi, k, -h), pj)) / (2 * h);
      const Eigen::Vector3d dj = (residual(pi, nudge(pj, k, h)) - residual(pi, nudge(pj, k, -h))) / (2 * h);
      REQUIRE((ji.col(k) - di).cwiseAbs().maxCoeff() < 1e-6);
      REQUIRE((jj.col(k) - dj).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("single odometry factor at identity gives [-I | I]") {
  VariableLayout layout;
  layout.append(0, BlockKind::Pose, 3);
  const std::vector<Pose2> poses{Pose2{}, Pose2{}};
  const std::vector<PoseFactor> f{{FactorType::Odometry, 0, 1, Eigen::Matrix3d::Identity()}};
  const auto a = build_collective_jacobian(f, layout, poses, 1);
  Eigen::MatrixXd expect(3, 6);
  expect << -Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity();
  CHECK(a.jacobian.toDense() == expect);
  CHECK(a.n_new_vars == 3);
  CHECK(a.new_blocks.size() == 1);

  const double s = 0.2;
  const std::vector<PoseFactor> w{{FactorType::Odometry, 0, 1, Eigen::Matrix3d::Identity() / s}};
  CHECK(max_abs_diff(build_collective_jacobian(w, layout, poses, 1).jacobian.toDense(), expect / s) < 1e-12);

  const auto none = build_collective_jacobian({}, layout, poses, 1);
  CHECK(none.jacobian.nRows() == 0);

  const std::vector<PoseFactor> bad{{FactorType::Odometry, 0, 5, Eigen::Matrix3d::Identity()}};
  CHECK_THROWS_AS(build_collective_jacobian(bad, layout, poses, 1), LayoutMismatch);
}

TEST_CASE("an empty candidate scores the negated prior entropy") {
  const auto s = generate(small_config(3));
  VariableLayout layout = s.prior.layout();
  const auto a = build_collective_jacobian({}, layout, s.poses, static_cast<int>(s.poses.size()));
  CHECK(objective(s.prior, a) == doctest::Approx(-entropy(s.prior)).epsilon(1e-12));
}

TEST_CASE("generation is deterministic") {
  const auto cfg = small_config(7);
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  CHECK(a.prior.root() == b.prior.root());
  auto other = cfg;
  other.seed = 8;
  CHECK(scenario_to_json(generate(other)) != scenario_to_json(a));
}

TEST_CASE("a three-pose chain has a block-tridiagonal prior") {
  ScenarioConfig cfg;
  cfg.n_prior_poses = 3;
  cfg.n_candidates = 2;
  cfg.candidate_length = 3;
  const auto s = generate(cfg);
  for (const auto& f : s.factors) CHECK(f.type != FactorType::Loop);
  const Eigen::MatrixXd lambda = s.prior.information().toDense();
  CHECK(lambda.block(0, 6, 3, 3).isZero(0.0));
  CHECK_FALSE(lambda.block(0, 3, 3, 3).isZero(0.0));
  CHECK_FALSE(lambda.block(3, 6, 3, 3).isZero(0.0));
}

TEST_CASE("prior root reproduces the sum of whitened factor outer products") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = generate(small_config(seed));
    const auto n = static_cast<int>(s.poses.size());
    const auto all = build_collective_jacobian(s.factors, s.prior.layout(), s.poses, n);
    const Eigen::MatrixXd u = all.jacobian.toDense();
    const Eigen::MatrixXd expect = u.transpose() * u;
    const Eigen::MatrixXd got = s.prior.root().toDense().transpose() * s.prior.root().toDense();
    REQUIRE(max_abs_diff(got, expect) < 1e-8);
  }
}

TEST_CASE("involvement is exactly the branch pose plus loop-closure targets") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = generate(small_config(seed));
    const int n = static_cast<int>(s.poses.size());
    std::set<int> expect{s.branchIndex()};
    for (const auto& c : s.candidates) {
      for (const auto& f : c.factors) {
        if (f.i >= 0 && f.i < n) expect.insert(f.i);
        if (f.j < n) expect.insert(f.j);
        if (f.type == FactorType::Loop) {
          const auto& p = c.new_poses[static_cast<std::size_t>(f.j - n)];
          const auto& q = s.poses[static_cast<std::size_t>(f.i)];
          REQUIRE(std::hypot(p.x - q.x, p.y - q.y) <= s.config.loop_closure_radius + 1e-12);
        }
      }
    }
    const auto mask = detect_involvement(s.prior.layout(), s.actions);
    REQUIRE(std::set<int>(mask.involved_blocks.begin(), mask.involved_blocks.end()) == expect);
    REQUIRE(never_involved_blocks(s.prior.layout(), mask).size() >= 1);
  }
}

TEST_CASE("candidate evaluation order does not matter") {
  const auto s = generate(small_config(11));
  const auto forward = evaluate_candidates(s.prior, s.actions, 1);
  std::vector<CandidateAction> reversed(s.actions.rbegin(), s.actions.rend());
  const auto backward = evaluate_candidates(s.prior, reversed, 3);
  for (std::size_t i = 0; i < forward.size(); ++i) CHECK(forward[i] == backward[forward.size() - 1 - i]);
}

TEST_CASE("topological bounds bracket the objective on generated sessions") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = generate(small_config(seed));
    for (std::size_t c = 0; c < s.actions.size(); ++c) {
      const auto g = posterior_pose_graph(s, c);
      const auto raw = topological_bounds(g, topological_noise(s, c, s.config.noiseRatio()));
      const auto b = to_objective_scale(raw, s.prior.dim() + s.actions[c].n_new_vars);
      const double j = objective(s.prior, s.actions[c]);
      const double tol = 1e-9 * (1.0 + std::abs(j));
      REQUIRE(b.lb <= j + tol);
      REQUIRE(j <= b.ub + tol);
    }
  }
}

TEST_CASE("session report invariants") {
  SessionOptions opts;
  opts.repetitions = 1;
  opts.workers = 1;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rep = run_session(generate(small_config(seed)), opts);
    REQUIRE(rep.modes.size() == 3);
    CHECK_FALSE(rep.baseline().loss.has_value());
    const auto* u = rep.find(SparsificationMode::Uninvolved);
    REQUIRE(u != nullptr);
    CHECK(*u->loss == 0.0);
    CHECK(*u->rho == doctest::Approx(1.0));
    CHECK(*rep.theorem1Discrepancy() <= 1e-6);
    CHECK(rep.top_violations == 0);
    CHECK(rep.det_violations == 0);
    CHECK(rep.loss_bound_violations == 0);
    const auto* f = rep.find(SparsificationMode::Full);
    REQUIRE(f != nullptr);
    CHECK(f->root_nnz == rep.dim);
    for (std::size_t r = 1; r < u->ratio_loss_bounds.size(); ++r)
      CHECK(u->ratio_loss_bounds[r] >= u->ratio_loss_bounds[r - 1]);
  }
}

TEST_CASE("config validation") {
  ScenarioConfig cfg;
  cfg.position_std = 0.0;
  CHECK_THROWS_AS(generate(cfg), InvalidSpec);
  cfg = ScenarioConfig{};
  cfg.n_candidates = 0;
  CHECK_THROWS_AS(generate(cfg), InvalidSpec);
  CHECK(ScenarioConfig{}.noiseRatio() == doctest::Approx(0.25));
  CHECK_THROWS_AS(factor_type_from_string("gps"), SchemaError);
}
