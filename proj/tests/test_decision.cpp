#include "doctest.h"

#include <algorithm>

#include "bsp/decision.hpp"
#include "support.hpp"

using namespace bsp;
using namespace bsp::testing;

namespace {

using Values = std::vector<double>;

/// Small integer-valued vectors so ties occur often.
Values random_values(Rng& rng, std::size_t n, int spread) {
  Values v(n);
  for (auto& x : v) x = uniform_int(rng, 0, spread);
  return v;
}

Values strictly_increasing_map(Rng& rng, const Values& v) {
  const double a = uniform(rng, 0.1, 5.0), b = uniform(rng, -10.0, 10.0);
  const int kind = uniform_int(rng, 0, 2);
  Values out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) {
    switch (kind) {
      case 0:
        return a * x + b;
      case 1:
        return std::exp(0.1 * x) + b;
      default:
        return x * x * x + a * x;
    }
  });
  return out;
}

}  // namespace

TEST_CASE("argmax and solve examples") {
  const Values v{-2.0, -1.5, -3.0};
  CHECK(argmax_lowest(v) == 1);
  const Values tie{1.0, 3.0, 3.0};
  CHECK(argmax_lowest(tie) == 1);

  DecisionProblem single{GaussianBelief(Eigen::VectorXd::Zero(2), UpperTriangulard::identity(2), VariableLayout::uniform(2, 1)),
                         {make_action(7, Eigen::MatrixXd::Zero(0, 2), 0)}};
  CHECK(solve(single).best_index == 0);

  DecisionProblem empty{single.belief, {}};
  CHECK_THROWS_AS(empty.validate(), InvalidSpec);
  DecisionProblem dup{single.belief, {single.candidates[0], single.candidates[0]}};
  CHECK_THROWS_AS(dup.validate(), InvalidSpec);
}

TEST_CASE("two-path toy argmax matches the dense oracle") {
  const auto toy = two_path_toy();
  const Eigen::MatrixXd lambda = toy.prior.root().toDense().transpose() * toy.prior.root().toDense();
  Values oracle;
  for (const auto& a : toy.candidates) oracle.push_back(dense_objective(lambda, a.jacobian.toDense()));
  const auto sol = solve(DecisionProblem{toy.prior, toy.candidates});
  CHECK(sol.best_index == argmax_lowest(oracle));
  for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(sol.values[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
}

TEST_CASE("parallel evaluation equals serial evaluation") {
  Rng rng(41);
  const Index n = 30;
  const GaussianBelief b(Eigen::VectorXd::Zero(n), random_root(rng, n, 0.2), VariableLayout::uniform(n, 1));
  std::vector<CandidateAction> cands;
  for (int c = 0; c < 12; ++c) {
    const Index n_new = uniform_int(rng, 0, 3);
    cands.push_back(make_action(c, random_update_dense(rng, n, n_new, 4, 0.2), n_new));
  }
  const auto serial = evaluate_candidates(b, cands, 1);
  for (unsigned w : {2u, 3u, 8u, 0u}) CHECK(evaluate_candidates(b, cands, w) == serial);
}

TEST_CASE("candidate failures carry the candidate id") {
  const GaussianBelief b(Eigen::VectorXd::Zero(2), UpperTriangulard::identity(2), VariableLayout::uniform(2, 1));
  std::vector<CandidateAction> cands{make_action(3, Eigen::MatrixXd::Ones(1, 2), 0),
                                     make_action(9, Eigen::MatrixXd::Zero(1, 3), 1),
                                     make_action(11, Eigen::MatrixXd::Zero(1, 4), 2)};
  for (unsigned w : {1u, 4u}) {
    try {
      evaluate_candidates(b, cands, w);
      FAIL("expected CandidateError");
    } catch (const CandidateError& e) {
      CHECK(e.candidateId() == 9);
    }
  }
}

TEST_CASE("simplification_loss examples") {
  const Values v{5, 3};
  CHECK(simplification_loss(v, 1) == 2.0);
  CHECK(simplification_loss(v, 0) == 0.0);
  CHECK_THROWS_AS(simplification_loss(v, 2), IndexOutOfRange);
}

TEST_CASE("action_consistent examples") {
  CHECK(action_consistent(Values{1, 2, 3}, Values{10, 20, 30}));
  CHECK_FALSE(action_consistent(Values{1, 2}, Values{2, 1}));
  CHECK(action_consistent(Values{1, 1, 2}, Values{3, 3, 7}));
  CHECK_FALSE(action_consistent(Values{1, 1, 2}, Values{3, 4, 7}));
  CHECK_THROWS_AS(action_consistent(Values{1}, Values{1, 2}), LengthMismatch);
  CHECK(action_consistent_tol(Values{1, 1 + 1e-12}, Values{2, 2}));
  CHECK_FALSE(action_consistent(Values{1, 1 + 1e-12}, Values{2, 2}));
}

TEST_CASE("offset examples") {
  const Values a{1, 2, 3}, b{1.5, 1.5, 4};
  CHECK(offset(a, b) == doctest::Approx(1.0));
  CHECK(offset(a, a) == 0.0);
  CHECK(offset(a, b, [](double x) { return x - 0.25; }) == doctest::Approx(0.75));
  CHECK(balanced_offset_upper(a, a) == 0.0);
  CHECK(balanced_offset_upper(a, b) == doctest::Approx(0.75));
  CHECK(balanced_offset_upper(Values{1, 2}, Values{5, 9}) == doctest::Approx(1.5));  // consistent pair, bound still positive
  CHECK_THROWS_AS(offset(a, Values{1}), LengthMismatch);
  CHECK_THROWS_AS(balanced_offset_upper(a, Values{1}), LengthMismatch);
}

TEST_CASE("rank_correlation examples") {
  CHECK(rank_correlation(Values{1, 2, 3}, Values{4, 9, 16}) == doctest::Approx(1.0));
  CHECK(rank_correlation(Values{1, 2, 3}, Values{3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(rank_correlation(Values{2, 2, 2}, Values{5, 5, 5}) == 1.0);
  CHECK(rank_correlation(Values{2, 2, 2}, Values{1, 5, 5}) == 0.0);
  CHECK_THROWS_AS(rank_correlation(Values{1}, Values{1}), DegenerateInput);
  CHECK(average_ranks(Values{3, 1, 3, 2}) == Values{3.5, 1, 3.5, 2});
}

TEST_CASE("equivalence-relation laws") {
  Rng rng(42);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const auto a = random_values(rng, n, 3);
    // Build b and c consistent with a half of the time so both branches get exercised.
    const auto b = coin(rng, 0.5) ? strictly_increasing_map(rng, a) : random_values(rng, n, 3);
    const auto c = coin(rng, 0.5) ? strictly_increasing_map(rng, b) : random_values(rng, n, 3);
    REQUIRE(action_consistent(a, a));
    REQUIRE(action_consistent(a, b) == action_consistent(b, a));
    if (action_consistent(a, b) && action_consistent(b, c)) REQUIRE(action_consistent(a, c));
  }
}

TEST_CASE("monotone maps preserve argmax and consistency") {
  Rng rng(43);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    const auto a = random_values(rng, n, 5);
    const auto b = random_values(rng, n, 5);
    const auto fa = strictly_increasing_map(rng, a);
    REQUIRE(argmax_lowest(fa) == argmax_lowest(a));
    REQUIRE(action_consistent(fa, a));
    REQUIRE(action_consistent(fa, b) == action_consistent(a, b));
  }
}

TEST_CASE("consistency implies zero loss and zero shift offset for shifted copies") {
  Rng rng(44);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    const auto a = random_values(rng, n, 5);
    const auto fa = strictly_increasing_map(rng, a);
    REQUIRE(simplification_loss(a, argmax_lowest(fa)) == 0.0);

    Values shifted(a);
    const double c = uniform(rng, -3.0, 3.0);
    for (auto& x : shifted) x += c;
    REQUIRE(balanced_offset_upper(a, shifted) <= 1e-12);
    REQUIRE(action_consistent_tol(a, shifted, 1e-9));
  }
}

TEST_CASE("loss lies between zero and twice the balanced offset bound") {
  Rng rng(45);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    Values a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = uniform(rng, -5.0, 5.0);
      b[i] = coin(rng, 0.3) ? a[i] + uniform(rng, -0.5, 0.5) : uniform(rng, -5.0, 5.0);
    }
    const double loss = simplification_loss(a, argmax_lowest(b));
    REQUIRE(loss >= 0.0);
    REQUIRE(loss <= 2.0 * balanced_offset_upper(a, b) + 1e-12);
  }
}

TEST_CASE("triangle inequality of the constant-shift offset bound") {
  Rng rng(46);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    Values a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = uniform(rng, -5.0, 5.0);
      b[i] = uniform(rng, -5.0, 5.0);
      c[i] = uniform(rng, -5.0, 5.0);
    }
    REQUIRE(balanced_offset_upper(a, b) + balanced_offset_upper(b, c) >= balanced_offset_upper(a, c) - 1e-12);
  }
}
