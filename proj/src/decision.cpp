#include "bsp/decision.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

namespace bsp {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw LengthMismatch("vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (a.empty()) throw LengthMismatch("empty value vectors");
}

int sign_of(double d, double tol) {
  if (d > tol) return 1;
  if (d < -tol) return -1;
  return 0;
}

}  // namespace

void DecisionProblem::validate() const {
  if (candidates.empty()) throw InvalidSpec("decision problem has no candidates");
  std::set<int> ids;
  for (const auto& a : candidates)
    if (!ids.insert(a.id).second) throw InvalidSpec("duplicate candidate id " + std::to_string(a.id));
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw LengthMismatch("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> evaluate_candidates(const GaussianBelief& b, std::span<const CandidateAction> candidates,
                                        unsigned workers) {
  const std::size_t n = candidates.size();
  std::vector<double> values(n, 0.0);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      values[i] = objective(b, candidates[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  const auto pool_size = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (pool_size <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(pool_size);
    for (unsigned t = 0; t < pool_size; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw CandidateError(candidates[i].id, e.what());
    }
  }
  return values;
}

Solution solve(const DecisionProblem& p, unsigned workers) {
  p.validate();
  Solution s;
  s.values = evaluate_candidates(p.belief, p.candidates, workers);
  s.best_index = argmax_lowest(s.values);
  return s;
}

double simplification_loss(std::span<const double> original_values, std::size_t simplified_best) {
  if (simplified_best >= original_values.size())
    throw IndexOutOfRange("selected index " + std::to_string(simplified_best) + " out of range");
  return *std::max_element(original_values.begin(), original_values.end()) - original_values[simplified_best];
}

bool action_consistent(std::span<const double> v1, std::span<const double> v2) {
  return action_consistent_tol(v1, v2, 0.0);
}

bool action_consistent_tol(std::span<const double> v1, std::span<const double> v2, double tol) {
  check_lengths(v1, v2);
  for (std::size_t i = 0; i < v1.size(); ++i)
    for (std::size_t j = i + 1; j < v1.size(); ++j)
      if (sign_of(v1[j] - v1[i], tol) != sign_of(v2[j] - v2[i], tol)) return false;
  return true;
}

double offset(std::span<const double> values_orig, std::span<const double> values_simp, const BalanceMap& balance) {
  check_lengths(values_orig, values_simp);
  double worst = 0.0;
  for (std::size_t i = 0; i < values_orig.size(); ++i) {
    const double s = balance ? balance(values_simp[i]) : values_simp[i];
    worst = std::max(worst, std::abs(values_orig[i] - s));
  }
  return worst;
}

double balanced_offset_upper(std::span<const double> values_orig, std::span<const double> values_simp) {
  check_lengths(values_orig, values_simp);
  double lo = values_orig[0] - values_simp[0];
  double hi = lo;
  for (std::size_t i = 1; i < values_orig.size(); ++i) {
    const double d = values_orig[i] - values_simp[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return 0.5 * (hi - lo);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double rank_correlation(std::span<const double> v1, std::span<const double> v2) {
  check_lengths(v1, v2);
  if (v1.size() < 2) throw DegenerateInput("rank correlation needs at least two values");
  const auto r1 = average_ranks(v1);
  const auto r2 = average_ranks(v2);
  const double n = static_cast<double>(r1.size());
  const double m1 = std::accumulate(r1.begin(), r1.end(), 0.0) / n;
  const double m2 = std::accumulate(r2.begin(), r2.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    sxy += (r1[i] - m1) * (r2[i] - m2);
    sxx += (r1[i] - m1) * (r1[i] - m1);
    syy += (r2[i] - m2) * (r2[i] - m2);
  }
  if (sxx == 0.0 || syy == 0.0) return (sxx == 0.0 && syy == 0.0) ? 1.0 : 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace bsp
