#include "bsp/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bsp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool within(const BoundPair& b, double j) {
  const double tol = 1e-9 * (1.0 + std::abs(j));
  return b.lb <= j + tol && j <= b.ub + tol;
}

double loss_bound_or_throw(const ModeResult& m, std::span<const BoundPair> bounds) {
  std::vector<double> ub;
  ub.reserve(bounds.size());
  for (const auto& b : bounds) ub.push_back(b.ub);
  return post_solution_loss_bound(m.values, m.best_index, ub, bounds[m.best_index].lb);
}

}  // namespace

const ModeResult* SessionReport::find(SparsificationMode mode) const {
  for (const auto& m : modes)
    if (m.spec.mode == mode) return &m;
  return nullptr;
}

std::optional<double> SessionReport::theorem1Discrepancy() const {
  const ModeResult* m = find(SparsificationMode::Uninvolved);
  if (m == nullptr) return std::nullopt;
  double worst = 0.0;
  for (std::size_t i = 0; i < m->values.size(); ++i)
    worst = std::max(worst, std::abs(m->values[i] - baseline().values[i]));
  return worst;
}

BoundPair to_objective_scale(const BoundPair& logdet_bounds, Index dim) {
  const double norm = static_cast<double>(dim) * kLogTwoPiE;
  return {0.5 * (logdet_bounds.lb - norm), 0.5 * (logdet_bounds.ub - norm)};
}

SessionReport run_session(const Scenario& s, const SessionOptions& opts) {
  if (opts.repetitions < 1) throw InvalidSpec("repetitions must be positive");
  const auto& prior = s.prior;
  const auto& actions = s.actions;
  const std::size_t n_cand = actions.size();
  if (n_cand == 0) throw InvalidSpec("scenario has no candidates");

  SessionReport rep;
  rep.seed = s.config.seed;
  rep.dim = prior.dim();
  rep.n_blocks = prior.layout().blockCount();
  rep.ratios = opts.ratios;
  rep.actual_ratio = s.config.noiseRatio();
  for (const auto& a : actions) rep.candidate_ids.push_back(a.id);
  const InvolvementMask mask = detect_involvement(prior.layout(), actions);
  rep.n_never_involved = never_involved_blocks(prior.layout(), mask).size();

  std::vector<SparsificationSpec> specs{SparsificationSpec::none()};
  for (const auto& m : opts.modes)
    if (m.mode != SparsificationMode::None) specs.push_back(m);

  for (const auto& spec : specs) {
    ModeResult m;
    m.spec = spec;
    std::vector<double> t_sparsify, t_eval;
    std::optional<GaussianBelief> belief;
    for (int r = 0; r < opts.repetitions; ++r) {
      auto t0 = Clock::now();
      if (spec.mode == SparsificationMode::Uninvolved) {
        const InvolvementMask fresh = detect_involvement(prior.layout(), actions);
        belief.emplace(sparsify_belief(prior, spec, &fresh));
      } else {
        belief.emplace(sparsify_belief(prior, spec, &mask));
      }
      t_sparsify.push_back(spec.mode == SparsificationMode::None ? 0.0 : seconds_since(t0));
      t0 = Clock::now();
      m.values = evaluate_candidates(*belief, actions, opts.workers);
      m.best_index = argmax_lowest(m.values);
      t_eval.push_back(seconds_since(t0));
    }
    m.sparsify_seconds = median(t_sparsify);
    m.evaluate_seconds = median(t_eval);
    m.sparsified_blocks = resolve_blocks(prior.layout(), spec, &mask).size();
    const NnzReport nnz = nnz_report(*belief);
    m.root_nnz = nnz.root_nnz;
    m.info_nnz = nnz.info_nnz;

    for (std::size_t c = 0; c < n_cand; ++c) {
      m.det_bounds.push_back(determinant_bounds(*belief, actions[c]));
      if (!within(m.det_bounds.back(), m.values[c])) ++rep.det_violations;
    }
    rep.modes.push_back(std::move(m));
  }

  // Topological bounds depend only on the posterior graphs, shared by all modes.
  const ModeResult& base = rep.modes.front();
  rep.ratio_top_bounds.assign(opts.ratios.size(), {});
  for (std::size_t c = 0; c < n_cand; ++c) {
    const PoseGraph g = posterior_pose_graph(s, c);
    const Index post_dim = prior.dim() + actions[c].n_new_vars;
    const auto actual = topological_noise(s, c, rep.actual_ratio);
    rep.top_bounds.push_back(to_objective_scale(topological_bounds(g, actual), post_dim));
    if (!within(rep.top_bounds.back(), base.values[c])) ++rep.top_violations;
    for (std::size_t k = 0; k < opts.ratios.size(); ++k) {
      auto cfg = topological_noise(s, c, opts.ratios[k]);
      cfg.mu = 0.0;
      rep.ratio_top_bounds[k].push_back(to_objective_scale(topological_bounds(g, cfg), post_dim));
    }
  }

  for (std::size_t k = 0; k < rep.modes.size(); ++k) {
    ModeResult& m = rep.modes[k];
    const double actual_loss = simplification_loss(base.values, m.best_index);
    try {
      m.det_loss_bound = loss_bound_or_throw(m, base.det_bounds);
      m.top_loss_bound = loss_bound_or_throw(m, rep.top_bounds);
    } catch (const InconsistentBounds&) {
      ++rep.loss_bound_violations;
    }
    if (m.det_loss_bound && *m.det_loss_bound < actual_loss) ++rep.loss_bound_violations;
    if (m.top_loss_bound && *m.top_loss_bound < actual_loss) ++rep.loss_bound_violations;
    for (const auto& bounds : rep.ratio_top_bounds) m.ratio_loss_bounds.push_back(loss_bound_or_throw(m, bounds));
    if (k == 0) continue;
    m.loss = actual_loss;
    m.offset = offset(base.values, m.values);
    m.balanced_offset_upper = balanced_offset_upper(base.values, m.values);
    m.rho = n_cand >= 2 ? rank_correlation(base.values, m.values) : 1.0;
    m.consistent = action_consistent(base.values, m.values);
    m.consistent_tol = action_consistent_tol(base.values, m.values, opts.consistency_tol);
  }
  return rep;
}

std::vector<BenchRow> aggregate(const std::vector<SessionReport>& reports) {
  std::vector<BenchRow> rows;
  if (reports.empty()) return rows;
  for (std::size_t k = 0; k < reports.front().modes.size(); ++k) {
    BenchRow row;
    row.mode = reports.front().modes[k].spec.name();
    std::vector<double> dims, ratio, runtime, share, nnz, rho;
    for (const auto& rep : reports) {
      if (k >= rep.modes.size()) continue;
      const ModeResult& m = rep.modes[k];
      const ModeResult& base = rep.baseline();
      dims.push_back(static_cast<double>(rep.dim));
      ratio.push_back(rep.neverInvolvedRatio());
      runtime.push_back(base.totalSeconds() > 0.0 ? m.totalSeconds() / base.totalSeconds() - 1.0 : 0.0);
      share.push_back(m.sparsifyShare());
      nnz.push_back(static_cast<double>(m.root_nnz) / static_cast<double>(base.root_nnz) - 1.0);
      rho.push_back(m.rho.value_or(1.0));
      row.loss_max = std::max(row.loss_max, m.loss.value_or(0.0));
    }
    row.sessions = dims.size();
    if (row.sessions == 0) continue;
    row.median_dim = median(dims);
    row.never_involved_ratio = median(ratio);
    row.runtime_delta = median(runtime);
    row.sparsify_share = median(share);
    row.nnz_delta = median(nnz);
    row.rho_median = median(rho);
    row.rho_min = *std::min_element(rho.begin(), rho.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bsp
