#include "bsp/sparsify.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <set>

namespace bsp {

std::string to_string(SparsificationMode mode) {
  switch (mode) {
    case SparsificationMode::None:
      return "none";
    case SparsificationMode::Uninvolved:
      return "uninvolved";
    case SparsificationMode::Full:
      return "full";
    case SparsificationMode::Custom:
      return "custom";
  }
  return "none";
}

SparsificationMode parse_mode(const std::string& s) {
  if (s == "none") return SparsificationMode::None;
  if (s == "uninvolved") return SparsificationMode::Uninvolved;
  if (s == "full") return SparsificationMode::Full;
  if (s == "custom") return SparsificationMode::Custom;
  throw InvalidSpec("unknown sparsification mode '" + s + "'");
}

bool InvolvementMask::involved(int block_id) const {
  return std::binary_search(involved_blocks.begin(), involved_blocks.end(), block_id);
}

InvolvementMask detect_involvement(const VariableLayout& layout, std::span<const CandidateAction> candidates) {
  const Index prior_dim = layout.dim();
  const auto& blocks = layout.blocks();
  InvolvementMask mask;
  std::set<int> all;
  for (const auto& a : candidates) {
    a.validate(prior_dim);
    std::vector<char> hit(blocks.size(), 0);
    for (const auto& row : a.jacobian.rows())
      for (const auto& e : row)
        if (e.col < prior_dim) hit[layout.blockIndexOfScalar(e.col)] = 1;
    std::vector<int> ids;
    for (std::size_t k = 0; k < blocks.size(); ++k)
      if (hit[k]) ids.push_back(blocks[k].id);
    std::sort(ids.begin(), ids.end());
    all.insert(ids.begin(), ids.end());
    mask.per_candidate.push_back(std::move(ids));
  }
  mask.involved_blocks.assign(all.begin(), all.end());
  return mask;
}

std::vector<int> never_involved_blocks(const VariableLayout& layout, const InvolvementMask& mask) {
  std::vector<int> out;
  for (const auto& b : layout.blocks())
    if (!mask.involved(b.id)) out.push_back(b.id);
  return out;
}

std::vector<int> resolve_blocks(const VariableLayout& layout, const SparsificationSpec& spec,
                                const InvolvementMask* mask) {
  std::vector<int> out;
  switch (spec.mode) {
    case SparsificationMode::None:
      break;
    case SparsificationMode::Full:
      for (const auto& b : layout.blocks()) out.push_back(b.id);
      break;
    case SparsificationMode::Uninvolved:
      if (mask == nullptr) throw InvalidSpec("uninvolved mode requires an involvement mask");
      out = never_involved_blocks(layout, *mask);
      break;
    case SparsificationMode::Custom: {
      std::set<int> wanted(spec.custom_blocks.begin(), spec.custom_blocks.end());
      for (int id : wanted)
        if (!layout.indexOf(id)) throw InvalidSpec("custom block " + std::to_string(id) + " is not in the layout");
      for (const auto& b : layout.blocks())
        if (wanted.count(b.id)) out.push_back(b.id);
      break;
    }
  }
  return out;
}

namespace {

UpperTriangulard drop_off_diagonal(const UpperTriangulard& r, Index leading) {
  std::vector<SparseRowd> rows(r.rows().begin(), r.rows().end());
  for (Index i = 0; i < leading; ++i) rows[static_cast<std::size_t>(i)].clear();
  return UpperTriangulard(unchecked, r.diagonal(), std::move(rows));
}

bool is_prefix(std::span<const Index> sorted_s) {
  for (std::size_t k = 0; k < sorted_s.size(); ++k)
    if (sorted_s[k] != static_cast<Index>(k)) return false;
  return true;
}

}  // namespace

SparsificationTrace sparsify_root_traced(const UpperTriangulard& r, std::span<const Index> s) {
  const Index n = r.dim();
  std::vector<Index> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (Index i : sorted)
    if (i < 0 || i >= n) throw InvalidSpec("sparsified index out of range");
  const auto count = static_cast<Index>(sorted.size());

  SparsificationTrace trace;
  trace.permutation = Permutation::selectedFirst(n, sorted);
  if (is_prefix(sorted)) {
    trace.sparsified_permuted_root = drop_off_diagonal(r, count);
    trace.root = trace.sparsified_permuted_root;
    return trace;
  }
  trace.information = gram(r);
  trace.permuted_information = permute_symmetric(*trace.information, trace.permutation);
  trace.permuted_root = cholesky(*trace.permuted_information);
  trace.sparsified_permuted_root = drop_off_diagonal(*trace.permuted_root, count);
  std::vector<Index> leading(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) leading[static_cast<std::size_t>(i)] = i;
  trace.root = permute_triangular_back(trace.sparsified_permuted_root, trace.permutation.inverse(), leading);
  return trace;
}

namespace {

// Factor rows in the selected-first ordering. Positions [0, n_sel) start as
// the selected rows of R with columns renumbered on first access; positions
// [n_sel, n) start empty and are filled by absorbing the remaining rows of R.
// work() counts entries written, which tracks the cost of the rotations.
class SelectedFirstStore {
 public:
  SelectedFirstStore(const UpperTriangulard& r, const Permutation& p, Index n_sel)
      : r_(r), p_(p), n_sel_(n_sel), slot_(static_cast<std::size_t>(r.dim()), -1) {}

  bool has(Index c) const { return c < n_sel_ || slot_[static_cast<std::size_t>(c)] >= 0; }

  double diagAt(Index c) const {
    const int s = slot_[static_cast<std::size_t>(c)];
    return s >= 0 ? diag_[static_cast<std::size_t>(s)] : r_.diagonal()[p_(c)];
  }

  const SparseRowd& rowAt(Index c) {
    int& s = slot_[static_cast<std::size_t>(c)];
    if (s < 0) {
      s = static_cast<int>(rows_.size());
      diag_.push_back(r_.diagonal()[p_(c)]);
      rows_.push_back(renumbered(r_.row(p_(c))));
    }
    return rows_[static_cast<std::size_t>(s)];
  }

  void set(Index c, double d, SparseRowd& row) {
    work_ += static_cast<double>(row.size()) + 1.0;
    int& s = slot_[static_cast<std::size_t>(c)];
    if (s < 0) {
      s = static_cast<int>(rows_.size());
      diag_.push_back(d);
      rows_.emplace_back().swap(row);
    } else {
      diag_[static_cast<std::size_t>(s)] = d;
      rows_[static_cast<std::size_t>(s)].swap(row);
    }
  }

  double work() const { return work_; }

  // Selected columns keep their relative order and precede every other
  // column, so a stable partition of the renumbered entries is sorted.
  SparseRowd renumbered(const SparseRowd& row) const {
    SparseRowd out;
    out.reserve(row.size());
    for (const auto& e : row)
      if (const Index q = p_.inverseOf(e.col); q < n_sel_) out.push_back({q, e.value});
    for (const auto& e : row)
      if (const Index q = p_.inverseOf(e.col); q >= n_sel_) out.push_back({q, e.value});
    return out;
  }

 private:
  const UpperTriangulard& r_;
  const Permutation& p_;
  Index n_sel_;
  std::vector<int> slot_;
  std::vector<double> diag_;
  std::vector<SparseRowd> rows_;
  double work_ = 0.0;
};

// Re-triangularizes R P (columns in selected-first order) with Givens
// rotations: the selected rows of R are already triangular there, and each
// remaining row of R is folded in. Gives up once `budget` entries have been
// written.
std::optional<UpperTriangulard> reorder_by_rotations(const UpperTriangulard& r, std::span<const Index> sorted,
                                                     double budget) {
  const Index n = r.dim();
  const auto n_sel = static_cast<Index>(sorted.size());
  const Permutation p = Permutation::selectedFirst(n, sorted);
  SelectedFirstStore store(r, p, n_sel);
  for (Index q = n - 1; q >= n_sel; --q) {
    const Index i = p(q);
    SparseRowd w = store.renumbered(r.row(i));
    const auto at = std::find_if(w.begin(), w.end(), [&](const auto& e) { return e.col > q; });
    w.insert(at, {q, r.diagonal()[i]});
    detail::absorb_row(store, std::move(w));
    if (store.work() > budget) return std::nullopt;
  }

  // Selected rows keep only their diagonal; the rest hold columns >= n_sel.
  UpperTriangulard::Vector diag(n);
  std::vector<SparseRowd> rows(static_cast<std::size_t>(n));
  for (Index q = 0; q < n; ++q) {
    const Index orig = p(q);
    if (!store.has(q)) throw NotPositiveDefinite("factor lost rank while reordering");
    diag[orig] = store.diagAt(q);
    if (q < n_sel) continue;
    auto& out = rows[static_cast<std::size_t>(orig)];
    for (const auto& e : store.rowAt(q)) out.push_back({p(e.col), e.value});
  }
  return UpperTriangulard(unchecked, std::move(diag), std::move(rows));
}

// Rough cost of gram + refactorization, assuming each unselected variable
// fills every later selected row.
double refactorization_cost(const UpperTriangulard& r, std::span<const Index> sorted) {
  std::vector<char> selected(static_cast<std::size_t>(r.dim()), 0);
  for (Index i : sorted) selected[static_cast<std::size_t>(i)] = 1;
  double cost = 0.0;
  double others = 0.0;
  for (Index k = 0; k < r.dim(); ++k) {
    const double len = static_cast<double>(r.row(k).size()) + 1.0;
    cost += len * len;
    if (selected[static_cast<std::size_t>(k)])
      cost += (len + others) * (len + others);
    else
      others += 1.0;
  }
  return cost + others * others * others / 3.0;
}

// Entries written by the rotations cost about this many times more than one
// unit of refactorization_cost (measured on generated pose graphs).
constexpr double kRotationCostRatio = 20.0;

}  // namespace

UpperTriangulard sparsify_root(const UpperTriangulard& r, std::span<const Index> s, ReorderMethod method) {
  const Index n = r.dim();
  std::vector<Index> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (Index i : sorted)
    if (i < 0 || i >= n) throw InvalidSpec("sparsified index out of range");

  // A selected prefix [0, k0) is left alone by the refactorization: the
  // leading block of a Cholesky factor factors the leading block, and the
  // trailing block of R squares to the marginal information of the rest.
  Index k0 = 0;
  while (k0 < static_cast<Index>(sorted.size()) && sorted[static_cast<std::size_t>(k0)] == k0) ++k0;
  if (k0 == n) return UpperTriangulard::diagonalMatrix(r.diagonal());

  const Index nt = n - k0;
  std::vector<Index> tail_sel;
  for (auto it = sorted.begin() + k0; it != sorted.end(); ++it) tail_sel.push_back(*it - k0);
  std::vector<SparseRowd> tail_rows(static_cast<std::size_t>(nt));
  for (Index k = k0; k < n; ++k) {
    auto& out = tail_rows[static_cast<std::size_t>(k - k0)];
    out.reserve(r.row(k).size());
    for (const auto& e : r.row(k)) out.push_back({e.col - k0, e.value});
  }
  UpperTriangulard tail(unchecked, r.diagonal().tail(nt), std::move(tail_rows));

  if (!tail_sel.empty()) {
    std::optional<UpperTriangulard> reordered;
    if (method != ReorderMethod::Refactorization) {
      const double budget = method == ReorderMethod::Rotations
                                ? std::numeric_limits<double>::infinity()
                                : refactorization_cost(tail, tail_sel) / kRotationCostRatio;
      reordered = reorder_by_rotations(tail, tail_sel, budget);
    }
    tail = reordered ? std::move(*reordered) : sparsify_root_traced(tail, tail_sel).root;
  }

  UpperTriangulard::Vector diag = r.diagonal();
  std::vector<SparseRowd> rows(static_cast<std::size_t>(n));
  for (Index k = k0; k < n; ++k) {
    diag[k] = tail.diagonal()[k - k0];
    auto& out = rows[static_cast<std::size_t>(k)];
    out.reserve(tail.row(k - k0).size());
    for (const auto& e : tail.row(k - k0)) out.push_back({e.col + k0, e.value});
  }
  return UpperTriangulard(unchecked, std::move(diag), std::move(rows));
}

GaussianBelief sparsify_belief(const GaussianBelief& b, const SparsificationSpec& spec, const InvolvementMask* mask) {
  if (spec.mode == SparsificationMode::None) return b;
  if (spec.mode == SparsificationMode::Full) return fast_full_sparsify(b);
  const auto blocks = resolve_blocks(b.layout(), spec, mask);
  if (blocks.empty()) return b;
  const auto scalars = b.layout().scalarIndices(blocks);
  return GaussianBelief(b.mean(), sparsify_root(b.root(), scalars), b.layout());
}

GaussianBelief fast_full_sparsify(const GaussianBelief& b) {
  return GaussianBelief(b.mean(), UpperTriangulard::diagonalMatrix(b.root().diagonal()), b.layout());
}

}  // namespace bsp
