#pragma once

// Kernels over the sparse types: permutation, R^T R formation, up-looking
// sparse Cholesky, Givens re-triangularization for stacked low-rank updates,
// log-determinants and triangular solves. Dense Eigen routines appear only in
// dense_logdet_oracle(), which exists for cross-checking.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bsp/errors.hpp"
#include "bsp/sparse.hpp"

namespace bsp {

inline constexpr double kDefaultPivotFloor = 1e-12;

/// output(i, j) = m(p(i), p(j)).
template <typename Scalar>
SparseSymmetric<Scalar> permute_symmetric(const SparseSymmetric<Scalar>& m, const Permutation& p) {
  if (p.dim() != m.dim()) throw DimensionMismatch("permutation dimension differs from matrix dimension");
  std::vector<Triplet<Scalar>> out;
  out.reserve(m.entries().size());
  for (const auto& t : m.entries()) {
    Index i = p.inverseOf(t.row);
    Index j = p.inverseOf(t.col);
    if (i > j) std::swap(i, j);
    out.push_back({i, j, t.value});
  }
  std::sort(out.begin(), out.end(), [](const Triplet<Scalar>& a, const Triplet<Scalar>& b) {
    return a.row < b.row || (a.row == b.row && a.col < b.col);
  });
  return SparseSymmetric<Scalar>(unchecked, m.dim(), std::move(out));
}

/// Reorders a square-root factor directly, result(i, j) = r(p(i), p(j)).
/// Valid only when every off-diagonal entry keeps its row above its column,
/// which holds after the rows in `sparsified` were reduced to their diagonal
/// and the remaining variables keep their relative order.
template <typename Scalar>
UpperTriangular<Scalar> permute_triangular_back(const UpperTriangular<Scalar>& r, const Permutation& p,
                                                std::span<const Index> sparsified) {
  const Index n = r.dim();
  if (p.dim() != n) throw DimensionMismatch("permutation dimension differs from factor dimension");
  for (Index s : sparsified) {
    if (s < 0 || s >= n) throw DimensionMismatch("sparsified index out of range");
    if (!r.row(s).empty())
      throw ShapeViolation("row " + std::to_string(s) + " is marked sparsified but has off-diagonal entries");
  }
  typename UpperTriangular<Scalar>::Vector diag(n);
  std::vector<SparseRow<Scalar>> rows(static_cast<std::size_t>(n));
  for (Index src = 0; src < n; ++src) {
    const Index dst = p.inverseOf(src);
    diag[dst] = r.diagonal()[src];
    auto& out = rows[static_cast<std::size_t>(dst)];
    out.reserve(r.row(src).size());
    for (const auto& e : r.row(src)) {
      const Index col = p.inverseOf(e.col);
      if (col <= dst)
        throw ShapeViolation("entry (" + std::to_string(src) + "," + std::to_string(e.col) +
                             ") would land on or below the diagonal");
      out.push_back({col, e.value});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
  }
  return UpperTriangular<Scalar>(unchecked, std::move(diag), std::move(rows));
}

/// Information matrix R^T R, structural pattern of the product.
template <typename Scalar>
SparseSymmetric<Scalar> gram(const UpperTriangular<Scalar>& r) {
  const Index n = r.dim();
  // Column view of R: col_entries[a] lists (k, R(k, a)) for k < a.
  std::vector<std::vector<SparseEntry<Scalar>>> col_entries(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k)
    for (const auto& e : r.row(k)) col_entries[static_cast<std::size_t>(e.col)].push_back({k, e.value});

  std::vector<Scalar> x(static_cast<std::size_t>(n), Scalar(0));
  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<Index> pattern;
  std::vector<Triplet<Scalar>> out;

  auto accumulate = [&](Index col, Scalar v, Index a) {
    if (mark[static_cast<std::size_t>(col)] != a) {
      mark[static_cast<std::size_t>(col)] = a;
      pattern.push_back(col);
      x[static_cast<std::size_t>(col)] = Scalar(0);
    }
    x[static_cast<std::size_t>(col)] += v;
  };

  for (Index a = 0; a < n; ++a) {
    pattern.clear();
    const Scalar daa = r.diagonal()[a];
    accumulate(a, daa * daa, a);
    for (const auto& e : r.row(a)) accumulate(e.col, daa * e.value, a);
    for (const auto& ce : col_entries[static_cast<std::size_t>(a)]) {
      const Index k = ce.col;
      const auto& rk = r.row(k);
      auto it = std::lower_bound(rk.begin(), rk.end(), a, [](const auto& e, Index c) { return e.col < c; });
      for (; it != rk.end(); ++it) accumulate(it->col, ce.value * it->value, a);
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index col : pattern) out.push_back({a, col, x[static_cast<std::size_t>(col)]});
  }
  return SparseSymmetric<Scalar>(unchecked, n, std::move(out));
}

/// Diagonal of R^T R (squared column norms of R).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gram_diagonal(const UpperTriangular<Scalar>& r) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = r.diagonal().array().square();
  for (Index k = 0; k < r.dim(); ++k)
    for (const auto& e : r.row(k)) d[e.col] += e.value * e.value;
  return d;
}

/// ln|R^T R| = 2 * sum ln R_ii.
template <typename Scalar>
Scalar logdet_triangular(const UpperTriangular<Scalar>& r) {
  Scalar s(0);
  for (Index i = 0; i < r.dim(); ++i) s += std::log(r.diagonal()[i]);
  return Scalar(2) * s;
}

/// Dense log-determinant through Eigen's LLT. Test oracle only.
template <typename Scalar>
Scalar dense_logdet_oracle(const SparseSymmetric<Scalar>& m) {
  const auto dense = m.toDense();
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(dense);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("dense factorization failed");
  const auto l = llt.matrixLLT().diagonal();
  Scalar s(0);
  for (Index i = 0; i < l.size(); ++i) {
    if (!(l[i] > Scalar(0))) throw NotPositiveDefinite("non-positive pivot in dense factorization");
    s += std::log(l[i]);
  }
  return Scalar(2) * s;
}

/// Up-looking sparse Cholesky, m = R^T R. Row k of R is produced as column k
/// of L = R^T, guided by the elimination tree of m.
template <typename Scalar>
UpperTriangular<Scalar> cholesky(const SparseSymmetric<Scalar>& m, Scalar pivot_floor = Scalar(kDefaultPivotFloor)) {
  const Index n = m.dim();
  const auto un = static_cast<std::size_t>(n);

  // Compressed columns of the upper triangle: column k holds rows i <= k.
  std::vector<Index> colptr(un + 1, 0);
  for (const auto& t : m.entries()) ++colptr[static_cast<std::size_t>(t.col) + 1];
  for (std::size_t k = 0; k < un; ++k) colptr[k + 1] += colptr[k];
  std::vector<Index> rowind(m.entries().size());
  std::vector<Scalar> vals(m.entries().size());
  {
    std::vector<Index> next(colptr.begin(), colptr.end() - 1);
    for (const auto& t : m.entries()) {
      const auto p = static_cast<std::size_t>(next[static_cast<std::size_t>(t.col)]++);
      rowind[p] = t.row;
      vals[p] = t.value;
    }
  }

  // Elimination tree with path compression.
  std::vector<Index> parent(un, -1), ancestor(un, -1);
  for (Index k = 0; k < n; ++k) {
    for (Index p = colptr[static_cast<std::size_t>(k)]; p < colptr[static_cast<std::size_t>(k) + 1]; ++p) {
      Index i = rowind[static_cast<std::size_t>(p)];
      while (i != -1 && i < k) {
        const Index inext = ancestor[static_cast<std::size_t>(i)];
        ancestor[static_cast<std::size_t>(i)] = k;
        if (inext == -1) parent[static_cast<std::size_t>(i)] = k;
        i = inext;
      }
    }
  }

  typename UpperTriangular<Scalar>::Vector diag(n);
  std::vector<SparseRow<Scalar>> rows(un);
  std::vector<Scalar> x(un, Scalar(0));
  std::vector<Index> mark(un, -1), reach(un), path(un);

  for (Index k = 0; k < n; ++k) {
    // Nonzero pattern of row k of L, in topological order, in reach[top, n).
    Index top = n;
    mark[static_cast<std::size_t>(k)] = k;
    for (Index p = colptr[static_cast<std::size_t>(k)]; p < colptr[static_cast<std::size_t>(k) + 1]; ++p) {
      Index i = rowind[static_cast<std::size_t>(p)];
      x[static_cast<std::size_t>(i)] = vals[static_cast<std::size_t>(p)];
      Index len = 0;
      for (; mark[static_cast<std::size_t>(i)] != k; i = parent[static_cast<std::size_t>(i)]) {
        path[static_cast<std::size_t>(len++)] = i;
        mark[static_cast<std::size_t>(i)] = k;
      }
      while (len > 0) reach[static_cast<std::size_t>(--top)] = path[static_cast<std::size_t>(--len)];
    }

    Scalar d = x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(k)] = Scalar(0);
    for (Index q = top; q < n; ++q) {
      const Index i = reach[static_cast<std::size_t>(q)];
      const Scalar lki = x[static_cast<std::size_t>(i)] / diag[i];
      x[static_cast<std::size_t>(i)] = Scalar(0);
      auto& ri = rows[static_cast<std::size_t>(i)];
      for (const auto& e : ri) x[static_cast<std::size_t>(e.col)] -= e.value * lki;
      d -= lki * lki;
      ri.push_back({k, lki});
    }
    if (!(d > pivot_floor))
      throw NotPositiveDefinite("pivot " + std::to_string(k) + " is " + std::to_string(d) +
                                " (floor " + std::to_string(pivot_floor) + ")");
    diag[k] = std::sqrt(d);
  }
  return UpperTriangular<Scalar>(unchecked, std::move(diag), std::move(rows));
}

namespace detail {

// Row store that owns a full copy of the factor (used to materialize R+).
template <typename Scalar>
class OwningRowStore {
 public:
  using Row = SparseRow<Scalar>;

  OwningRowStore(const UpperTriangular<Scalar>& base, Index n_new)
      : diag_(base.dim() + n_new), rows_(base.rows()), present_(static_cast<std::size_t>(base.dim() + n_new), 1) {
    diag_.head(base.dim()) = base.diagonal();
    diag_.tail(n_new).setZero();
    rows_.resize(static_cast<std::size_t>(base.dim() + n_new));
    std::fill(present_.begin() + base.dim(), present_.end(), 0);
  }

  bool has(Index c) const { return present_[static_cast<std::size_t>(c)] != 0; }
  Scalar diagAt(Index c) const { return diag_[c]; }
  const Row& rowAt(Index c) const { return rows_[static_cast<std::size_t>(c)]; }
  void set(Index c, Scalar d, Row& row) {
    diag_[c] = d;
    rows_[static_cast<std::size_t>(c)].swap(row);
    present_[static_cast<std::size_t>(c)] = 1;
  }

  Index firstMissing() const {
    for (std::size_t c = 0; c < present_.size(); ++c)
      if (!present_[c]) return static_cast<Index>(c);
    return -1;
  }

  UpperTriangular<Scalar> release() && {
    return UpperTriangular<Scalar>(unchecked, std::move(diag_), std::move(rows_));
  }

 private:
  typename UpperTriangular<Scalar>::Vector diag_;
  std::vector<Row> rows_;
  std::vector<char> present_;
};

// Copy-on-write view over a shared prior factor; only rows reached by the
// update are copied.
template <typename Scalar>
class OverlayRowStore {
 public:
  using Row = SparseRow<Scalar>;

  OverlayRowStore(const UpperTriangular<Scalar>& base, Index n_new)
      : base_(base), slot_(static_cast<std::size_t>(base.dim() + n_new), -1) {}

  bool has(Index c) const { return c < base_.dim() || slot_[static_cast<std::size_t>(c)] >= 0; }
  Scalar diagAt(Index c) const {
    const int s = slot_[static_cast<std::size_t>(c)];
    return s >= 0 ? diag_[static_cast<std::size_t>(s)] : base_.diagonal()[c];
  }
  const Row& rowAt(Index c) const {
    const int s = slot_[static_cast<std::size_t>(c)];
    return s >= 0 ? rows_[static_cast<std::size_t>(s)] : base_.row(c);
  }
  void set(Index c, Scalar d, Row& row) {
    int& s = slot_[static_cast<std::size_t>(c)];
    if (s < 0) {
      s = static_cast<int>(touched_.size());
      touched_.push_back(c);
      diag_.push_back(d);
      rows_.emplace_back().swap(row);
    } else {
      diag_[static_cast<std::size_t>(s)] = d;
      rows_[static_cast<std::size_t>(s)].swap(row);
    }
  }

  Index firstMissing() const {
    for (std::size_t c = static_cast<std::size_t>(base_.dim()); c < slot_.size(); ++c)
      if (slot_[c] < 0) return static_cast<Index>(c);
    return -1;
  }

  // ln|R+^T R+| given ln|R^T R| of the base factor.
  Scalar logdet(Scalar base_logdet) const {
    Scalar s = base_logdet;
    for (std::size_t k = 0; k < touched_.size(); ++k) {
      const Index c = touched_[k];
      if (c < base_.dim())
        s += Scalar(2) * std::log(diag_[k] / base_.diagonal()[c]);
      else
        s += Scalar(2) * std::log(diag_[k]);
    }
    return s;
  }

  std::size_t touchedRows() const { return touched_.size(); }

 private:
  const UpperTriangular<Scalar>& base_;
  std::vector<int> slot_;
  std::vector<Index> touched_;
  std::vector<Scalar> diag_;
  std::vector<Row> rows_;
};

// Folds one constraint row into the factor by a sweep of Givens rotations.
// Rows of the factor are visited in increasing column order of the row's
// (growing) pattern; a row not yet present (new variable) absorbs the remainder.
// Store::set swaps the new row in, handing back the old buffer for reuse.
template <typename Scalar, typename Store>
void absorb_row(Store& store, SparseRow<Scalar> w) {
  using Row = SparseRow<Scalar>;
  std::size_t head = 0;
  Row next_w, new_row;
  while (head < w.size()) {
    const Index c = w[head].col;
    const Scalar a = w[head].value;
    if (a == Scalar(0)) {
      ++head;
      continue;
    }
    if (!store.has(c)) {
      Scalar d = a;
      Row rest(w.begin() + static_cast<std::ptrdiff_t>(head) + 1, w.end());
      if (d < Scalar(0)) {
        d = -d;
        for (auto& e : rest) e.value = -e.value;
      }
      store.set(c, d, rest);
      return;
    }
    const Scalar d = store.diagAt(c);
    const Row& rc = store.rowAt(c);
    const Scalar rad = std::hypot(d, a);
    const Scalar cs = d / rad;
    const Scalar sn = a / rad;

    new_row.clear();
    new_row.reserve(rc.size() + (w.size() - head - 1));
    next_w.clear();
    auto ir = rc.begin();
    auto iw = w.begin() + static_cast<std::ptrdiff_t>(head) + 1;
    auto push_w = [&](Index col, Scalar v) {
      if (v != Scalar(0)) next_w.push_back({col, v});
    };
    while (ir != rc.end() || iw != w.end()) {
      if (iw == w.end() || (ir != rc.end() && ir->col < iw->col)) {
        new_row.push_back({ir->col, cs * ir->value});
        push_w(ir->col, -sn * ir->value);
        ++ir;
      } else if (ir == rc.end() || iw->col < ir->col) {
        new_row.push_back({iw->col, sn * iw->value});
        push_w(iw->col, cs * iw->value);
        ++iw;
      } else {
        new_row.push_back({ir->col, cs * ir->value + sn * iw->value});
        push_w(ir->col, -sn * ir->value + cs * iw->value);
        ++ir;
        ++iw;
      }
    }
    store.set(c, rad, new_row);
    w.swap(next_w);
    head = 0;
  }
}

template <typename Scalar>
void check_update_dims(const UpperTriangular<Scalar>& r, const SparseRowBlock<Scalar>& u, Index n_new) {
  if (n_new < 0) throw DimensionMismatch("negative count of new variables");
  if (u.nCols() != r.dim() + n_new)
    throw DimensionMismatch("update has " + std::to_string(u.nCols()) + " columns, expected " +
                            std::to_string(r.dim() + n_new));
}

}  // namespace detail

/// R+ with R+^T R+ = [R 0]^T [R 0] + u^T u. The trailing n_new variables must be
/// supported by u alone.
template <typename Scalar>
UpperTriangular<Scalar> lowrank_update(const UpperTriangular<Scalar>& r, const SparseRowBlock<Scalar>& u,
                                       Index n_new) {
  detail::check_update_dims(r, u, n_new);
  detail::OwningRowStore<Scalar> store(r, n_new);
  for (const auto& row : u.rows()) detail::absorb_row(store, row);
  if (const Index missing = store.firstMissing(); missing >= 0)
    throw RankDeficientAugmentation("new variable " + std::to_string(missing) + " has no supporting row");
  return std::move(store).release();
}

/// ln|[R 0]^T [R 0] + u^T u| without materializing R+; only the rows reached
/// by u are copied. `base_logdet` must equal logdet_triangular(r).
template <typename Scalar>
Scalar updated_logdet(const UpperTriangular<Scalar>& r, Scalar base_logdet, const SparseRowBlock<Scalar>& u,
                      Index n_new) {
  detail::check_update_dims(r, u, n_new);
  detail::OverlayRowStore<Scalar> store(r, n_new);
  for (const auto& row : u.rows()) detail::absorb_row(store, row);
  if (const Index missing = store.firstMissing(); missing >= 0)
    throw RankDeficientAugmentation("new variable " + std::to_string(missing) + " has no supporting row");
  return store.logdet(base_logdet);
}

template <typename Scalar>
Scalar updated_logdet(const UpperTriangular<Scalar>& r, const SparseRowBlock<Scalar>& u, Index n_new) {
  return updated_logdet(r, logdet_triangular(r), u, n_new);
}

/// Solves R x = b.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_upper(const UpperTriangular<Scalar>& r,
                                                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b) {
  if (b.size() != r.dim()) throw DimensionMismatch("right-hand side length");
  for (Index i = r.dim() - 1; i >= 0; --i) {
    Scalar s = b[i];
    for (const auto& e : r.row(i)) s -= e.value * b[e.col];
    b[i] = s / r.diagonal()[i];
  }
  return b;
}

/// Solves R^T y = b.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_upper_transpose(const UpperTriangular<Scalar>& r,
                                                               Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b) {
  if (b.size() != r.dim()) throw DimensionMismatch("right-hand side length");
  for (Index i = 0; i < r.dim(); ++i) {
    b[i] /= r.diagonal()[i];
    const Scalar yi = b[i];
    for (const auto& e : r.row(i)) b[e.col] -= e.value * yi;
  }
  return b;
}

}  // namespace bsp
