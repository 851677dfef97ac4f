#pragma once

// Sparse storage types for symmetric information matrices, their
// upper-triangular square-root factors, variable permutations and stacked
// constraint rows. Everything is templated on the scalar type; the rest of
// the library instantiates it with double.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsp/errors.hpp"

namespace bsp {

using Index = Eigen::Index;

template <typename Scalar>
struct Triplet {
  Index row;
  Index col;
  Scalar value;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

template <typename Scalar>
struct SparseEntry {
  Index col;
  Scalar value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

template <typename Scalar>
using SparseRow = std::vector<SparseEntry<Scalar>>;

struct Unchecked {};
inline constexpr Unchecked unchecked{};

/// Symmetric matrix stored as its upper triangle in coordinate form, sorted by
/// (row, col) with no duplicates.
template <typename Scalar>
class SparseSymmetric {
 public:
  using TripletType = Triplet<Scalar>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SparseSymmetric(Index dim, std::vector<TripletType> entries) : dim_(dim), entries_(std::move(entries)) {
    if (dim_ <= 0) throw InvalidMatrix("dimension must be positive");
    for (const auto& t : entries_) {
      if (t.row < 0 || t.row > t.col || t.col >= dim_)
        throw InvalidMatrix("entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") outside the upper triangle of a " + std::to_string(dim_) + "-dim matrix");
      if (!std::isfinite(t.value)) throw InvalidMatrix("non-finite entry");
    }
    sortEntries();
    for (std::size_t k = 1; k < entries_.size(); ++k) {
      if (entries_[k].row == entries_[k - 1].row && entries_[k].col == entries_[k - 1].col)
        throw InvalidMatrix("duplicate coordinate (" + std::to_string(entries_[k].row) + "," +
                            std::to_string(entries_[k].col) + ")");
    }
  }

  // Trusted construction: entries already sorted, unique and in the upper triangle.
  SparseSymmetric(Unchecked, Index dim, std::vector<TripletType> entries)
      : dim_(dim), entries_(std::move(entries)) {}

  static SparseSymmetric identity(Index n) {
    std::vector<TripletType> e;
    e.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) e.push_back({i, i, Scalar(1)});
    return SparseSymmetric(unchecked, n, std::move(e));
  }

  /// Structural nonzeros of the upper triangle of `m` (exact zeros dropped).
  template <typename Derived>
  static SparseSymmetric fromDense(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("matrix is not square");
    std::vector<TripletType> e;
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = i; j < m.cols(); ++j)
        if (m(i, j) != Scalar(0)) e.push_back({i, j, m(i, j)});
    return SparseSymmetric(m.rows(), std::move(e));
  }

  Index dim() const { return dim_; }
  Index nnz() const { return static_cast<Index>(entries_.size()); }
  const std::vector<TripletType>& entries() const { return entries_; }

  Scalar coeff(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{i, j},
                               [](const TripletType& t, const std::pair<Index, Index>& key) {
                                 return t.row < key.first || (t.row == key.first && t.col < key.second);
                               });
    if (it != entries_.end() && it->row == i && it->col == j) return it->value;
    return Scalar(0);
  }

  DenseMatrix toDense() const {
    DenseMatrix m = DenseMatrix::Zero(dim_, dim_);
    for (const auto& t : entries_) {
      m(t.row, t.col) = t.value;
      m(t.col, t.row) = t.value;
    }
    return m;
  }

  friend bool operator==(const SparseSymmetric&, const SparseSymmetric&) = default;

 private:
  void sortEntries() {
    std::sort(entries_.begin(), entries_.end(), [](const TripletType& a, const TripletType& b) {
      return a.row < b.row || (a.row == b.row && a.col < b.col);
    });
  }

  Index dim_;
  std::vector<TripletType> entries_;
};

/// Upper-triangular factor R. The diagonal is kept dense; each row stores its
/// strictly-upper entries sorted by column.
template <typename Scalar>
class UpperTriangular {
 public:
  using Entry = SparseEntry<Scalar>;
  using Row = SparseRow<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  UpperTriangular(Vector diagonal, std::vector<Row> rows)
      : diagonal_(std::move(diagonal)), rows_(std::move(rows)) {
    const Index n = diagonal_.size();
    if (n <= 0) throw InvalidMatrix("dimension must be positive");
    if (static_cast<Index>(rows_.size()) != n) throw DimensionMismatch("row count differs from diagonal length");
    for (Index i = 0; i < n; ++i) {
      if (!(diagonal_[i] > Scalar(0)) || !std::isfinite(diagonal_[i]))
        throw InvalidMatrix("diagonal entry " + std::to_string(i) + " is not strictly positive");
      Index prev = i;
      for (const auto& e : rows_[static_cast<std::size_t>(i)]) {
        if (e.col <= prev || e.col >= n)
          throw ShapeViolation("row " + std::to_string(i) + " has an entry at column " + std::to_string(e.col) +
                               " (columns must be strictly increasing and above the diagonal)");
        if (!std::isfinite(e.value)) throw InvalidMatrix("non-finite entry");
        prev = e.col;
      }
    }
  }

  UpperTriangular(Unchecked, Vector diagonal, std::vector<Row> rows)
      : diagonal_(std::move(diagonal)), rows_(std::move(rows)) {}

  static UpperTriangular identity(Index n) { return diagonalMatrix(Vector::Ones(n)); }

  static UpperTriangular diagonalMatrix(Vector d) {
    const auto n = static_cast<std::size_t>(d.size());
    return UpperTriangular(std::move(d), std::vector<Row>(n));
  }

  /// Structural nonzeros of the upper triangle of `m`; entries below the
  /// diagonal must be zero.
  template <typename Derived>
  static UpperTriangular fromDense(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("matrix is not square");
    const Index n = m.rows();
    Vector d(n);
    std::vector<Row> rows(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < i; ++j)
        if (m(i, j) != Scalar(0)) throw ShapeViolation("nonzero below the diagonal");
      d[i] = m(i, i);
      for (Index j = i + 1; j < n; ++j)
        if (m(i, j) != Scalar(0)) rows[static_cast<std::size_t>(i)].push_back({j, m(i, j)});
    }
    return UpperTriangular(std::move(d), std::move(rows));
  }

  Index dim() const { return diagonal_.size(); }
  const Vector& diagonal() const { return diagonal_; }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }

  Index offDiagonalNnz() const {
    Index k = 0;
    for (const auto& r : rows_) k += static_cast<Index>(r.size());
    return k;
  }
  Index nnz() const { return dim() + offDiagonalNnz(); }
  bool isDiagonal() const { return offDiagonalNnz() == 0; }

  DenseMatrix toDense() const {
    const Index n = dim();
    DenseMatrix m = DenseMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      m(i, i) = diagonal_[i];
      for (const auto& e : row(i)) m(i, e.col) = e.value;
    }
    return m;
  }

  friend bool operator==(const UpperTriangular& a, const UpperTriangular& b) {
    return a.diagonal_.size() == b.diagonal_.size() && a.diagonal_ == b.diagonal_ && a.rows_ == b.rows_;
  }

 private:
  Vector diagonal_;
  std::vector<Row> rows_;
};

/// Variable reordering. forward()[i] is the original index placed at new
/// position i; inverse() maps an original index to its new position.
class Permutation {
 public:
  explicit Permutation(std::vector<Index> forward) : forward_(std::move(forward)), inverse_(forward_.size(), -1) {
    const auto n = static_cast<Index>(forward_.size());
    for (Index i = 0; i < n; ++i) {
      const Index f = forward_[static_cast<std::size_t>(i)];
      if (f < 0 || f >= n || inverse_[static_cast<std::size_t>(f)] != -1)
        throw InvalidMatrix("permutation indices must be distinct and within [0, dim)");
      inverse_[static_cast<std::size_t>(f)] = i;
    }
  }

  static Permutation identity(Index n) {
    std::vector<Index> f(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = i;
    return Permutation(std::move(f));
  }

  /// Stable "selected first" ordering: indices in `selected` keep their
  /// relative order, followed by the remaining indices in their relative order.
  static Permutation selectedFirst(Index n, std::span<const Index> selected) {
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    for (Index s : selected) {
      if (s < 0 || s >= n) throw InvalidMatrix("selected index out of range");
      chosen[static_cast<std::size_t>(s)] = 1;
    }
    std::vector<Index> f;
    f.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      if (chosen[static_cast<std::size_t>(i)]) f.push_back(i);
    for (Index i = 0; i < n; ++i)
      if (!chosen[static_cast<std::size_t>(i)]) f.push_back(i);
    return Permutation(std::move(f));
  }

  Index dim() const { return static_cast<Index>(forward_.size()); }
  Index operator()(Index i) const { return forward_[static_cast<std::size_t>(i)]; }
  Index inverseOf(Index original) const { return inverse_[static_cast<std::size_t>(original)]; }
  const std::vector<Index>& forward() const { return forward_; }
  Permutation inverse() const { return Permutation(inverse_); }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.forward_ == b.forward_; }

 private:
  std::vector<Index> forward_;
  std::vector<Index> inverse_;
};

/// Stacked constraint rows (e.g. a whitened collective Jacobian). Rows are
/// sparse with sorted, unique columns; empty rows are allowed.
template <typename Scalar>
class SparseRowBlock {
 public:
  using Entry = SparseEntry<Scalar>;
  using Row = SparseRow<Scalar>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit SparseRowBlock(Index n_cols, std::vector<Row> rows = {}) : n_cols_(n_cols), rows_(std::move(rows)) {
    if (n_cols_ <= 0) throw InvalidMatrix("column count must be positive");
    for (auto& r : rows_) {
      std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (r[k].col < 0 || r[k].col >= n_cols_) throw InvalidMatrix("row entry column out of range");
        if (!std::isfinite(r[k].value)) throw InvalidMatrix("non-finite entry");
        if (k > 0 && r[k].col == r[k - 1].col) throw InvalidMatrix("duplicate column in row");
      }
    }
  }

  template <typename Derived>
  static SparseRowBlock fromDense(const Eigen::MatrixBase<Derived>& m) {
    std::vector<Row> rows(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        if (m(i, j) != Scalar(0)) rows[static_cast<std::size_t>(i)].push_back({j, m(i, j)});
    return SparseRowBlock(m.cols(), std::move(rows));
  }

  Index nRows() const { return static_cast<Index>(rows_.size()); }
  Index nCols() const { return n_cols_; }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }

  Index nnz() const {
    Index k = 0;
    for (const auto& r : rows_) k += static_cast<Index>(r.size());
    return k;
  }

  DenseMatrix toDense() const {
    DenseMatrix m = DenseMatrix::Zero(nRows(), n_cols_);
    for (Index i = 0; i < nRows(); ++i)
      for (const auto& e : row(i)) m(i, e.col) = e.value;
    return m;
  }

  /// Vertical concatenation; both blocks must have the same column count.
  friend SparseRowBlock stack(const SparseRowBlock& top, const SparseRowBlock& bottom) {
    if (top.n_cols_ != bottom.n_cols_) throw DimensionMismatch("stacked blocks differ in column count");
    std::vector<Row> rows = top.rows_;
    rows.insert(rows.end(), bottom.rows_.begin(), bottom.rows_.end());
    return SparseRowBlock(top.n_cols_, std::move(rows));
  }

  friend bool operator==(const SparseRowBlock&, const SparseRowBlock&) = default;

 private:
  Index n_cols_;
  std::vector<Row> rows_;
};

using SparseSymmetricd = SparseSymmetric<double>;
using UpperTriangulard = UpperTriangular<double>;
using SparseRowBlockd = SparseRowBlock<double>;
using SparseRowd = SparseRow<double>;

}  // namespace bsp
