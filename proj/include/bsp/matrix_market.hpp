#pragma once

// Matrix Market coordinate I/O (real, symmetric or general), 1-based indices,
// 17 significant digits so that doubles round-trip exactly.

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bsp/errors.hpp"
#include "bsp/sparse.hpp"

namespace bsp {

struct MatrixMarketData {
  Index rows = 0;
  Index cols = 0;
  bool symmetric = false;
  std::vector<Triplet<double>> entries;  // 0-based, as stored in the file
};

namespace detail {

inline void write_mm_header(std::ostream& os, const char* symmetry, Index rows, Index cols, Index nnz) {
  os << "%%MatrixMarket matrix coordinate real " << symmetry << "\n" << rows << " " << cols << " " << nnz << "\n";
  os << std::setprecision(17);
}

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace detail

/// Symmetric variant; the lower triangle is written as the format requires.
inline void write_matrix_market(std::ostream& os, const SparseSymmetric<double>& m) {
  detail::write_mm_header(os, "symmetric", m.dim(), m.dim(), m.nnz());
  for (const auto& t : m.entries()) os << t.col + 1 << " " << t.row + 1 << " " << t.value << "\n";
}

/// General variant for a triangular factor (diagonal included).
inline void write_matrix_market(std::ostream& os, const UpperTriangular<double>& r) {
  detail::write_mm_header(os, "general", r.dim(), r.dim(), r.nnz());
  for (Index i = 0; i < r.dim(); ++i) {
    os << i + 1 << " " << i + 1 << " " << r.diagonal()[i] << "\n";
    for (const auto& e : r.row(i)) os << i + 1 << " " << e.col + 1 << " " << e.value << "\n";
  }
}

inline void write_matrix_market(std::ostream& os, const SparseRowBlock<double>& u) {
  detail::write_mm_header(os, "general", u.nRows(), u.nCols(), u.nnz());
  for (Index i = 0; i < u.nRows(); ++i)
    for (const auto& e : u.row(i)) os << i + 1 << " " << e.col + 1 << " " << e.value << "\n";
}

inline MatrixMarketData read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty Matrix Market stream");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix" || detail::lower(format) != "coordinate")
    throw IoError("unsupported Matrix Market header: " + line);
  if (detail::lower(field) != "real" && detail::lower(field) != "integer")
    throw IoError("unsupported Matrix Market field: " + field);
  MatrixMarketData out;
  symmetry = detail::lower(symmetry);
  if (symmetry == "symmetric")
    out.symmetric = true;
  else if (symmetry != "general")
    throw IoError("unsupported Matrix Market symmetry: " + symmetry);

  do {
    if (!std::getline(is, line)) throw IoError("missing Matrix Market size line");
  } while (line.empty() || line[0] == '%');
  Index nnz = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> out.rows >> out.cols >> nnz)) throw IoError("malformed Matrix Market size line");
  }
  out.entries.reserve(static_cast<std::size_t>(nnz));
  for (Index k = 0; k < nnz; ++k) {
    Index i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw IoError("truncated Matrix Market entries");
    if (i < 1 || j < 1 || i > out.rows || j > out.cols) throw IoError("Matrix Market index out of range");
    out.entries.push_back({i - 1, j - 1, v});
  }
  return out;
}

/// Builds the upper-triangle representation from either variant. A general
/// file must then contain both triangles consistently.
inline SparseSymmetric<double> to_symmetric(const MatrixMarketData& d) {
  if (d.rows != d.cols) throw DimensionMismatch("symmetric matrix must be square");
  std::vector<Triplet<double>> upper;
  if (d.symmetric) {
    for (const auto& t : d.entries) upper.push_back({std::min(t.row, t.col), std::max(t.row, t.col), t.value});
    return SparseSymmetric<double>(d.rows, std::move(upper));
  }
  std::vector<Triplet<double>> lower;
  for (const auto& t : d.entries) (t.row <= t.col ? upper : lower).push_back(t);
  SparseSymmetric<double> m(d.rows, std::move(upper));
  for (const auto& t : lower)
    if (m.coeff(t.col, t.row) != t.value) throw InvalidMatrix("general matrix is not symmetric");
  return m;
}

inline UpperTriangular<double> to_triangular(const MatrixMarketData& d) {
  if (d.rows != d.cols) throw DimensionMismatch("triangular factor must be square");
  if (d.symmetric) throw InvalidMatrix("triangular factor stored as symmetric");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(d.rows);
  std::vector<SparseRow<double>> rows(static_cast<std::size_t>(d.rows));
  for (const auto& t : d.entries) {
    if (t.row > t.col) throw ShapeViolation("entry below the diagonal");
    if (t.row == t.col)
      diag[t.row] = t.value;
    else
      rows[static_cast<std::size_t>(t.row)].push_back({t.col, t.value});
  }
  for (auto& r : rows) std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
  return UpperTriangular<double>(std::move(diag), std::move(rows));
}

inline SparseRowBlock<double> to_row_block(const MatrixMarketData& d) {
  std::vector<SparseRow<double>> rows(static_cast<std::size_t>(d.rows));
  for (const auto& t : d.entries) rows[static_cast<std::size_t>(t.row)].push_back({t.col, t.value});
  return SparseRowBlock<double>(d.cols, std::move(rows));
}

}  // namespace bsp
