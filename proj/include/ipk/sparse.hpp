#pragma once

#include <algorithm>
#include <concepts>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ipk/common.hpp"

namespace ipk {

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Row-major compressed sparse matrix.
///
/// Always canonical: column indices strictly increasing within a row,
/// duplicates summed and exact zeros dropped at construction. Immutable
/// afterwards, so it is safe to share between threads.
class CsrMatrix {
 public:
  CsrMatrix() : row_starts_(1, 0) {}

  CsrMatrix(Index nrows, Index ncols, std::vector<Triplet> entries)
      : nrows_(nrows), ncols_(ncols) {
    if (nrows < 0 || ncols < 0) throw DimensionError("CsrMatrix: negative dimension");
    for (const auto& t : entries) {
      if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
        throw DimensionError("CsrMatrix: entry (" + std::to_string(t.row) + "," +
                             std::to_string(t.col) + ") out of range");
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    row_starts_.assign(static_cast<std::size_t>(nrows) + 1, 0);
    std::size_t k = 0;
    while (k < entries.size()) {
      const Index r = entries[k].row;
      const Index c = entries[k].col;
      double v = 0.0;
      for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k) {
        v += entries[k].value;
      }
      if (v != 0.0) {
        col_indices_.push_back(c);
        values_.push_back(v);
        ++row_starts_[static_cast<std::size_t>(r) + 1];
      }
    }
    std::partial_sum(row_starts_.begin(), row_starts_.end(), row_starts_.begin());
  }

  static CsrMatrix from_dense(Index nrows, Index ncols, std::span<const double> row_major) {
    require_size(row_major.size(), static_cast<std::size_t>(nrows * ncols), "from_dense");
    std::vector<Triplet> t;
    for (Index i = 0; i < nrows; ++i) {
      for (Index j = 0; j < ncols; ++j) {
        const double v = row_major[static_cast<std::size_t>(i * ncols + j)];
        if (v != 0.0) t.push_back({i, j, v});
      }
    }
    return CsrMatrix(nrows, ncols, std::move(t));
  }

  static CsrMatrix identity(Index n) {
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return CsrMatrix(n, n, std::move(t));
  }

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_starts() const { return row_starts_; }
  std::span<const Index> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const Index> row_cols(Index i) const {
    return std::span<const Index>(col_indices_).subspan(
        static_cast<std::size_t>(row_starts_[i]),
        static_cast<std::size_t>(row_starts_[i + 1] - row_starts_[i]));
  }
  std::span<const double> row_values(Index i) const {
    return std::span<const double>(values_).subspan(
        static_cast<std::size_t>(row_starts_[i]),
        static_cast<std::size_t>(row_starts_[i + 1] - row_starts_[i]));
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (Index i = 0; i < nrows_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) {
        t.push_back({i, col_indices_[k], values_[k]});
      }
    }
    return t;
  }

  Vector to_dense() const {
    Vector d(static_cast<std::size_t>(nrows_ * ncols_), 0.0);
    for (Index i = 0; i < nrows_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) {
        d[static_cast<std::size_t>(i * ncols_ + col_indices_[k])] = values_[k];
      }
    }
    return d;
  }

  // Operator interface shared with the scaled operators (see RowOperator).

  void apply(std::span<const double> x, std::span<double> y) const {
    for (Index i = 0; i < nrows_; ++i) {
      double s = 0.0;
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) s += values_[k] * x[col_indices_[k]];
      y[i] = s;
    }
  }

  void apply_transpose(std::span<const double> y, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    for (Index i = 0; i < nrows_; ++i) {
      const double yi = y[i];
      if (yi == 0.0) continue;
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) x[col_indices_[k]] += values_[k] * yi;
    }
  }

  double row_dot(Index i, std::span<const double> x) const {
    double s = 0.0;
    for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) s += values_[k] * x[col_indices_[k]];
    return s;
  }

  void row_axpy(Index i, double a, std::span<double> x) const {
    for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) x[col_indices_[k]] += a * values_[k];
  }

  Vector row_norms_squared() const {
    Vector r(static_cast<std::size_t>(nrows_), 0.0);
    for (Index i = 0; i < nrows_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) r[i] += values_[k] * values_[k];
    }
    return r;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_starts_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Anything the Krylov solvers and the row-action sweeps can work on:
/// products with the operator and its transpose plus single-row access.
template <class Op>
concept RowOperator = requires(const Op& op, Index i, std::span<const double> cx,
                               std::span<double> x, double a) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  op.apply(cx, x);
  op.apply_transpose(cx, x);
  { op.row_dot(i, cx) } -> std::convertible_to<double>;
  op.row_axpy(i, a, x);
  { op.row_norms_squared() } -> std::convertible_to<Vector>;
};

static_assert(RowOperator<CsrMatrix>);

inline Vector matvec(const CsrMatrix& a, std::span<const double> x) {
  require_size(x.size(), static_cast<std::size_t>(a.cols()), "matvec");
  Vector y(static_cast<std::size_t>(a.rows()));
  a.apply(x, y);
  return y;
}

inline Vector matvec_transpose(const CsrMatrix& a, std::span<const double> y) {
  require_size(y.size(), static_cast<std::size_t>(a.rows()), "matvec_transpose");
  Vector x(static_cast<std::size_t>(a.cols()));
  a.apply_transpose(y, x);
  return x;
}

inline void check_row(const CsrMatrix& a, Index i) {
  if (i < 0 || i >= a.rows()) {
    throw DimensionError("row index " + std::to_string(i) + " out of range [0," +
                         std::to_string(a.rows()) + ")");
  }
}

inline double row_dot(const CsrMatrix& a, Index i, std::span<const double> x) {
  check_row(a, i);
  require_size(x.size(), static_cast<std::size_t>(a.cols()), "row_dot");
  return a.row_dot(i, x);
}

inline void row_axpy(const CsrMatrix& a, Index i, double d, std::span<double> x) {
  check_row(a, i);
  require_size(x.size(), static_cast<std::size_t>(a.cols()), "row_axpy");
  if (d != 0.0) a.row_axpy(i, d, x);
}

inline Vector row_norms(const CsrMatrix& a) {
  Vector r = a.row_norms_squared();
  for (double& v : r) v = std::sqrt(v);
  return r;
}

/// Positions kept by remove_zero_rows_cols, in terms of the original indices.
struct ReducedIndexMap {
  Index original_rows = 0;
  Index original_cols = 0;
  std::vector<Index> kept_rows;
  std::vector<Index> kept_cols;

  bool is_identity() const {
    return static_cast<Index>(kept_rows.size()) == original_rows &&
           static_cast<Index>(kept_cols.size()) == original_cols;
  }

  /// Re-embed a primal vector of the reduced problem; removed columns get 0.
  Vector expand_cols(std::span<const double> x) const {
    require_size(x.size(), kept_cols.size(), "expand_cols");
    Vector out(static_cast<std::size_t>(original_cols), 0.0);
    for (std::size_t k = 0; k < kept_cols.size(); ++k) out[kept_cols[k]] = x[k];
    return out;
  }

  /// Re-embed a dual vector; removed rows get 0.
  Vector expand_rows(std::span<const double> y) const {
    require_size(y.size(), kept_rows.size(), "expand_rows");
    Vector out(static_cast<std::size_t>(original_rows), 0.0);
    for (std::size_t k = 0; k < kept_rows.size(); ++k) out[kept_rows[k]] = y[k];
    return out;
  }
};

struct ReducedSystem {
  CsrMatrix a;
  Vector b;
  Vector c;
  ReducedIndexMap map;
};

/// Drop all-zero rows and columns of A. A zero row whose right-hand side is
/// nonzero makes Ax = b unsatisfiable and raises InfeasibleError.
inline ReducedSystem remove_zero_rows_cols(const CsrMatrix& a, std::span<const double> b,
                                           std::span<const double> c) {
  require_size(b.size(), static_cast<std::size_t>(a.rows()), "remove_zero_rows_cols: b");
  require_size(c.size(), static_cast<std::size_t>(a.cols()), "remove_zero_rows_cols: c");
  std::vector<char> col_used(static_cast<std::size_t>(a.cols()), 0);
  ReducedIndexMap map{a.rows(), a.cols(), {}, {}};
  for (Index i = 0; i < a.rows(); ++i) {
    if (a.row_cols(i).empty()) {
      if (b[i] != 0.0) {
        throw InfeasibleError("trivially infeasible: row " + std::to_string(i) +
                              " is zero but b = " + std::to_string(b[i]));
      }
      continue;
    }
    map.kept_rows.push_back(i);
    for (Index j : a.row_cols(i)) col_used[j] = 1;
  }
  std::vector<Index> new_col(static_cast<std::size_t>(a.cols()), -1);
  for (Index j = 0; j < a.cols(); ++j) {
    if (col_used[j]) {
      new_col[j] = static_cast<Index>(map.kept_cols.size());
      map.kept_cols.push_back(j);
    }
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  for (std::size_t r = 0; r < map.kept_rows.size(); ++r) {
    const Index i = map.kept_rows[r];
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) t.push_back({static_cast<Index>(r), new_col[cols[k]], vals[k]});
  }
  ReducedSystem out;
  out.a = CsrMatrix(static_cast<Index>(map.kept_rows.size()), static_cast<Index>(map.kept_cols.size()), std::move(t));
  for (Index i : map.kept_rows) out.b.push_back(b[i]);
  for (Index j : map.kept_cols) out.c.push_back(c[j]);
  out.map = std::move(map);
  return out;
}

/// Matrix Market coordinate dump (1-based indices), used for test fixtures.
inline void write_matrix_market(std::ostream& os, const CsrMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  char buf[64];
  for (const auto& t : a.triplets()) {
    std::snprintf(buf, sizeof buf, "%.17g", t.value);
    os << t.row + 1 << ' ' << t.col + 1 << ' ' << buf << '\n';
  }
}

}  // namespace ipk
