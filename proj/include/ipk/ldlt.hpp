#pragma once

// Dense LDL^T with pivot dropping, the direct baseline for the normal
// equations A A^T dy = f. Pivots at or below drop_tol are removed together
// with their row and column; the reduced system is solved and the dropped
// coordinates of dy are set to exactly zero. Natural pivot order, no
// reordering.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "ipk/common.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

struct DenseMatrix {
  Index n = 0;
  Vector data;  // row-major n x n

  DenseMatrix() = default;
  explicit DenseMatrix(Index size) : n(size), data(static_cast<std::size_t>(size * size), 0.0) {}

  double& operator()(Index i, Index j) { return data[static_cast<std::size_t>(i * n + j)]; }
  double operator()(Index i, Index j) const { return data[static_cast<std::size_t>(i * n + j)]; }
};

/// Explicit op * op^T (m x m). Only the direct baseline forms this product.
template <RowOperator Op>
DenseMatrix form_normal_matrix(const Op& op) {
  const Index m = op.rows();
  DenseMatrix out(m);
  Vector row(static_cast<std::size_t>(op.cols()), 0.0);
  for (Index i = 0; i < m; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    op.row_axpy(i, 1.0, row);
    for (Index j = 0; j <= i; ++j) {
      const double v = op.row_dot(j, row);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

class IndefiniteMatrixError : public Error {
 public:
  using Error::Error;
};

struct LdltFactor {
  Index n = 0;
  DenseMatrix l;            // unit lower triangular; dropped columns are zero
  Vector g;                 // pivots (dropped ones kept for inspection)
  std::vector<char> kept;   // kept[i] != 0 iff g[i] > drop_tol
  double drop_tol = 1e-16;

  Index kept_count() const {
    Index c = 0;
    for (char k : kept) c += k != 0;
    return c;
  }
};

inline constexpr double kDefaultDropTol = 1e-16;
inline constexpr double kFallbackDropTol = 1e-6;

inline LdltFactor ldlt_drop_factor(const DenseMatrix& mat, double drop_tol = kDefaultDropTol) {
  const Index n = mat.n;
  LdltFactor f;
  f.n = n;
  f.l = DenseMatrix(n);
  f.g.assign(static_cast<std::size_t>(n), 0.0);
  f.kept.assign(static_cast<std::size_t>(n), 0);
  f.drop_tol = drop_tol;
  // w(i,k) = L(i,k) * g(k) for kept k, reused across columns.
  DenseMatrix w(n);
  for (Index j = 0; j < n; ++j) {
    double pivot = mat(j, j);
    for (Index k = 0; k < j; ++k) pivot -= f.l(j, k) * w(j, k);
    f.g[j] = pivot;
    f.l(j, j) = 1.0;
    if (pivot <= drop_tol) {
      if (pivot < -drop_tol) {
        throw IndefiniteMatrixError("ldlt_drop_factor: pivot " + std::to_string(j) + " = " +
                                    std::to_string(pivot) + " is below -drop_tol");
      }
      continue;  // dropped: column j of L stays zero
    }
    f.kept[j] = 1;
    for (Index i = j + 1; i < n; ++i) {
      double v = mat(i, j);
      for (Index k = 0; k < j; ++k) v -= f.l(i, k) * w(j, k);
      f.l(i, j) = v / pivot;
      w(i, j) = v;
    }
  }
  return f;
}

inline Vector ldlt_drop_solve(const LdltFactor& f, std::span<const double> rhs) {
  require_size(rhs.size(), static_cast<std::size_t>(f.n), "ldlt_drop_solve");
  const Index n = f.n;
  Vector y(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    if (!f.kept[i]) continue;
    double v = rhs[i];
    for (Index k = 0; k < i; ++k) {
      if (f.kept[k]) v -= f.l(i, k) * y[k];
    }
    y[i] = v;
  }
  for (Index i = 0; i < n; ++i) {
    if (f.kept[i]) y[i] /= f.g[i];
  }
  for (Index i = n; i-- > 0;) {
    if (!f.kept[i]) {
      y[i] = 0.0;
      continue;
    }
    double v = y[i];
    for (Index k = i + 1; k < n; ++k) {
      if (f.kept[k]) v -= f.l(k, i) * y[k];
    }
    y[i] = v;
  }
  return y;
}

}  // namespace ipk
