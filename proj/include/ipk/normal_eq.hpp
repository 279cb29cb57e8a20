#pragma once

// Per-step pieces of the condensed Newton system. With D = (X S^-1)^{1/2}
// each interior-point direction is obtained from
//
//   min ||dw||  subject to  (A D) dw = f,
//
// solved on the row-scaled operator  Dr^-1 A D  where Dr holds the row norms
// of A D (so the scaled operator has unit rows). The operator is implicit:
// A is shared and only the two diagonals are stored.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "ipk/common.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

/// diag(row_factor) * A * diag(col_factor), applied on the fly.
class ScaledOperator {
 public:
  ScaledOperator(const CsrMatrix& a, Vector row_factor, Vector col_factor)
      : a_(&a), row_(std::move(row_factor)), col_(std::move(col_factor)) {
    require_size(row_.size(), static_cast<std::size_t>(a.rows()), "ScaledOperator: row factor");
    require_size(col_.size(), static_cast<std::size_t>(a.cols()), "ScaledOperator: column factor");
  }

  Index rows() const { return a_->rows(); }
  Index cols() const { return a_->cols(); }
  const CsrMatrix& matrix() const { return *a_; }
  std::span<const double> row_factor() const { return row_; }
  std::span<const double> col_factor() const { return col_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    for (Index i = 0; i < rows(); ++i) y[i] = row_dot(i, x);
  }

  void apply_transpose(std::span<const double> y, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    for (Index i = 0; i < rows(); ++i) {
      if (y[i] != 0.0) row_axpy(i, y[i], x);
    }
  }

  double row_dot(Index i, std::span<const double> x) const {
    auto cols = a_->row_cols(i);
    auto vals = a_->row_values(i);
    double s = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * col_[cols[k]] * x[cols[k]];
    return row_[i] * s;
  }

  void row_axpy(Index i, double alpha, std::span<double> x) const {
    const double a = alpha * row_[i];
    if (a == 0.0) return;
    auto cols = a_->row_cols(i);
    auto vals = a_->row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) x[cols[k]] += a * vals[k] * col_[cols[k]];
  }

  Vector row_norms_squared() const {
    Vector r(static_cast<std::size_t>(rows()), 0.0);
    for (Index i = 0; i < rows(); ++i) {
      auto cols = a_->row_cols(i);
      auto vals = a_->row_values(i);
      double s = 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double v = vals[k] * col_[cols[k]];
        s += v * v;
      }
      r[i] = row_[i] * row_[i] * s;
    }
    return r;
  }

 private:
  const CsrMatrix* a_;
  Vector row_;
  Vector col_;
};

static_assert(RowOperator<ScaledOperator>);

inline constexpr double kScaleClampLow = 1e-128;
inline constexpr double kScaleClampHigh = 1e128;

/// The implicit operator of one interior-point step. Holds a reference to A,
/// which must outlive it.
struct ScaledSystem {
  Vector d;        // sqrt(x/s), length n
  Vector rho;      // row norms of A D, length m (0 for a zero row)
  int clamped = 0; // entries of x/s forced into [kScaleClampLow, kScaleClampHigh]
  ScaledOperator op;

  Index rows() const { return op.rows(); }
  Index cols() const { return op.cols(); }
  const CsrMatrix& matrix() const { return op.matrix(); }
};

inline ScaledSystem build_scaled_system(const CsrMatrix& a, std::span<const double> x,
                                        std::span<const double> s) {
  const auto n = static_cast<std::size_t>(a.cols());
  require_size(x.size(), n, "build_scaled_system: x");
  require_size(s.size(), n, "build_scaled_system: s");
  Vector d(n);
  int clamped = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!(x[j] > 0.0) || !(s[j] > 0.0)) {
      throw Error("build_scaled_system: iterate left the interior at index " + std::to_string(j));
    }
    double ratio = x[j] / s[j];
    if (ratio < kScaleClampLow || ratio > kScaleClampHigh) {
      ratio = std::clamp(ratio, kScaleClampLow, kScaleClampHigh);
      ++clamped;
    }
    d[j] = std::sqrt(ratio);
  }
  Vector rho(static_cast<std::size_t>(a.rows()), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    // Scaled accumulation guards against overflow when d spans many decades.
    double big = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) big = std::max(big, std::abs(vals[k] * d[cols[k]]));
    if (big == 0.0) continue;
    double ssq = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = vals[k] * d[cols[k]] / big;
      ssq += v * v;
    }
    rho[i] = big * std::sqrt(ssq);
  }
  Vector inv_rho(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) inv_rho[i] = rho[i] > 0.0 ? 1.0 / rho[i] : 0.0;
  ScaledOperator op(a, std::move(inv_rho), d);
  return ScaledSystem{std::move(d), std::move(rho), clamped, std::move(op)};
}

// The system keeps a reference to A.
ScaledSystem build_scaled_system(CsrMatrix&&, std::span<const double>, std::span<const double>) = delete;

namespace detail {
inline void row_unscale(const ScaledSystem& sys, std::span<double> v) {
  auto inv = sys.op.row_factor();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= inv[i];
}
}  // namespace detail

/// Scaled predictor right-hand side  Dr^-1 (b + A D^2 r_d).
inline Vector predictor_rhs(const ScaledSystem& sys, std::span<const double> b,
                            std::span<const double> r_d) {
  const auto n = static_cast<std::size_t>(sys.cols());
  require_size(b.size(), static_cast<std::size_t>(sys.rows()), "predictor_rhs: b");
  require_size(r_d.size(), n, "predictor_rhs: r_d");
  Vector t(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = sys.d[j] * sys.d[j] * r_d[j];
  Vector f = matvec(sys.matrix(), t);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += b[i];
  detail::row_unscale(sys, f);
  return f;
}

/// Scaled corrector right-hand side  Dr^-1 A S^-1 (dX_af dS_af e - sigma mu e).
inline Vector corrector_rhs(const ScaledSystem& sys, std::span<const double> dx_af,
                            std::span<const double> ds_af, double sigma, double mu,
                            std::span<const double> s) {
  const auto n = static_cast<std::size_t>(sys.cols());
  require_size(dx_af.size(), n, "corrector_rhs: dx_af");
  require_size(ds_af.size(), n, "corrector_rhs: ds_af");
  require_size(s.size(), n, "corrector_rhs: s");
  Vector t(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = (dx_af[j] * ds_af[j] - sigma * mu) / s[j];
  Vector f = matvec(sys.matrix(), t);
  detail::row_unscale(sys, f);
  return f;
}

struct PrimalDualStep {
  Vector dx;
  Vector ds;
};

/// ds = r_d - D^-1 dw,  dx = -D^2 ds - x.
inline PrimalDualStep recover_predictor(const ScaledSystem& sys, std::span<const double> dw,
                                        std::span<const double> r_d, std::span<const double> x) {
  const auto n = static_cast<std::size_t>(sys.cols());
  require_size(dw.size(), n, "recover_predictor: dw");
  require_size(r_d.size(), n, "recover_predictor: r_d");
  require_size(x.size(), n, "recover_predictor: x");
  PrimalDualStep st{Vector(n), Vector(n)};
  for (std::size_t j = 0; j < n; ++j) {
    st.ds[j] = r_d[j] - dw[j] / sys.d[j];
    st.dx[j] = -sys.d[j] * sys.d[j] * st.ds[j] - x[j];
  }
  return st;
}

/// ds = -D^-1 dw,  dx = -D^2 ds - S^-1 dX_af ds_af + sigma mu S^-1 e.
inline PrimalDualStep recover_corrector(const ScaledSystem& sys, std::span<const double> dw,
                                        std::span<const double> dx_af,
                                        std::span<const double> ds_af, double sigma, double mu,
                                        std::span<const double> s) {
  const auto n = static_cast<std::size_t>(sys.cols());
  require_size(dw.size(), n, "recover_corrector: dw");
  require_size(dx_af.size(), n, "recover_corrector: dx_af");
  require_size(ds_af.size(), n, "recover_corrector: ds_af");
  require_size(s.size(), n, "recover_corrector: s");
  PrimalDualStep st{Vector(n), Vector(n)};
  for (std::size_t j = 0; j < n; ++j) {
    st.ds[j] = -dw[j] / sys.d[j];
    st.dx[j] = -sys.d[j] * sys.d[j] * st.ds[j] - dx_af[j] * ds_af[j] / s[j] + sigma * mu / s[j];
  }
  return st;
}

/// Dual step of the unscaled system from the m-space iterate of the
/// row-scaled solve:  dy = Dr^-1 dy_hat.
inline Vector unscale_dual(const ScaledSystem& sys, std::span<const double> dy_hat) {
  require_size(dy_hat.size(), static_cast<std::size_t>(sys.rows()), "unscale_dual");
  Vector dy(dy_hat.begin(), dy_hat.end());
  detail::row_unscale(sys, dy);
  return dy;
}

}  // namespace ipk
