#pragma once

// Row-action stationary sweeps for the normal equations of the second kind
//   A A^T p = g,  z = A^T p
// used as implicit preconditioners by the Krylov solvers. Nothing but rows
// of the operator is ever touched; A A^T is never formed.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>

#include "ipk/common.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

struct InnerIterConfig {
  double omega = 1.0;  // relaxation, must lie strictly inside (0, 2)
  int ell = 5;         // number of sweeps

  void validate() const {
    if (!(omega > 0.0 && omega < 2.0)) {
      throw std::invalid_argument("inner iterations: omega must lie in (0,2), got " +
                                  std::to_string(omega));
    }
    if (ell < 1) throw std::invalid_argument("inner iterations: ell must be >= 1");
  }
};

/// Cached squared row norms plus the flag for rows that must be skipped.
struct RowWorkspace {
  Vector row_norm_sq;
  std::vector<char> zero_row;

  RowWorkspace() = default;

  template <RowOperator Op>
  explicit RowWorkspace(const Op& op) : row_norm_sq(op.row_norms_squared()) {
    zero_row.resize(row_norm_sq.size());
    for (std::size_t i = 0; i < row_norm_sq.size(); ++i) zero_row[i] = row_norm_sq[i] == 0.0;
  }
};

/// NE-SOR: ell forward sweeps from z = 0. Writes z = B g (length n) and,
/// when `p` is non-empty, the m-vector of accumulated row multipliers so
/// that z = A^T p holds exactly.
template <RowOperator Op>
void ne_sor_apply_into(const Op& op, std::span<const double> g, const InnerIterConfig& cfg,
                       const RowWorkspace& ws, std::span<double> z, std::span<double> p) {
  const Index m = op.rows();
  std::fill(z.begin(), z.end(), 0.0);
  if (!p.empty()) std::fill(p.begin(), p.end(), 0.0);
  for (int k = 0; k < cfg.ell; ++k) {
    for (Index i = 0; i < m; ++i) {
      if (ws.zero_row[i]) continue;
      const double d = cfg.omega * (g[i] - op.row_dot(i, z)) / ws.row_norm_sq[i];
      op.row_axpy(i, d, z);
      if (!p.empty()) p[i] += d;
    }
  }
}

template <RowOperator Op>
Vector ne_sor_apply(const Op& op, std::span<const double> g, const InnerIterConfig& cfg,
                    const RowWorkspace& ws) {
  cfg.validate();
  require_size(g.size(), static_cast<std::size_t>(op.rows()), "ne_sor_apply: g");
  require_size(ws.row_norm_sq.size(), static_cast<std::size_t>(op.rows()), "ne_sor_apply: workspace");
  Vector z(static_cast<std::size_t>(op.cols()));
  ne_sor_apply_into(op, g, cfg, ws, z, {});
  return z;
}

/// NE-SSOR: ell symmetric (forward then backward) sweeps from z = 0, u = 0.
/// Produces z = C g (length m) and u = A^T z (length n), with u maintained
/// incrementally alongside z.
template <RowOperator Op>
void ne_ssor_apply_into(const Op& op, std::span<const double> g, const InnerIterConfig& cfg,
                        const RowWorkspace& ws, std::span<double> z, std::span<double> u) {
  const Index m = op.rows();
  std::fill(z.begin(), z.end(), 0.0);
  std::fill(u.begin(), u.end(), 0.0);
  auto relax = [&](Index i) {
    if (ws.zero_row[i]) return;
    const double d = cfg.omega * (g[i] - op.row_dot(i, u)) / ws.row_norm_sq[i];
    z[i] += d;
    op.row_axpy(i, d, u);
  };
  for (int k = 0; k < cfg.ell; ++k) {
    for (Index i = 0; i < m; ++i) relax(i);
    for (Index i = m - 1; i >= 0; --i) relax(i);
  }
}

struct SsorOutput {
  Vector z;  // C g, length m
  Vector u;  // A^T C g, length n
};

template <RowOperator Op>
SsorOutput ne_ssor_apply(const Op& op, std::span<const double> g, const InnerIterConfig& cfg,
                         const RowWorkspace& ws) {
  cfg.validate();
  require_size(g.size(), static_cast<std::size_t>(op.rows()), "ne_ssor_apply: g");
  require_size(ws.row_norm_sq.size(), static_cast<std::size_t>(op.rows()), "ne_ssor_apply: workspace");
  SsorOutput out{Vector(static_cast<std::size_t>(op.rows())), Vector(static_cast<std::size_t>(op.cols()))};
  ne_ssor_apply_into(op, g, cfg, ws, out.z, out.u);
  return out;
}

// Operator-application equivalents of one sweep, for MV accounting.
inline constexpr int kSorSweepMv = 2;
inline constexpr int kSsorSweepMv = 4;

}  // namespace ipk
