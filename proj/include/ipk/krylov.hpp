#pragma once

// Inner-iteration preconditioned Krylov solvers for the consistent
// minimum-norm problem
//
//   min ||dw||_2  subject to  A dw = f,
//
// CGNE and MRNE run on A A^T y = f with NE-SSOR as the symmetric
// preconditioner; AB-GMRES runs on A B z = f, dw = B z with NE-SOR as the
// right preconditioner B. All three start from dw = 0, so every iterate
// stays in range(A^T).
//
// With `weights` W the stopping test (and the reported relative residual)
// uses ||W (f - A dw)|| / ||W f|| instead of the plain 2-norm.
//
// Besides dw, each solver returns the m-vector dy with dw = A^T dy (up to
// rounding), which is what the interior-point driver needs for the dual
// update.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipk/common.hpp"
#include "ipk/inner.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

enum class KrylovMethod { CGNE, MRNE, ABGMRES };

inline std::string_view to_string(KrylovMethod m) {
  switch (m) {
    case KrylovMethod::CGNE:
      return "cgne";
    case KrylovMethod::MRNE:
      return "mrne";
    case KrylovMethod::ABGMRES:
      return "abgmres";
  }
  return "?";
}

struct KrylovConfig {
  KrylovMethod method = KrylovMethod::MRNE;
  double tol = 1e-6;         // relative residual ||f - A dw|| <= tol ||f||
  Index max_iter = 0;        // 0 means "number of rows"
  int refresh_interval = 50; // explicit residual recomputation period (CGNE/MRNE)
  InnerIterConfig inner;
};

struct SolveReport {
  Index iterations = 0;
  double relative_residual = 0.0;  // of the returned iterate, recomputed explicitly
  bool converged = false;
  bool breakdown = false;
  long long mv_count = 0;          // operator applications, sweeps counted by their MV equivalent
  // Relative residual per iteration, starting with 1 for dw = 0. For CGNE and
  // MRNE these are the recurrence residuals; for AB-GMRES the Givens estimates.
  std::vector<double> residual_history;
  // Relative value of the norm the method minimizes, per iteration: the
  // preconditioner norm sqrt(g^T C g) for MRNE, the 2-norm for AB-GMRES.
  // Empty for CGNE.
  std::vector<double> minimized_history;
};

struct KrylovResult {
  Vector dw;
  Vector dy;
  SolveReport report;
};

namespace detail {

inline Index resolve_max_iter(const KrylovConfig& cfg, Index m) {
  return cfg.max_iter > 0 ? cfg.max_iter : std::max<Index>(m, 1);
}

template <RowOperator Op>
double true_residual(const Op& op, std::span<const double> f, std::span<const double> dw,
                     std::span<double> r) {
  op.apply(dw, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - r[i];
  return vec::norm2(r);
}

/// ||W r|| for a diagonal W given as a vector; plain 2-norm when W is empty.
inline double weighted_norm(std::span<const double> r, std::span<const double> w) {
  if (w.empty()) return vec::norm2(r);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = w[i] * r[i];
    s += v * v;
  }
  return std::sqrt(s);
}

template <RowOperator Op>
double true_residual_w(const Op& op, std::span<const double> f, std::span<const double> dw,
                       std::span<double> r, std::span<const double> w) {
  op.apply(dw, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - r[i];
  return weighted_norm(r, w);
}

inline void require_odd_ell(const KrylovConfig& cfg, const char* who) {
  cfg.inner.validate();
  if (cfg.inner.ell % 2 == 0) {
    throw std::invalid_argument(std::string(who) +
                                ": NE-SSOR preconditioning needs an odd number of sweeps");
  }
}

template <RowOperator Op>
void check_dims(const Op& op, std::span<const double> f, const KrylovConfig& cfg,
                std::span<const double> weights) {
  require_size(f.size(), static_cast<std::size_t>(op.rows()), "krylov: right-hand side");
  if (!weights.empty()) require_size(weights.size(), f.size(), "krylov: residual weights");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("krylov: tol must be positive");
}

/// Keeps the iterate with the smallest observed residual.
struct BestIterate {
  double res = std::numeric_limits<double>::infinity();
  Vector dw, dy;
  void offer(double r, const Vector& w, const Vector& y) {
    if (r < res) {
      res = r;
      dw = w;
      dy = y;
    }
  }
};

}  // namespace detail

/// CGNE preconditioned by NE-SSOR inner iterations. The k-th iterate
/// minimizes the error norm ||dw - dw*|| over the preconditioned Krylov space.
template <RowOperator Op>
KrylovResult cgne_solve(const Op& op, std::span<const double> f, const KrylovConfig& cfg,
                         std::span<const double> weights = {}) {
  detail::check_dims(op, f, cfg, weights);
  detail::require_odd_ell(cfg, "cgne_solve");
  const auto m = static_cast<std::size_t>(op.rows());
  const auto n = static_cast<std::size_t>(op.cols());
  KrylovResult out{Vector(n, 0.0), Vector(m, 0.0), {}};
  SolveReport& rep = out.report;
  rep.residual_history.push_back(1.0);
  const double fnorm = detail::weighted_norm(f, weights);
  if (fnorm == 0.0) {
    rep.converged = true;
    rep.residual_history.back() = 0.0;
    return out;
  }
  const Index max_iter = detail::resolve_max_iter(cfg, op.rows());
  const long long sweep_mv = static_cast<long long>(kSsorSweepMv) * cfg.inner.ell;
  const RowWorkspace ws(op);

  Vector g(f.begin(), f.end()), z(m), u(n), t(m), r(m);
  ne_ssor_apply_into(op, g, cfg.inner, ws, z, u);
  rep.mv_count += sweep_mv;
  Vector q = u, qm = z;
  double gamma = vec::dot(g, z);
  detail::BestIterate best;
  Index next_check = 0;

  for (Index k = 0; k < max_iter; ++k) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      rep.breakdown = true;
      break;
    }
    op.apply(q, t);
    ++rep.mv_count;
    const double qq = vec::dot(q, q);
    if (!(qq > 0.0) || !std::isfinite(qq)) {
      rep.breakdown = true;
      break;
    }
    const double alpha = gamma / qq;
    vec::axpy(alpha, q, out.dw);
    vec::axpy(alpha, qm, out.dy);
    vec::axpy(-alpha, t, g);
    rep.iterations = k + 1;
    if (cfg.refresh_interval > 0 && rep.iterations % cfg.refresh_interval == 0) {
      detail::true_residual(op, f, out.dw, g);
      ++rep.mv_count;
    }
    double res = detail::weighted_norm(g, weights) / fnorm;
    rep.residual_history.push_back(res);
    if (res <= cfg.tol && k >= next_check) {
      const double tres = detail::true_residual_w(op, f, out.dw, r, weights) / fnorm;
      ++rep.mv_count;
      if (tres <= cfg.tol) {
        rep.converged = true;
        rep.relative_residual = tres;
        return out;
      }
      g = r;  // recurrence drifted; continue from the true residual
      res = tres;
      next_check = k + std::max<Index>(1, k / 10);
    }
    best.offer(res, out.dw, out.dy);
    ne_ssor_apply_into(op, g, cfg.inner, ws, z, u);
    rep.mv_count += sweep_mv;
    const double gamma_next = vec::dot(g, z);
    const double beta = gamma_next / gamma;
    vec::xpby(u, beta, q);
    vec::xpby(z, beta, qm);
    gamma = gamma_next;
  }
  if (best.res < std::numeric_limits<double>::infinity()) {
    out.dw = std::move(best.dw);
    out.dy = std::move(best.dy);
  }
  rep.relative_residual = detail::true_residual_w(op, f, out.dw, r, weights) / fnorm;
  ++rep.mv_count;
  rep.converged = rep.relative_residual <= cfg.tol;
  return out;
}

/// MRNE preconditioned by NE-SSOR inner iterations: the k-th iterate
/// minimizes the residual, measured in the norm induced by the
/// preconditioner, over the same space as CGNE.
template <RowOperator Op>
KrylovResult mrne_solve(const Op& op, std::span<const double> f, const KrylovConfig& cfg,
                         std::span<const double> weights = {}) {
  detail::check_dims(op, f, cfg, weights);
  detail::require_odd_ell(cfg, "mrne_solve");
  const auto m = static_cast<std::size_t>(op.rows());
  const auto n = static_cast<std::size_t>(op.cols());
  KrylovResult out{Vector(n, 0.0), Vector(m, 0.0), {}};
  SolveReport& rep = out.report;
  rep.residual_history.push_back(1.0);
  const double fnorm = detail::weighted_norm(f, weights);
  if (fnorm == 0.0) {
    rep.converged = true;
    rep.residual_history.back() = 0.0;
    rep.minimized_history.push_back(0.0);
    return out;
  }
  const Index max_iter = detail::resolve_max_iter(cfg, op.rows());
  const long long sweep_mv = static_cast<long long>(kSsorSweepMv) * cfg.inner.ell;
  const RowWorkspace ws(op);

  // q = A^T C g and its m-space companion qm = C g are carried by recurrence.
  Vector g(f.begin(), f.end()), qm(m), q(n), t(m), vm(m), v(n), r(m);
  ne_ssor_apply_into(op, g, cfg.inner, ws, qm, q);
  rep.mv_count += sweep_mv;
  Vector p = q, pm = qm;
  double gamma = vec::dot(q, q);
  const double fnorm_c = std::sqrt(std::max(0.0, vec::dot(g, qm)));
  rep.minimized_history.push_back(1.0);
  detail::BestIterate best;
  Index next_check = 0;

  for (Index k = 0; k < max_iter; ++k) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      rep.breakdown = true;
      break;
    }
    op.apply(p, t);
    ++rep.mv_count;
    ne_ssor_apply_into(op, t, cfg.inner, ws, vm, v);
    rep.mv_count += sweep_mv;
    const double den = vec::dot(v, p);
    if (!(den > 0.0) || !std::isfinite(den)) {
      rep.breakdown = true;
      break;
    }
    const double alpha = gamma / den;
    vec::axpy(alpha, p, out.dw);
    vec::axpy(alpha, pm, out.dy);
    vec::axpy(-alpha, t, g);
    vec::axpy(-alpha, v, q);
    vec::axpy(-alpha, vm, qm);
    rep.iterations = k + 1;
    rep.minimized_history.push_back(std::sqrt(std::max(0.0, vec::dot(g, qm))) / fnorm_c);
    bool refreshed = false;
    if (cfg.refresh_interval > 0 && rep.iterations % cfg.refresh_interval == 0) {
      detail::true_residual(op, f, out.dw, g);
      ++rep.mv_count;
      refreshed = true;
    }
    double res = detail::weighted_norm(g, weights) / fnorm;
    rep.residual_history.push_back(res);
    if (res <= cfg.tol && k >= next_check) {
      const double tres = detail::true_residual_w(op, f, out.dw, r, weights) / fnorm;
      ++rep.mv_count;
      if (tres <= cfg.tol) {
        rep.converged = true;
        rep.relative_residual = tres;
        return out;
      }
      g = r;
      refreshed = true;
      res = tres;
      next_check = k + std::max<Index>(1, k / 10);
    }
    if (refreshed) {
      // Re-derive the preconditioned residual from the replaced g.
      ne_ssor_apply_into(op, g, cfg.inner, ws, qm, q);
      rep.mv_count += sweep_mv;
    }
    best.offer(res, out.dw, out.dy);
    const double gamma_next = vec::dot(q, q);
    const double beta = gamma_next / gamma;
    vec::xpby(q, beta, p);
    vec::xpby(qm, beta, pm);
    gamma = gamma_next;
  }
  if (best.res < std::numeric_limits<double>::infinity()) {
    out.dw = std::move(best.dw);
    out.dy = std::move(best.dy);
  }
  rep.relative_residual = detail::true_residual_w(op, f, out.dw, r, weights) / fnorm;
  ++rep.mv_count;
  rep.converged = rep.relative_residual <= cfg.tol;
  return out;
}

/// AB-GMRES right-preconditioned by NE-SOR inner iterations, without
/// restarts. Modified Gram-Schmidt Arnoldi; the Hessenberg least-squares
/// problem is updated with Givens rotations so the residual norm is known
/// at every step.
template <RowOperator Op>
KrylovResult ab_gmres_solve(const Op& op, std::span<const double> f, const KrylovConfig& cfg,
                         std::span<const double> weights = {}) {
  detail::check_dims(op, f, cfg, weights);
  cfg.inner.validate();
  const auto m = static_cast<std::size_t>(op.rows());
  const auto n = static_cast<std::size_t>(op.cols());
  KrylovResult out{Vector(n, 0.0), Vector(m, 0.0), {}};
  SolveReport& rep = out.report;
  rep.residual_history.push_back(1.0);
  rep.minimized_history.push_back(1.0);
  const double beta = vec::norm2(f);
  if (beta == 0.0) {
    rep.converged = true;
    rep.residual_history.back() = 0.0;
    rep.minimized_history.back() = 0.0;
    return out;
  }
  const double fnorm_w = detail::weighted_norm(f, weights);
  const Index max_iter = std::min<Index>(detail::resolve_max_iter(cfg, op.rows()), op.rows());
  const long long sweep_mv = static_cast<long long>(kSorSweepMv) * cfg.inner.ell;
  const RowWorkspace ws(op);

  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(max_iter) + 1);
  basis.emplace_back(f.begin(), f.end());
  vec::scale(1.0 / beta, basis[0]);
  std::vector<Vector> hess;  // column k holds h(0..k+1, k), already rotated
  std::vector<double> cs, sn;
  std::vector<double> rhs{beta};
  Vector zk(n), w(m), r(m);

  auto assemble = [&](std::size_t k) {
    // Back substitution on the rotated (upper triangular) Hessenberg block.
    std::vector<double> coef(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      double s = rhs[i];
      for (std::size_t j = i + 1; j < k; ++j) s -= hess[j][i] * coef[j];
      coef[i] = hess[i][i] != 0.0 ? s / hess[i][i] : 0.0;
    }
    Vector qk(m, 0.0);
    for (std::size_t j = 0; j < k; ++j) vec::axpy(coef[j], basis[j], qk);
    ne_sor_apply_into(op, qk, cfg.inner, ws, out.dw, out.dy);
    rep.mv_count += sweep_mv;
    const double tres = detail::true_residual_w(op, f, out.dw, r, weights) / fnorm_w;
    ++rep.mv_count;
    return tres;
  };

  Index next_check = 0;
  for (Index k = 0; k < max_iter; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    ne_sor_apply_into(op, basis[kk], cfg.inner, ws, zk, {});
    rep.mv_count += sweep_mv;
    op.apply(zk, w);
    ++rep.mv_count;
    const double wnorm0 = vec::norm2(w);
    Vector h(kk + 2, 0.0);
    for (std::size_t i = 0; i <= kk; ++i) {
      h[i] = vec::dot(w, basis[i]);
      vec::axpy(-h[i], basis[i], w);
    }
    h[kk + 1] = vec::norm2(w);
    for (std::size_t i = 0; i < kk; ++i) {
      const double a = h[i], b = h[i + 1];
      h[i] = cs[i] * a + sn[i] * b;
      h[i + 1] = -sn[i] * a + cs[i] * b;
    }
    const double hkk = h[kk], hk1 = h[kk + 1];
    const double rho = std::hypot(hkk, hk1);
    const double c = rho != 0.0 ? hkk / rho : 1.0;
    const double s = rho != 0.0 ? hk1 / rho : 0.0;
    cs.push_back(c);
    sn.push_back(s);
    h[kk] = rho;
    h[kk + 1] = 0.0;
    rhs.push_back(-s * rhs[kk]);
    rhs[kk] = c * rhs[kk];
    hess.push_back(std::move(h));
    rep.iterations = k + 1;
    const double est = std::abs(rhs[kk + 1]) / beta;
    rep.residual_history.push_back(est);
    rep.minimized_history.push_back(est);

    const bool happy = hk1 <= 16.0 * std::numeric_limits<double>::epsilon() * wnorm0;
    if (rho == 0.0) {
      rep.breakdown = true;
      hess.pop_back();
      rhs.pop_back();
      rep.iterations = k;
      break;
    }
    if (happy || (est <= cfg.tol && k >= next_check) || k + 1 == max_iter) {
      const double tres = assemble(kk + 1);
      if (tres <= cfg.tol || happy || k + 1 == max_iter) {
        rep.relative_residual = tres;
        rep.converged = tres <= cfg.tol;
        return out;
      }
      next_check = k + std::max<Index>(1, k / 10);
    }
    basis.emplace_back(w);
    vec::scale(1.0 / hk1, basis.back());
  }
  rep.relative_residual = assemble(hess.size());
  rep.converged = rep.relative_residual <= cfg.tol;
  return out;
}

template <RowOperator Op>
KrylovResult krylov_solve(const Op& op, std::span<const double> f, const KrylovConfig& cfg,
                         std::span<const double> weights = {}) {
  switch (cfg.method) {
    case KrylovMethod::CGNE:
      return cgne_solve(op, f, cfg, weights);
    case KrylovMethod::MRNE:
      return mrne_solve(op, f, cfg, weights);
    case KrylovMethod::ABGMRES:
      return ab_gmres_solve(op, f, cfg, weights);
  }
  throw std::invalid_argument("unknown Krylov method");
}

}  // namespace ipk
