#pragma once

// Infeasible primal-dual predictor-corrector interior-point method for
//
//   min c^T x  s.t.  A x = b,  x >= 0.
//
// Every Newton system is condensed to the minimum-norm problem on the scaled
// operator (see normal_eq.hpp) and handed to an inner-iteration
// preconditioned Krylov solver, or, for the baseline, to a dense LDL^T
// factorization of the explicitly formed normal matrix.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipk/common.hpp"
#include "ipk/krylov.hpp"
#include "ipk/ldlt.hpp"
#include "ipk/mps.hpp"
#include "ipk/normal_eq.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

enum class LinearSolver { CGNE, MRNE, ABGMRES, LDLT };

inline std::string_view to_string(LinearSolver s) {
  switch (s) {
    case LinearSolver::CGNE:
      return "cgne";
    case LinearSolver::MRNE:
      return "mrne";
    case LinearSolver::ABGMRES:
      return "abgmres";
    case LinearSolver::LDLT:
      return "ldlt";
  }
  return "?";
}

inline std::optional<LinearSolver> linear_solver_from_string(std::string_view s) {
  if (s == "cgne") return LinearSolver::CGNE;
  if (s == "mrne") return LinearSolver::MRNE;
  if (s == "abgmres") return LinearSolver::ABGMRES;
  if (s == "ldlt") return LinearSolver::LDLT;
  return std::nullopt;
}

struct IpmConfig {
  double eps_out = 1e-8;
  int max_ipm_iter = 99;
  double eta = 0.9995;
  double phi = 1e-5;
  double sigma_cap = 0.208;
  double eps_in_init = 1e-6;
  double eps_in_min = 1e-14;
  double eps_in_max = 1e-4;
  double eps_in_shrink_early = 0.75;
  double eps_in_shrink_late = 0.375;
  double eps_in_relax = 1.5;
  double late_phase_gamma = 1e-3;
  double backtrack_factor = 0.95;
  int backtrack_max_trials = 40;
  LinearSolver solver = LinearSolver::MRNE;
  KrylovConfig krylov;  // method is taken from `solver`; tol from the eps_in schedule
  double drop_tol = kDefaultDropTol;
  // Retry with kFallbackDropTol when the factorization reports an
  // indefinite pivot.
  bool drop_tol_fallback = true;
  double initial_tol = 1e-8;  // Krylov tolerance of the starting-point solves
  double initial_floor = 1e-2;
  // Measure the inner residual of the unscaled system, i.e. weight the
  // scaled residual by the row norms.
  bool unscaled_inner_residual = true;
  // Tighten the inner tolerance so the absolute residual stays below
  // eps_in * max(||b||, 1) even when the right-hand side is much larger.
  bool inner_tol_relative_to_b = true;
  // CGNE/MRNE iteration limit as a multiple of m when krylov.max_iter is 0.
  int ne_max_iter_factor = 10;

  void validate() const {
    if (!(eta >= 0.9 && eta < 1.0)) throw std::invalid_argument("IpmConfig: eta must lie in [0.9, 1)");
    if (!(sigma_cap >= 0.0 && sigma_cap < 1.0)) throw std::invalid_argument("IpmConfig: sigma_cap must lie in [0, 1)");
    if (!(eps_out > 0.0)) throw std::invalid_argument("IpmConfig: eps_out must be positive");
    if (max_ipm_iter < 1) throw std::invalid_argument("IpmConfig: max_ipm_iter must be >= 1");
    if (!(eps_in_min > 0.0 && eps_in_min <= eps_in_max)) throw std::invalid_argument("IpmConfig: bad eps_in bounds");
    if (!(phi >= 0.0 && phi <= 1.0)) throw std::invalid_argument("IpmConfig: phi must lie in [0, 1]");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) throw std::invalid_argument("IpmConfig: bad backtrack factor");
    if (solver != LinearSolver::LDLT) krylov.inner.validate();
  }
};

struct Iterate {
  Vector x, y, s;
  double mu = 0.0;
  double gamma = 0.0;
};

inline double duality_measure(std::span<const double> x, std::span<const double> s) {
  return x.empty() ? 0.0 : vec::dot(x, s) / static_cast<double>(x.size());
}

/// max{ ||b - A x|| / max(||b||,1), ||c - s - A^T y|| / max(||c||,1) }
inline double infeasibility(const CsrMatrix& a, std::span<const double> b, std::span<const double> c,
                            std::span<const double> x, std::span<const double> y,
                            std::span<const double> s) {
  Vector rp = matvec(a, x);
  for (std::size_t i = 0; i < rp.size(); ++i) rp[i] = b[i] - rp[i];
  Vector rd = matvec_transpose(a, y);
  for (std::size_t j = 0; j < rd.size(); ++j) rd[j] = c[j] - s[j] - rd[j];
  const double p = vec::norm2(rp) / std::max(vec::norm2(b), 1.0);
  const double d = vec::norm2(rd) / std::max(vec::norm2(c), 1.0);
  return std::max(p, d);
}

/// max{ mu, infeasibility }
inline double error_measure(const CsrMatrix& a, std::span<const double> b, std::span<const double> c,
                            std::span<const double> x, std::span<const double> y,
                            std::span<const double> s) {
  return std::max(duality_measure(x, s), infeasibility(a, b, c, x, y, s));
}

/// Largest step in [0, 1] keeping v + alpha dv >= 0 (no eta applied).
inline double max_step(std::span<const double> v, std::span<const double> dv) {
  double a = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  }
  return a;
}

struct StepPair {
  double alpha_p = 0.0;
  double alpha_d = 0.0;
};

inline StepPair step_lengths(std::span<const double> x, std::span<const double> dx,
                             std::span<const double> s, std::span<const double> ds, double eta) {
  return {eta * max_step(x, dx), eta * max_step(s, ds)};
}

inline double choose_sigma(double mu, double mu_af, double gamma, const IpmConfig& cfg) {
  if (gamma > cfg.late_phase_gamma) {
    const double r = mu_af / mu;
    return std::min(cfg.sigma_cap, r * r);
  }
  return std::min(cfg.sigma_cap, 10.0 * gamma);
}

struct BacktrackResult {
  StepPair step;
  int trials = 0;
  bool failed = false;
};

/// Shrinks both lengths together until
///   min_i (x_i + ap dx_i)(s_i + ad ds_i) >= phi (x + ap dx)^T (s + ad ds) / n.
inline BacktrackResult centrality_backtrack(std::span<const double> x, std::span<const double> dx,
                                            std::span<const double> s, std::span<const double> ds,
                                            StepPair trial, const IpmConfig& cfg) {
  const std::size_t n = x.size();
  BacktrackResult out{trial, 0, false};
  auto ok = [&](const StepPair& a) {
    double lo = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (x[i] + a.alpha_p * dx[i]) * (s[i] + a.alpha_d * ds[i]);
      lo = std::min(lo, v);
      sum += v;
    }
    return lo >= cfg.phi * sum / static_cast<double>(n);
  };
  if (n == 0 || ok(out.step)) return out;
  for (int t = 1; t <= cfg.backtrack_max_trials; ++t) {
    out.step.alpha_p *= cfg.backtrack_factor;
    out.step.alpha_d *= cfg.backtrack_factor;
    out.trials = t;
    if (ok(out.step)) return out;
  }
  out.failed = true;
  return out;
}

inline double adapt_inner_tolerance(double eps_in, double gamma, bool last_solve_converged,
                                    const IpmConfig& cfg) {
  double e = eps_in;
  if (!last_solve_converged) e *= cfg.eps_in_relax;
  const double lg = std::log10(gamma);
  if (lg <= -3.0) e *= cfg.eps_in_shrink_late;
  else if (lg <= 1.0) e *= cfg.eps_in_shrink_early;
  return std::clamp(e, cfg.eps_in_min, cfg.eps_in_max);
}

/// Standard Mehrotra starting point: least-norm x solving A x = b, least-
/// squares dual slack s = c - A^T y, both shifted into the positive orthant.
inline Iterate initial_point(const CsrMatrix& a, std::span<const double> b,
                             std::span<const double> c, const IpmConfig& cfg = {}) {
  const auto n = static_cast<std::size_t>(a.cols());
  const auto m = static_cast<std::size_t>(a.rows());
  KrylovConfig kc;
  kc.method = KrylovMethod::ABGMRES;
  kc.tol = cfg.initial_tol;
  kc.inner = cfg.krylov.inner;
  Iterate it;
  it.x.assign(n, 0.0);
  it.y.assign(m, 0.0);
  it.s.assign(c.begin(), c.end());
  if (m > 0) {
    it.x = ab_gmres_solve(a, b, kc).dw;
    const Vector ac = matvec(a, c);
    auto res = ab_gmres_solve(a, ac, kc);
    it.y = std::move(res.dy);
    for (std::size_t j = 0; j < n; ++j) it.s[j] = c[j] - res.dw[j];
  }
  if (!vec::all_finite(it.x) || !vec::all_finite(it.s)) {
    std::fill(it.x.begin(), it.x.end(), 1.0);
    std::fill(it.s.begin(), it.s.end(), 1.0);
    std::fill(it.y.begin(), it.y.end(), 0.0);
  }
  if (n > 0) {
    const double xmin = *std::min_element(it.x.begin(), it.x.end());
    const double smin = *std::min_element(it.s.begin(), it.s.end());
    const double dx = std::max(-1.5 * xmin, 0.0);
    const double ds = std::max(-1.5 * smin, 0.0);
    for (auto& v : it.x) v += dx;
    for (auto& v : it.s) v += ds;
    const double xs = vec::dot(it.x, it.s);
    double sx = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sx += it.x[j];
      ss += it.s[j];
    }
    const double hx = ss > 0.0 ? 0.5 * xs / ss : 0.0;
    const double hs = sx > 0.0 ? 0.5 * xs / sx : 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      it.x[j] = std::max(it.x[j] + hx, cfg.initial_floor);
      it.s[j] = std::max(it.s[j] + hs, cfg.initial_floor);
    }
  }
  it.mu = duality_measure(it.x, it.s);
  it.gamma = error_measure(a, b, c, it.x, it.y, it.s);
  return it;
}

enum class IpmStatus { Optimal, IterationLimit, NumericalFailure };

inline std::string_view to_string(IpmStatus s) {
  switch (s) {
    case IpmStatus::Optimal:
      return "Optimal";
    case IpmStatus::IterationLimit:
      return "IterationLimit";
    case IpmStatus::NumericalFailure:
      return "NumericalFailure";
  }
  return "?";
}

struct StepRecord {
  int step = 0;
  double mu = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
  double alpha_p = 0.0;
  double alpha_d = 0.0;
  double eps_in = 0.0;
  bool shortcut = false;          // affine step taken alone
  bool backtrack_failed = false;
  double drop_tol = 0.0;          // LDLT only
  Index dropped_pivots = 0;       // LDLT only
  SolveReport predictor;
  std::optional<SolveReport> corrector;
  double wall_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<StepRecord> steps;

  Index total_krylov_iterations() const {
    Index k = 0;
    for (const auto& s : steps) {
      k += s.predictor.iterations;
      if (s.corrector) k += s.corrector->iterations;
    }
    return k;
  }
};

/// Everything an observer may want to inspect at one step, before the
/// iterate is updated. Directions are in the (zero-row/column reduced)
/// problem handed to the method.
struct StepInfo {
  int step = 0;
  const CsrMatrix* a = nullptr;
  std::span<const double> b, c;
  const Iterate* iterate = nullptr;
  std::span<const double> dx_af, dy_af, ds_af;
  std::span<const double> dx, dy, ds;  // combined direction
  double sigma = 0.0;
  double mu = 0.0;
  bool shortcut = false;
};

struct IpmResult {
  IpmStatus status = IpmStatus::NumericalFailure;
  Iterate iterate;  // in the coordinates of the problem passed to solve()
  ConvergenceTrace trace;
  int iterations = 0;
  double objective = 0.0;  // c^T x of the problem passed to solve()
  std::string message;
};

namespace detail {

struct Direction {
  Vector dw, dy;
  SolveReport report;
};

struct NormalSolver {
  const IpmConfig& cfg;
  const ScaledSystem& sys;
  double b_ref = 1.0;  // max(||b||, 1)
  std::optional<LdltFactor> factor;
  std::string error;

  // Factor once per step; returns false if the baseline cannot proceed.
  bool prepare() {
    if (cfg.solver != LinearSolver::LDLT) return true;
    const DenseMatrix mat = form_normal_matrix(sys.op);
    try {
      factor = ldlt_drop_factor(mat, cfg.drop_tol);
    } catch (const IndefiniteMatrixError& e) {
      if (!cfg.drop_tol_fallback || cfg.drop_tol >= kFallbackDropTol) {
        error = e.what();
        return false;
      }
      try {
        factor = ldlt_drop_factor(mat, kFallbackDropTol);
      } catch (const IndefiniteMatrixError& e2) {
        error = e2.what();
        return false;
      }
    }
    return true;
  }

  Direction solve(std::span<const double> f, double tol) const {
    Direction d;
    if (cfg.solver == LinearSolver::LDLT) {
      d.dy = ldlt_drop_solve(*factor, f);
      d.dw.assign(static_cast<std::size_t>(sys.cols()), 0.0);
      sys.op.apply_transpose(d.dy, d.dw);
      Vector r(f.size());
      const double fn = vec::norm2(f);
      const double res = true_residual(sys.op, f, d.dw, r);
      d.report.relative_residual = fn > 0.0 ? res / fn : res;
      d.report.converged = std::isfinite(d.report.relative_residual);
      d.report.mv_count = 2;
      d.report.residual_history = {1.0, d.report.relative_residual};
      return d;
    }
    KrylovConfig kc = cfg.krylov;
    kc.tol = tol;
    kc.method = cfg.solver == LinearSolver::CGNE   ? KrylovMethod::CGNE
                : cfg.solver == LinearSolver::MRNE ? KrylovMethod::MRNE
                                                   : KrylovMethod::ABGMRES;
    if (kc.max_iter == 0 && kc.method != KrylovMethod::ABGMRES) {
      kc.max_iter = std::max<Index>(sys.rows(), 1) * std::max(cfg.ne_max_iter_factor, 1);
    }
    std::span<const double> w;
    if (cfg.unscaled_inner_residual) w = sys.rho;
    if (cfg.inner_tol_relative_to_b) {
      const double fn = detail::weighted_norm(f, w);
      if (fn > b_ref) kc.tol = std::max(tol * b_ref / fn, cfg.eps_in_min);
    }
    auto r = krylov_solve(sys.op, f, kc, w);
    d.dw = std::move(r.dw);
    d.dy = std::move(r.dy);
    d.report = std::move(r.report);
    return d;
  }
};

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

using StepObserver = std::function<void(const StepInfo&)>;

/// Runs the method on  min c^T x, A x = b, x >= 0. All-zero rows and columns
/// are removed first and re-inserted (with zero values) in the result.
inline IpmResult ipm_solve(const CsrMatrix& a_full, std::span<const double> b_full,
                           std::span<const double> c_full, const IpmConfig& cfg = {},
                           const StepObserver& observer = {}) {
  cfg.validate();
  const ReducedSystem red = remove_zero_rows_cols(a_full, b_full, c_full);
  const CsrMatrix& a = red.a;
  const Vector& b = red.b;
  const Vector& c = red.c;
  const auto n = static_cast<std::size_t>(a.cols());

  IpmResult out;
  Iterate it = initial_point(a, b, c, cfg);
  double eps_in = std::clamp(cfg.eps_in_init, cfg.eps_in_min, cfg.eps_in_max);
  bool last_converged = true;
  out.status = IpmStatus::IterationLimit;

  auto finish = [&]() {
    it.mu = duality_measure(it.x, it.s);
    it.gamma = error_measure(a, b, c, it.x, it.y, it.s);
    out.iterate.x = red.map.expand_cols(it.x);
    out.iterate.y = red.map.expand_rows(it.y);
    out.iterate.s.assign(c_full.begin(), c_full.end());
    for (std::size_t k = 0; k < red.map.kept_cols.size(); ++k) out.iterate.s[red.map.kept_cols[k]] = it.s[k];
    out.iterate.mu = it.mu;
    out.iterate.gamma = it.gamma;
    out.objective = vec::dot(c_full, out.iterate.x);
    return out;
  };

  if (n == 0) {
    out.status = IpmStatus::Optimal;
    return finish();
  }

  for (int k = 0; k < cfg.max_ipm_iter; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    it.mu = duality_measure(it.x, it.s);
    it.gamma = error_measure(a, b, c, it.x, it.y, it.s);
    if (it.gamma <= cfg.eps_out) {
      out.status = IpmStatus::Optimal;
      return finish();
    }
    if (k > 0) eps_in = adapt_inner_tolerance(eps_in, it.gamma, last_converged, cfg);

    StepRecord rec;
    rec.step = k + 1;
    rec.mu = it.mu;
    rec.gamma = it.gamma;
    rec.eps_in = eps_in;

    const ScaledSystem sys = build_scaled_system(a, it.x, it.s);
    detail::NormalSolver solver{cfg, sys, std::max(vec::norm2(b), 1.0), std::nullopt, {}};
    if (!solver.prepare()) {
      out.status = IpmStatus::NumericalFailure;
      out.message = "step " + std::to_string(k + 1) + ": " + solver.error;
      out.trace.steps.push_back(rec);
      return finish();
    }
    if (solver.factor) {
      rec.drop_tol = solver.factor->drop_tol;
      rec.dropped_pivots = solver.factor->n - solver.factor->kept_count();
    }

    Vector rd = matvec_transpose(a, it.y);
    for (std::size_t j = 0; j < n; ++j) rd[j] = c[j] - it.s[j] - rd[j];

    const Vector f_af = predictor_rhs(sys, b, rd);
    detail::Direction pred = solver.solve(f_af, eps_in);
    rec.predictor = pred.report;
    const Vector dy_af = unscale_dual(sys, pred.dy);
    const PrimalDualStep st_af = recover_predictor(sys, pred.dw, rd, it.x);

    bool converged = pred.report.converged;
    auto fail = [&](const std::string& why) {
      out.status = IpmStatus::NumericalFailure;
      out.message = "step " + std::to_string(k + 1) + ": " + why;
      rec.wall_ms = detail::elapsed_ms(t0);
      out.trace.steps.push_back(rec);
      return finish();
    };
    if (!vec::all_finite(st_af.dx) || !vec::all_finite(st_af.ds) || !vec::all_finite(dy_af)) {
      return fail("non-finite predictor direction");
    }

    Vector dx, dy, ds;
    const double ap_raw = max_step(it.x, st_af.dx);
    const double ad_raw = max_step(it.s, st_af.ds);
    double sigma = 0.0;
    if (std::min(ap_raw, ad_raw) >= 1.0) {
      rec.shortcut = true;
      dx = st_af.dx;
      dy = dy_af;
      ds = st_af.ds;
    } else {
      const double ap = cfg.eta * ap_raw, ad = cfg.eta * ad_raw;
      double xs_af = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xs_af += (it.x[j] + ap * st_af.dx[j]) * (it.s[j] + ad * st_af.ds[j]);
      }
      const double mu_af = xs_af / static_cast<double>(n);
      sigma = choose_sigma(it.mu, mu_af, it.gamma, cfg);
      const Vector f_cc = corrector_rhs(sys, st_af.dx, st_af.ds, sigma, it.mu, it.s);
      detail::Direction corr = solver.solve(f_cc, eps_in);
      rec.corrector = corr.report;
      converged = converged && corr.report.converged;
      const Vector dy_cc = unscale_dual(sys, corr.dy);
      const PrimalDualStep st_cc = recover_corrector(sys, corr.dw, st_af.dx, st_af.ds, sigma, it.mu, it.s);
      dx = st_af.dx;
      dy = dy_af;
      ds = st_af.ds;
      vec::axpy(1.0, st_cc.dx, dx);
      vec::axpy(1.0, dy_cc, dy);
      vec::axpy(1.0, st_cc.ds, ds);
    }
    rec.sigma = sigma;
    last_converged = converged;
    if (!vec::all_finite(dx) || !vec::all_finite(ds) || !vec::all_finite(dy)) {
      return fail("non-finite search direction");
    }

    if (observer) {
      StepInfo info;
      info.step = k + 1;
      info.a = &a;
      info.b = b;
      info.c = c;
      info.iterate = &it;
      info.dx_af = st_af.dx;
      info.dy_af = dy_af;
      info.ds_af = st_af.ds;
      info.dx = dx;
      info.dy = dy;
      info.ds = ds;
      info.sigma = sigma;
      info.mu = it.mu;
      info.shortcut = rec.shortcut;
      observer(info);
    }

    const StepPair trial = step_lengths(it.x, dx, it.s, ds, cfg.eta);
    const BacktrackResult bt = centrality_backtrack(it.x, dx, it.s, ds, trial, cfg);
    rec.alpha_p = bt.step.alpha_p;
    rec.alpha_d = bt.step.alpha_d;
    rec.backtrack_failed = bt.failed;
    vec::axpy(bt.step.alpha_p, dx, it.x);
    vec::axpy(bt.step.alpha_d, ds, it.s);
    vec::axpy(bt.step.alpha_d, dy, it.y);
    for (std::size_t j = 0; j < n; ++j) {
      if (!(it.x[j] > 0.0) || !(it.s[j] > 0.0)) return fail("iterate left the interior");
    }
    rec.wall_ms = detail::elapsed_ms(t0);
    out.trace.steps.push_back(rec);
    out.iterations = k + 1;
  }
  it.gamma = error_measure(a, b, c, it.x, it.y, it.s);
  if (it.gamma <= cfg.eps_out) out.status = IpmStatus::Optimal;
  return finish();
}

inline IpmResult ipm_solve(const StandardFormLp& lp, const IpmConfig& cfg = {},
                           const StepObserver& observer = {}) {
  return ipm_solve(lp.a, lp.b, lp.c, cfg, observer);
}

}  // namespace ipk
