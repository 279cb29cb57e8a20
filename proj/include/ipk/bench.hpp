#pragma once

// Benchmark plumbing: random rank-deficient LP generation, suite runs with
// CSV output, and Dolan-More performance profiles.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ipk/common.hpp"
#include "ipk/ipm.hpp"
#include "ipk/mps.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

// ---------------------------------------------------------------------------
// Generation.

// How the nonzero singular values are spread between 1 and 1/cond.
enum class Spread { Linear, Geometric };

inline std::string_view to_string(Spread s) { return s == Spread::Linear ? "linear" : "geometric"; }

inline std::optional<Spread> spread_from_string(std::string_view s) {
  if (s == "linear") return Spread::Linear;
  if (s == "geometric") return Spread::Geometric;
  return std::nullopt;
}

struct GenSpec {
  Index m = 100;
  Index n = 300;
  Index rank = 100;
  double cond = 1e2;
  double density = 1.0;
  std::uint64_t seed = 1;
  Spread spread = Spread::Linear;

  void validate() const {
    if (!(rank >= 1 && rank <= m && m <= n)) throw std::invalid_argument("GenSpec: need 1 <= rank <= m <= n");
    if (!(cond >= 1.0)) throw std::invalid_argument("GenSpec: cond must be >= 1");
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("GenSpec: density must lie in (0, 1]");
  }
};

namespace detail {

/// splitmix64 seeding into xoshiro256**; portable, so generated problems are
/// identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& s : s_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

  Index below(Index k) { return static_cast<Index>(next() % static_cast<std::uint64_t>(k)); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// rows x cols matrix (column-major) with orthonormal columns.
inline std::vector<Vector> random_orthonormal(Index rows, Index cols, Rng& rng) {
  std::vector<Vector> q(static_cast<std::size_t>(cols), Vector(static_cast<std::size_t>(rows)));
  for (auto& col : q) {
    for (;;) {
      for (double& v : col) v = rng.normal();
      // Two passes of Gram-Schmidt keep the columns orthonormal to rounding.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto* prev = q.data(); prev != &col; ++prev) vec::axpy(-vec::dot(*prev, col), *prev, col);
      }
      const double nrm = vec::norm2(col);
      if (nrm > 1e-8) {
        vec::scale(1.0 / nrm, col);
        break;
      }
    }
  }
  return q;
}

}  // namespace detail

/// Singular values from 1 down to 1/cond, evenly spaced on a linear or a
/// log scale.
inline Vector singular_value_profile(Index rank, double cond, Spread spread = Spread::Linear) {
  Vector s(static_cast<std::size_t>(rank));
  for (Index i = 0; i < rank; ++i) {
    const double t = rank > 1 ? static_cast<double>(i) / static_cast<double>(rank - 1) : 0.0;
    s[i] = spread == Spread::Linear ? 1.0 - (1.0 - 1.0 / cond) * t : std::pow(cond, -t);
  }
  if (rank > 1) s.back() = 1.0 / cond;
  return s;
}

/// Random standard-form LP whose matrix has exactly the prescribed singular
/// values. Dense problems use U diag(sigma) V^T with random orthonormal U, V;
/// sparser ones start from [diag(sigma) 0] and apply random row and column
/// Givens rotations until the requested density is reached. b = A x for a
/// random x >= 0, so the problem is feasible; c > 0 keeps it bounded.
inline StandardFormLp generate_problem(const GenSpec& spec) {
  spec.validate();
  detail::Rng rng(spec.seed);
  const Index m = spec.m, n = spec.n, r = spec.rank;
  const Vector sigma = singular_value_profile(r, spec.cond, spec.spread);
  std::vector<double> a(static_cast<std::size_t>(m * n), 0.0);  // row-major
  auto at = [&](Index i, Index j) -> double& { return a[static_cast<std::size_t>(i * n + j)]; };

  if (spec.density >= 1.0) {
    const auto u = detail::random_orthonormal(m, r, rng);
    const auto v = detail::random_orthonormal(n, r, rng);
    for (Index k = 0; k < r; ++k) {
      for (Index i = 0; i < m; ++i) {
        const double uik = sigma[k] * u[k][i];
        for (Index j = 0; j < n; ++j) at(i, j) += uik * v[k][j];
      }
    }
  } else {
    for (Index k = 0; k < r; ++k) at(k, k) = sigma[k];
    const auto target = static_cast<Index>(std::ceil(spec.density * static_cast<double>(m * n)));
    Index nnz = r;
    auto count = [&]() {
      Index c = 0;
      for (double v : a) c += v != 0.0;
      return c;
    };
    // Each rotation mixes two rows (or columns); the angle is bounded away
    // from multiples of pi/2 so the rotation actually creates fill.
    while (nnz < target) {
      const double theta = (0.1 + 0.8 * rng.uniform()) * std::numbers::pi / 2.0;
      const double c = std::cos(theta), s = std::sin(theta);
      if (rng.uniform() < 0.5) {
        const Index i = rng.below(m);
        Index k = rng.below(m - 1);
        if (k >= i) ++k;
        for (Index j = 0; j < n; ++j) {
          const double p = at(i, j), q = at(k, j);
          at(i, j) = c * p - s * q;
          at(k, j) = s * p + c * q;
        }
      } else {
        const Index j = rng.below(n);
        Index l = rng.below(n - 1);
        if (l >= j) ++l;
        for (Index i = 0; i < m; ++i) {
          const double p = at(i, j), q = at(i, l);
          at(i, j) = c * p - s * q;
          at(i, l) = s * p + c * q;
        }
      }
      nnz = count();
    }
  }

  std::vector<Triplet> t;
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (at(i, j) != 0.0) t.push_back({i, j, at(i, j)});
    }
  }
  StandardFormLp lp;
  char name[160];
  std::snprintf(name, sizeof name, "gen_m%td_n%td_r%td_k%g_d%g_%s_s%llu", m, n, r, spec.cond, spec.density,
                spec.spread == Spread::Linear ? "lin" : "geo", static_cast<unsigned long long>(spec.seed));
  lp.name = name;
  lp.a = CsrMatrix(m, n, std::move(t));
  Vector x(static_cast<std::size_t>(n), 0.0);
  for (auto& v : x) {
    if (rng.uniform() < 0.5) v = rng.uniform();
  }
  lp.b = matvec(lp.a, x);
  lp.c.resize(static_cast<std::size_t>(n));
  for (auto& v : lp.c) v = rng.uniform();
  lp.transform.original_cols = lp.transform.standard_cols = n;
  lp.transform.original_rows = lp.transform.standard_rows = m;
  return lp;
}

/// The standard-form problem as a general LP (equality rows, x >= 0), for
/// writing it out as MPS.
inline LpProblem as_lp_problem(const StandardFormLp& lp) {
  LpProblem p;
  p.name = lp.name;
  p.objective_name = "COST";
  p.a = lp.a;
  p.b = lp.b;
  p.row_lower = lp.b;
  p.row_upper = lp.b;
  p.c = lp.c;
  p.row_types.assign(static_cast<std::size_t>(lp.rows()), RowType::EQ);
  p.lower.assign(static_cast<std::size_t>(lp.cols()), 0.0);
  p.upper.assign(static_cast<std::size_t>(lp.cols()), kInf);
  for (Index i = 0; i < lp.rows(); ++i) p.row_names.push_back("R" + std::to_string(i + 1));
  for (Index j = 0; j < lp.cols(); ++j) p.col_names.push_back("C" + std::to_string(j + 1));
  return p;
}

// ---------------------------------------------------------------------------
// Records and CSV.

struct BenchRecord {
  std::string problem;
  Index m = 0;
  Index n = 0;
  std::string solver;
  std::string status;
  int ipm_iters = 0;
  Index krylov_iters = 0;
  double wall_ms = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();

  bool solved() const { return status == "Optimal"; }
};

inline bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline bool operator==(const BenchRecord& a, const BenchRecord& b) {
  return a.problem == b.problem && a.m == b.m && a.n == b.n && a.solver == b.solver && a.status == b.status &&
         a.ipm_iters == b.ipm_iters && a.krylov_iters == b.krylov_iters && same_double(a.wall_ms, b.wall_ms) &&
         same_double(a.gamma, b.gamma) && same_double(a.objective, b.objective);
}

inline constexpr const char* kBenchHeader = "problem,m,n,solver,status,ipm_iters,krylov_iters,wall_ms,gamma,objective";
inline constexpr const char* kTraceHeader =
    "step,mu,gamma,sigma,alpha_p,alpha_d,eps_in,pred_iters,corr_iters,wall_ms";
inline constexpr const char* kProfileHeader = "solver,tau,pi";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double parse_csv_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace detail

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kBenchHeader << '\n';
  for (const auto& r : records) {
    os << detail::csv_field(r.problem) << ',' << r.m << ',' << r.n << ',' << detail::csv_field(r.solver) << ','
       << r.status << ',' << r.ipm_iters << ',' << r.krylov_iters << ',' << detail::fmt_double(r.wall_ms) << ','
       << detail::fmt_double(r.gamma) << ',' << detail::fmt_double(r.objective) << '\n';
  }
}

inline std::vector<BenchRecord> read_bench_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchHeader) throw ParseError("unexpected CSV header", 1);
  std::vector<BenchRecord> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() != 10) throw ParseError("expected 10 fields", lineno);
    try {
      BenchRecord r;
      r.problem = f[0];
      r.m = std::stoll(f[1]);
      r.n = std::stoll(f[2]);
      r.solver = f[3];
      r.status = f[4];
      r.ipm_iters = std::stoi(f[5]);
      r.krylov_iters = std::stoll(f[6]);
      r.wall_ms = detail::parse_csv_double(f[7]);
      r.gamma = detail::parse_csv_double(f[8]);
      r.objective = detail::parse_csv_double(f[9]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("bad numeric field", lineno);
    }
  }
  return out;
}

inline void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace) {
  os << kTraceHeader << '\n';
  for (const auto& s : trace.steps) {
    os << s.step << ',' << detail::fmt_double(s.mu) << ',' << detail::fmt_double(s.gamma) << ','
       << detail::fmt_double(s.sigma) << ',' << detail::fmt_double(s.alpha_p) << ','
       << detail::fmt_double(s.alpha_d) << ',' << detail::fmt_double(s.eps_in) << ',' << s.predictor.iterations
       << ',' << (s.corrector ? s.corrector->iterations : 0) << ',' << detail::fmt_double(s.wall_ms) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Suites.

struct ProblemSource {
  std::string name;
  std::function<StandardFormLp()> load;
};

struct SolverSpec {
  std::string id;
  std::function<IpmResult(const StandardFormLp&)> run;
};

inline SolverSpec ipm_solver(std::string id, IpmConfig cfg) {
  return {std::move(id), [cfg](const StandardFormLp& lp) { return ipm_solve(lp, cfg); }};
}

struct SuiteOptions {
  int repeat = 1;  // wall time is the median over this many runs
  int jobs = 1;
};

/// Runs every solver on every problem. Failures of any kind become records;
/// the output order is problem-major and independent of `jobs`.
inline std::vector<BenchRecord> run_suite(const std::vector<ProblemSource>& problems,
                                          const std::vector<SolverSpec>& solvers,
                                          const SuiteOptions& opt = {}) {
  const std::size_t np = problems.size(), ns = solvers.size();
  std::vector<BenchRecord> out(np * ns);
  std::atomic<std::size_t> next{0};
  const int repeat = std::max(opt.repeat, 1);

  auto work = [&]() {
    for (;;) {
      const std::size_t p = next.fetch_add(1);
      if (p >= np) return;
      std::optional<StandardFormLp> lp;
      std::string load_status;
      try {
        lp = problems[p].load();
      } catch (const InfeasibleError&) {
        load_status = "Infeasible";
      } catch (const std::exception&) {
        load_status = "ParseError";
      }
      for (std::size_t s = 0; s < ns; ++s) {
        BenchRecord& rec = out[p * ns + s];
        rec.problem = problems[p].name;
        rec.solver = solvers[s].id;
        if (!lp) {
          rec.status = load_status;
          continue;
        }
        rec.m = lp->rows();
        rec.n = lp->cols();
        std::vector<double> times;
        for (int k = 0; k < repeat; ++k) {
          const auto t0 = std::chrono::steady_clock::now();
          try {
            IpmResult res = solvers[s].run(*lp);
            times.push_back(detail::elapsed_ms(t0));
            rec.status = std::string(to_string(res.status));
            rec.ipm_iters = res.iterations;
            rec.krylov_iters = res.trace.total_krylov_iterations();
            rec.gamma = res.iterate.gamma;
            if (res.iterate.x.size() == static_cast<std::size_t>(lp->cols())) {
              rec.objective = lp->original_objective(res.iterate.x);
            }
          } catch (const InfeasibleError&) {
            times.push_back(detail::elapsed_ms(t0));
            rec.status = "Infeasible";
          } catch (const std::exception&) {
            times.push_back(detail::elapsed_ms(t0));
            rec.status = "NumericalFailure";
          }
        }
        std::sort(times.begin(), times.end());
        const std::size_t h = times.size() / 2;
        rec.wall_ms = times.size() % 2 == 1 ? times[h] : 0.5 * (times[h - 1] + times[h]);
      }
    }
  };
  const int jobs = std::clamp<int>(opt.jobs, 1, static_cast<int>(std::max<std::size_t>(np, 1)));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Performance profiles.

enum class ProfileMetric { Time, IpmIterations, KrylovIterations };

struct ProfilePoint {
  std::string solver;
  double tau = 0.0;
  double pi = 0.0;
};

struct Profile {
  std::vector<ProfilePoint> points;          // solver-major, tau ascending
  std::vector<std::string> excluded;         // problems no solver solved
  std::size_t problems_used = 0;
};

inline constexpr double kProfileMinCost = 1e-9;

/// pi_s(tau) = |{p : log2(t_ps / min_s t_ps) <= tau}| / #problems, evaluated
/// at tau = 0 and at every breakpoint of any solver. Unsolved pairs have an
/// infinite ratio and never count.
inline Profile performance_profile(const std::vector<BenchRecord>& records,
                                   ProfileMetric metric = ProfileMetric::Time) {
  auto cost = [&](const BenchRecord& r) {
    double v = 0.0;
    switch (metric) {
      case ProfileMetric::Time: v = r.wall_ms; break;
      case ProfileMetric::IpmIterations: v = r.ipm_iters; break;
      case ProfileMetric::KrylovIterations: v = static_cast<double>(r.krylov_iters); break;
    }
    return std::max(v, kProfileMinCost);
  };
  std::vector<std::string> solvers, problems;
  for (const auto& r : records) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) solvers.push_back(r.solver);
    if (std::find(problems.begin(), problems.end(), r.problem) == problems.end()) problems.push_back(r.problem);
  }
  if (solvers.empty()) throw std::invalid_argument("performance_profile: no records");
  std::map<std::pair<std::string, std::string>, double> t;  // (problem, solver) -> cost, solved only
  for (const auto& r : records) {
    if (r.solved()) t[{r.problem, r.solver}] = cost(r);
  }
  Profile prof;
  std::map<std::string, std::vector<double>> log_ratio;  // per solver, finite only
  for (const auto& p : problems) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : solvers) {
      auto it = t.find({p, s});
      if (it != t.end()) best = std::min(best, it->second);
    }
    if (!std::isfinite(best)) {
      prof.excluded.push_back(p);
      continue;
    }
    ++prof.problems_used;
    for (const auto& s : solvers) {
      auto it = t.find({p, s});
      if (it != t.end()) log_ratio[s].push_back(std::log2(it->second / best));
    }
  }
  std::set<double> taus{0.0};
  for (auto& [s, v] : log_ratio) {
    std::sort(v.begin(), v.end());
    taus.insert(v.begin(), v.end());
  }
  const double total = static_cast<double>(prof.problems_used);
  for (const auto& s : solvers) {
    const auto& v = log_ratio[s];
    for (double tau : taus) {
      const auto cnt = std::upper_bound(v.begin(), v.end(), tau) - v.begin();
      prof.points.push_back({s, tau, total > 0 ? static_cast<double>(cnt) / total : 0.0});
    }
  }
  return prof;
}

inline void write_profile_csv(std::ostream& os, const Profile& prof) {
  os << kProfileHeader << '\n';
  for (const auto& p : prof.points) {
    os << detail::csv_field(p.solver) << ',' << detail::fmt_double(p.tau) << ',' << detail::fmt_double(p.pi) << '\n';
  }
}

}  // namespace ipk
