#include <CLI11.hpp>
#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ipk/bench.hpp"
#include "ipk/ipm.hpp"
#include "ipk/mps.hpp"

namespace fs = std::filesystem;
using namespace ipk;

namespace {

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kSolverFailure = 3 };

bool is_mps_path(const fs::path& p) {
  const std::string s = p.filename().string();
  auto ends = [&](const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".mps") || ends(".mps.gz") || ends(".MPS") || ends(".QPS");
}

std::string problem_name(const fs::path& p) {
  std::string s = p.filename().string();
  for (const char* suf : {".gz", ".mps", ".MPS", ".QPS"}) {
    const std::string x(suf);
    if (s.size() > x.size() && s.compare(s.size() - x.size(), x.size(), x) == 0) s.erase(s.size() - x.size());
  }
  return s;
}

// A directory of MPS files, or a text file listing one path per line.
std::vector<fs::path> collect_problems(const std::string& arg) {
  std::vector<fs::path> out;
  const fs::path root(arg);
  if (fs::is_directory(root)) {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_regular_file() && is_mps_path(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  if (is_mps_path(root)) return {root};
  std::ifstream in(root);
  if (!in) throw std::runtime_error("cannot open problem list " + arg);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    fs::path p(t);
    if (p.is_relative()) p = root.parent_path() / p;
    out.push_back(p);
  }
  return out;
}

void apply_solver_options(IpmConfig& cfg, double omega, int ell, double eps_out, int max_ipm) {
  cfg.krylov.inner.omega = omega;
  cfg.krylov.inner.ell = ell;
  cfg.eps_out = eps_out;
  cfg.max_ipm_iter = max_ipm;
}

int run_solve(const std::string& file, const std::string& method, double omega, int ell, double eps_out,
              int max_ipm, const std::string& trace_path) {
  const auto solver = linear_solver_from_string(method);
  if (!solver) {
    std::cerr << "unknown method: " << method << "\n";
    return kUsage;
  }
  IpmConfig cfg;
  cfg.solver = *solver;
  apply_solver_options(cfg, omega, ell, eps_out, max_ipm);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }

  LpProblem p;
  StandardFormLp lp;
  try {
    p = read_mps_file(file);
    lp = to_standard_form(p);
  } catch (const InfeasibleError& e) {
    std::cerr << file << ": " << e.what() << "\n";
    std::printf("status Infeasible\n");
    return kSolverFailure;
  } catch (const ParseError& e) {
    std::cerr << file << ":" << e.line() << ": " << e.what() << "\n";
    return kParse;
  } catch (const std::exception& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kParse;
  }

  IpmResult res;
  try {
    res = ipm_solve(lp, cfg);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    std::printf("status NumericalFailure\n");
    return kSolverFailure;
  }

  if (!trace_path.empty()) {
    std::ofstream os(trace_path);
    if (!os) {
      std::cerr << "cannot write " << trace_path << "\n";
      return kUsage;
    }
    write_trace_csv(os, res.trace);
  }

  std::printf("problem %s\n", p.name.empty() ? problem_name(file).c_str() : p.name.c_str());
  std::printf("size %td x %td (standard form)\n", lp.rows(), lp.cols());
  std::printf("method %s\n", std::string(to_string(cfg.solver)).c_str());
  std::printf("status %s\n", std::string(to_string(res.status)).c_str());
  std::printf("iterations %d\n", res.iterations);
  std::printf("krylov_iterations %td\n", static_cast<std::ptrdiff_t>(res.trace.total_krylov_iterations()));
  std::printf("gamma %.3e\n", res.iterate.gamma);
  std::printf("objective %.12g\n", lp.original_objective(res.iterate.x));
  if (!res.message.empty()) std::printf("message %s\n", res.message.c_str());
  return res.status == IpmStatus::Optimal ? kOk : kSolverFailure;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = detail::trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

int run_bench(const std::string& source, const std::string& methods, int repeat, int jobs, double omega,
              int ell, double eps_out, int max_ipm, const std::string& out_path) {
  std::vector<SolverSpec> solvers;
  for (const auto& id : split_list(methods)) {
    const auto s = linear_solver_from_string(id);
    if (!s) {
      std::cerr << "unknown method: " << id << "\n";
      return kUsage;
    }
    IpmConfig cfg;
    cfg.solver = *s;
    apply_solver_options(cfg, omega, ell, eps_out, max_ipm);
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << "\n";
      return kUsage;
    }
    solvers.push_back(ipm_solver(std::string(to_string(*s)), cfg));
  }
  if (solvers.empty()) {
    std::cerr << "no methods given\n";
    return kUsage;
  }

  std::vector<fs::path> files;
  try {
    files = collect_problems(source);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  std::vector<ProblemSource> problems;
  for (const auto& f : files) {
    problems.push_back({problem_name(f), [f]() { return to_standard_form(read_mps_file(f.string())); }});
  }

  SuiteOptions opt;
  opt.repeat = repeat;
  opt.jobs = jobs;
  const auto records = run_suite(problems, solvers, opt);

  if (out_path.empty() || out_path == "-") {
    write_bench_csv(std::cout, records);
  } else {
    std::ofstream os(out_path);
    if (!os) {
      std::cerr << "cannot write " << out_path << "\n";
      return kUsage;
    }
    write_bench_csv(os, records);
    for (const auto& r : records) {
      std::fprintf(stderr, "%-12s %-8s %-16s %3d %8.1f ms\n", r.problem.c_str(), r.solver.c_str(), r.status.c_str(),
                   r.ipm_iters, r.wall_ms);
    }
  }
  return kOk;
}

int run_gen(const GenSpec& spec, const std::string& out_path) {
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  const StandardFormLp lp = generate_problem(spec);

  const Vector flat = lp.a.to_dense();
  const Eigen::MatrixXd dense =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), lp.rows(),
                                                                                              lp.cols());
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(dense).singularValues();
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0);
  const double cond = rank > 0 ? sv(0) / sv(rank - 1) : 0.0;

  if (out_path.empty() || out_path == "-") {
    write_mps(std::cout, as_lp_problem(lp));
  } else {
    std::ofstream os(out_path);
    if (!os) {
      std::cerr << "cannot write " << out_path << "\n";
      return kUsage;
    }
    write_mps(os, as_lp_problem(lp));
  }
  std::fprintf(stderr, "%s: %td x %td, nnz %td, rank %td, cond %.3e\n", lp.name.c_str(), lp.rows(), lp.cols(),
               lp.a.nnz(), rank, cond);
  return kOk;
}

int run_profile(const std::string& in_path, const std::string& metric, const std::string& out_path) {
  ProfileMetric m;
  if (metric == "time") {
    m = ProfileMetric::Time;
  } else if (metric == "iters" || metric == "ipm_iters") {
    m = ProfileMetric::IpmIterations;
  } else if (metric == "krylov" || metric == "krylov_iters") {
    m = ProfileMetric::KrylovIterations;
  } else {
    std::cerr << "unknown metric: " << metric << "\n";
    return kUsage;
  }
  std::ifstream in(in_path);
  if (!in) {
    std::cerr << "cannot open " << in_path << "\n";
    return kUsage;
  }
  std::vector<BenchRecord> records;
  try {
    records = read_bench_csv(in);
  } catch (const ParseError& e) {
    std::cerr << in_path << ":" << e.line() << ": " << e.what() << "\n";
    return kParse;
  }
  Profile prof;
  try {
    prof = performance_profile(records, m);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }
  for (const auto& name : prof.excluded) std::cerr << "warning: no solver succeeded on " << name << ", excluded\n";
  if (out_path.empty() || out_path == "-") {
    write_profile_csv(std::cout, prof);
  } else {
    std::ofstream os(out_path);
    if (!os) {
      std::cerr << "cannot write " << out_path << "\n";
      return kUsage;
    }
    write_profile_csv(os, prof);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov-based interior-point LP solver"};
  app.require_subcommand(1);

  std::string method = "mrne", trace_path, file;
  double omega = 1.0, eps_out = 1e-8;
  int ell = 5, max_ipm = 99;
  auto* solve = app.add_subcommand("solve", "solve an LP given in MPS format");
  solve->add_option("file", file, "MPS file (.mps or .mps.gz)")->required();
  solve->add_option("--method", method, "cgne | mrne | abgmres | ldlt")->capture_default_str();
  solve->add_option("--omega", omega, "relaxation parameter of the inner sweeps")->capture_default_str();
  solve->add_option("--ell", ell, "number of inner sweeps")->capture_default_str();
  solve->add_option("--eps-out", eps_out, "outer tolerance on the error measure")->capture_default_str();
  solve->add_option("--max-ipm", max_ipm, "maximum number of interior-point steps")->capture_default_str();
  solve->add_option("--trace", trace_path, "write the per-step trace as CSV");

  std::string source, methods = "abgmres,cgne,mrne", bench_out;
  int repeat = 1, jobs = 1;
  auto* bench = app.add_subcommand("bench", "run several methods over a set of MPS files");
  bench->add_option("source", source, "directory of MPS files or a file listing them")->required();
  bench->add_option("--methods", methods, "comma separated methods")->capture_default_str();
  bench->add_option("--repeat", repeat, "runs per pair; the median time is reported")->capture_default_str();
  bench->add_option("--jobs", jobs, "problems solved in parallel")->capture_default_str();
  bench->add_option("--omega", omega, "relaxation parameter of the inner sweeps")->capture_default_str();
  bench->add_option("--ell", ell, "number of inner sweeps")->capture_default_str();
  bench->add_option("--eps-out", eps_out, "outer tolerance")->capture_default_str();
  bench->add_option("--max-ipm", max_ipm, "maximum number of interior-point steps")->capture_default_str();
  bench->add_option("--out", bench_out, "output CSV (stdout if omitted)");

  GenSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "generate a random rank-deficient LP");
  gen->add_option("--m", spec.m)->capture_default_str();
  gen->add_option("--n", spec.n)->capture_default_str();
  gen->add_option("--rank", spec.rank)->capture_default_str();
  gen->add_option("--cond", spec.cond)->capture_default_str();
  gen->add_option("--density", spec.density)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  std::string spread = "linear";
  gen->add_option("--spread", spread, "singular value spacing: linear | geometric")->capture_default_str();
  gen->add_option("--out", gen_out, "output MPS file (stdout if omitted)");

  std::string prof_in, metric = "time", prof_out;
  auto* profile = app.add_subcommand("profile", "performance profile from a bench CSV");
  profile->add_option("results", prof_in, "bench CSV")->required();
  profile->add_option("--metric", metric, "time | iters | krylov")->capture_default_str();
  profile->add_option("--out", prof_out, "output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (*solve) return run_solve(file, method, omega, ell, eps_out, max_ipm, trace_path);
  if (*bench) return run_bench(source, methods, repeat, jobs, omega, ell, eps_out, max_ipm, bench_out);
  if (*gen) {
    const auto sp = spread_from_string(spread);
    if (!sp) {
      std::cerr << "unknown spread: " << spread << "\n";
      return kUsage;
    }
    spec.spread = *sp;
    return run_gen(spec, gen_out);
  }
  if (*profile) return run_profile(prof_in, metric, prof_out);
  return kUsage;
}
