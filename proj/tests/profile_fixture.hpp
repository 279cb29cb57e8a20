#pragma once

// Three solvers on five problems with iteration counts chosen so every
// log2 ratio is an exact integer. Tabulated by hand:
//
//   problem  A     B     C      log2 ratios (A, B, C)
//   p1       10    20    40     0    1    2
//   p2       8     8     fail   0    0    inf
//   p3       fail  6     12     inf  0    1
//   p4       16    4     8      2    0    1
//   p5       5     fail  20     0    inf  2

#include <string>
#include <vector>

#include "ipk/bench.hpp"

namespace fixture {

inline std::vector<ipk::BenchRecord> profile_records() {
  struct Row {
    const char* problem;
    int a, b, c;  // 0 marks a failure
  };
  const Row rows[] = {{"p1", 10, 20, 40}, {"p2", 8, 8, 0}, {"p3", 0, 6, 12}, {"p4", 16, 4, 8}, {"p5", 5, 0, 20}};
  std::vector<ipk::BenchRecord> out;
  for (const auto& r : rows) {
    const int iters[] = {r.a, r.b, r.c};
    const char* names[] = {"A", "B", "C"};
    for (int s = 0; s < 3; ++s) {
      ipk::BenchRecord rec;
      rec.problem = r.problem;
      rec.solver = names[s];
      rec.m = 3;
      rec.n = 5;
      rec.status = iters[s] > 0 ? "Optimal" : "IterationLimit";
      rec.ipm_iters = iters[s] > 0 ? iters[s] : 99;
      rec.wall_ms = 1.0;
      out.push_back(rec);
    }
  }
  return out;
}

struct Expected {
  const char* solver;
  double tau;
  double pi;
};

inline std::vector<Expected> profile_expected() {
  return {{"A", 0, 0.6}, {"A", 1, 0.6}, {"A", 2, 0.8},  //
          {"B", 0, 0.6}, {"B", 1, 0.8}, {"B", 2, 0.8},  //
          {"C", 0, 0.0}, {"C", 1, 0.4}, {"C", 2, 0.8}};
}

/// Exact comparison of a computed profile with the table above.
inline bool profile_matches(const ipk::Profile& prof, std::string* why = nullptr) {
  const auto want = profile_expected();
  if (prof.points.size() != want.size() || prof.problems_used != 5 || !prof.excluded.empty()) {
    if (why) *why = "shape mismatch: " + std::to_string(prof.points.size()) + " points";
    return false;
  }
  for (std::size_t k = 0; k < want.size(); ++k) {
    const auto& p = prof.points[k];
    if (p.solver != want[k].solver || p.tau != want[k].tau || p.pi != want[k].pi) {
      if (why) {
        *why = "point " + std::to_string(k) + ": got (" + p.solver + ", " + std::to_string(p.tau) + ", " +
               std::to_string(p.pi) + ")";
      }
      return false;
    }
  }
  return true;
}

}  // namespace fixture
