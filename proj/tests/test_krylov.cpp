#include <gtest/gtest.h>

#include <random>

#include "ipk/krylov.hpp"
#include "oracle.hpp"

using ipk::CsrMatrix;
using ipk::KrylovConfig;
using ipk::KrylovMethod;
using ipk::Vector;

namespace {

constexpr KrylovMethod kAll[] = {KrylovMethod::CGNE, KrylovMethod::MRNE, KrylovMethod::ABGMRES};

KrylovConfig config(KrylovMethod method, double tol, ipk::Index max_iter = 0) {
  KrylovConfig cfg;
  cfg.method = method;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  return cfg;
}

std::string name(KrylovMethod m) { return std::string(ipk::to_string(m)); }

struct Consistent {
  oracle::Mat a;
  oracle::Vec f;
};

Consistent rank_deficient_system(ipk::Index m, ipk::Index n, ipk::Index r, unsigned seed) {
  std::mt19937 rng(seed);
  Consistent s{oracle::rank_deficient(m, n, r, rng), {}};
  s.f = s.a * oracle::gaussian(n, rng);
  return s;
}

}  // namespace

TEST(Krylov, ZeroRhs) {
  const auto a = CsrMatrix::from_dense(2, 3, Vector{1, 2, 0, 0, 1, 1});
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(a, Vector{0, 0}, config(method, 1e-10));
    EXPECT_EQ(res.dw, Vector(3, 0.0)) << name(method);
    EXPECT_EQ(res.report.iterations, 0) << name(method);
    EXPECT_TRUE(res.report.converged) << name(method);
  }
}

TEST(Krylov, IdentityOneIteration) {
  const auto a = CsrMatrix::identity(4);
  const Vector f{1, -2, 3, 0.5};
  for (auto method : kAll) {
    auto cfg = config(method, 1e-12);
    cfg.inner = {1.0, 1};
    const auto res = ipk::krylov_solve(a, f, cfg);
    EXPECT_EQ(res.report.iterations, 1) << name(method);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(res.dw[i], f[i], 1e-14) << name(method);
  }
}

TEST(Krylov, DiagonalTwoIterations) {
  const auto a = CsrMatrix::from_dense(2, 2, Vector{2, 0, 0, 3});
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(a, Vector{4, 9}, config(method, 1e-12));
    EXPECT_LE(res.report.iterations, 2) << name(method);
    EXPECT_NEAR(res.dw[0], 2.0, 1e-12) << name(method);
    EXPECT_NEAR(res.dw[1], 3.0, 1e-12) << name(method);
  }
}

TEST(Krylov, FullRankMatchesNormalEquations) {
  std::mt19937 rng(1);
  const auto ad = oracle::gaussian(10, 15, rng);
  const oracle::Vec f = oracle::gaussian(10, rng);
  const oracle::Vec want = ad.transpose() * (ad * ad.transpose()).ldlt().solve(f);
  const auto a = oracle::sparse(ad);
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(a, oracle::stdvec(f), config(method, 1e-12, 200));
    EXPECT_TRUE(res.report.converged) << name(method);
    EXPECT_LE(oracle::rel_err(oracle::vec(res.dw), want), 1e-8) << name(method);
  }
}

TEST(Krylov, RankDeficientMatchesSvd) {
  for (auto [m, n, r] : {std::tuple{8, 12, 5}, std::tuple{10, 14, 6}}) {
    for (unsigned seed = 0; seed < 3; ++seed) {
      const auto s = rank_deficient_system(m, n, r, 40 + seed);
      const oracle::Vec want = oracle::min_norm(s.a, s.f);
      for (auto method : kAll) {
        const auto res = ipk::krylov_solve(oracle::sparse(s.a), oracle::stdvec(s.f), config(method, 1e-13, 500));
        EXPECT_LE(oracle::rel_err(oracle::vec(res.dw), want), 1e-7) << name(method) << " " << m << "x" << n;
      }
    }
  }
}

TEST(Krylov, DualMultipliersReproducePrimal) {
  const auto s = rank_deficient_system(9, 13, 9, 50);
  const auto a = oracle::sparse(s.a);
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(a, oracle::stdvec(s.f), config(method, 1e-10, 200));
    const oracle::Vec atdy = s.a.transpose() * oracle::vec(res.dy);
    EXPECT_LE(oracle::rel_err(atdy, oracle::vec(res.dw)), 1e-10) << name(method);
  }
}

TEST(Krylov, MinimizedNormMonotone) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    std::mt19937 rng(60 + seed);
    const auto ad = oracle::sparsify(oracle::gaussian(30, 50, rng), 0.2, rng);
    const oracle::Vec f = ad * oracle::gaussian(50, rng);
    for (auto method : {KrylovMethod::MRNE, KrylovMethod::ABGMRES}) {
      auto cfg = config(method, 1e-12, 200);
      cfg.inner = {1.2, 1};
      const auto res = ipk::krylov_solve(oracle::sparse(ad), oracle::stdvec(f), cfg);
      const auto& h = res.report.minimized_history;
      ASSERT_EQ(h.size(), res.report.residual_history.size());
      for (std::size_t k = 1; k < h.size(); ++k) {
        EXPECT_LE(h[k], h[k - 1] * (1.0 + 1e-12) + 1e-15) << name(method) << " seed " << seed << " k " << k;
      }
    }
  }
}

TEST(Krylov, MrneTwoNormResidualCanRise) {
  std::mt19937 rng(67);
  const auto ad = oracle::sparsify(oracle::gaussian(30, 50, rng), 0.2, rng);
  const oracle::Vec f = ad * oracle::gaussian(50, rng);
  auto cfg = config(KrylovMethod::MRNE, 1e-12, 200);
  cfg.inner = {1.2, 1};
  const auto h = ipk::krylov_solve(oracle::sparse(ad), oracle::stdvec(f), cfg).report.residual_history;
  bool rose = false;
  for (std::size_t k = 1; k < h.size(); ++k) rose = rose || h[k] > h[k - 1];
  EXPECT_TRUE(rose);
}

TEST(Krylov, SolutionInRowSpace) {
  const auto s = rank_deficient_system(9, 14, 6, 70);
  const oracle::Mat proj = oracle::pinv(s.a) * s.a;
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(oracle::sparse(s.a), oracle::stdvec(s.f), config(method, 1e-12, 300));
    const oracle::Vec dw = oracle::vec(res.dw);
    EXPECT_LE((dw - proj * dw).norm(), 1e-8 * dw.norm()) << name(method);
  }
}

TEST(Krylov, RowScalingInvariance) {
  std::mt19937 rng(80);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (unsigned trial = 0; trial < 3; ++trial) {
    const auto s = rank_deficient_system(8, 12, 5, 81 + trial);
    oracle::Vec d(8);
    for (auto& v : d) v = scale(rng);
    const oracle::Mat as = d.cwiseInverse().asDiagonal() * s.a;
    const oracle::Vec fs = d.cwiseInverse().asDiagonal() * s.f;
    for (auto method : kAll) {
      const auto cfg = config(method, 1e-13, 500);
      const auto plain = ipk::krylov_solve(oracle::sparse(s.a), oracle::stdvec(s.f), cfg);
      const auto scaled = ipk::krylov_solve(oracle::sparse(as), oracle::stdvec(fs), cfg);
      EXPECT_LE(oracle::rel_err(oracle::vec(scaled.dw), oracle::vec(plain.dw)), 1e-7) << name(method);
    }
  }
}

TEST(Krylov, CgneAndMrneAgree) {
  std::mt19937 rng(90);
  const oracle::Mat ad = oracle::gaussian(12, 20, rng);
  const oracle::Vec f = oracle::gaussian(12, rng);
  const auto a = oracle::sparse(ad);
  const auto c = ipk::cgne_solve(a, oracle::stdvec(f), config(KrylovMethod::CGNE, 1e-12, 200));
  const auto m = ipk::mrne_solve(a, oracle::stdvec(f), config(KrylovMethod::MRNE, 1e-12, 200));
  EXPECT_LE(oracle::rel_err(oracle::vec(c.dw), oracle::vec(m.dw)), 1e-6);
  EXPECT_NE(c.report.residual_history, m.report.residual_history);
}

TEST(Krylov, IterationCapAndAccounting) {
  std::mt19937 rng(91);
  const auto ad = oracle::sparsify(oracle::gaussian(40, 60, rng), 0.1, rng);
  const oracle::Vec f = ad * oracle::gaussian(60, rng);
  for (auto method : kAll) {
    auto cfg = config(method, 1e-14, 3);
    cfg.inner = {1.0, 1};
    const auto res = ipk::krylov_solve(oracle::sparse(ad), oracle::stdvec(f), cfg);
    EXPECT_LE(res.report.iterations, 3) << name(method);
    EXPECT_FALSE(res.report.converged) << name(method);
    const long long sweep = method == KrylovMethod::ABGMRES ? ipk::kSorSweepMv : ipk::kSsorSweepMv;
    EXPECT_GE(res.report.mv_count, res.report.iterations * (1 + sweep)) << name(method);
    EXPECT_GT(res.report.relative_residual, 0.0) << name(method);
  }
}

TEST(Krylov, ConvergedImpliesTolerance) {
  const auto s = rank_deficient_system(15, 25, 15, 92);
  for (auto method : kAll) {
    for (double tol : {1e-4, 1e-8}) {
      const auto res = ipk::krylov_solve(oracle::sparse(s.a), oracle::stdvec(s.f), config(method, tol, 100));
      ASSERT_TRUE(res.report.converged) << name(method);
      EXPECT_LE(res.report.relative_residual, tol) << name(method);
      const oracle::Vec r = s.f - s.a * oracle::vec(res.dw);
      EXPECT_NEAR(r.norm() / s.f.norm(), res.report.relative_residual, 1e-12) << name(method);
    }
  }
}

TEST(Krylov, WeightedStoppingNorm) {
  const auto s = rank_deficient_system(10, 16, 10, 93);
  const Vector w{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (auto method : kAll) {
    const auto res = ipk::krylov_solve(oracle::sparse(s.a), oracle::stdvec(s.f), config(method, 1e-6, 100), w);
    const oracle::Vec wv = oracle::vec(w);
    const oracle::Vec r = s.f - s.a * oracle::vec(res.dw);
    const double want = r.cwiseProduct(wv).norm() / s.f.cwiseProduct(wv).norm();
    EXPECT_NEAR(res.report.relative_residual, want, 1e-12) << name(method);
    EXPECT_TRUE(res.report.converged) << name(method);
  }
}

TEST(Krylov, EvenEllRejectedForSymmetricMethods) {
  const auto a = CsrMatrix::identity(2);
  auto cfg = config(KrylovMethod::CGNE, 1e-8);
  cfg.inner.ell = 2;
  EXPECT_THROW(ipk::cgne_solve(a, Vector{1, 1}, cfg), std::invalid_argument);
  EXPECT_THROW(ipk::mrne_solve(a, Vector{1, 1}, cfg), std::invalid_argument);
  EXPECT_NO_THROW(ipk::ab_gmres_solve(a, Vector{1, 1}, cfg));
}

TEST(Krylov, Deterministic) {
  const auto s = rank_deficient_system(12, 18, 8, 94);
  for (auto method : kAll) {
    const auto a = oracle::sparse(s.a);
    const auto r1 = ipk::krylov_solve(a, oracle::stdvec(s.f), config(method, 1e-9, 100));
    const auto r2 = ipk::krylov_solve(a, oracle::stdvec(s.f), config(method, 1e-9, 100));
    EXPECT_EQ(r1.dw, r2.dw) << name(method);
    EXPECT_EQ(r1.report.residual_history, r2.report.residual_history) << name(method);
  }
}
