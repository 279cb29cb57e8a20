#include <gtest/gtest.h>

#include <random>

#include "ipk/ldlt.hpp"
#include "ipk/normal_eq.hpp"
#include "oracle.hpp"

using ipk::DenseMatrix;
using ipk::Vector;

namespace {

DenseMatrix to_dense_matrix(const oracle::Mat& m) {
  DenseMatrix out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

DenseMatrix diag(std::initializer_list<double> d) {
  DenseMatrix m(static_cast<ipk::Index>(d.size()));
  ipk::Index i = 0;
  for (double v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(Ldlt, Identity) {
  const auto f = ipk::ldlt_drop_factor(diag({1, 1, 1}));
  EXPECT_EQ(f.g, (Vector{1, 1, 1}));
  EXPECT_EQ(f.kept_count(), 3);
  for (ipk::Index i = 0; i < 3; ++i) {
    for (ipk::Index j = 0; j < 3; ++j) EXPECT_EQ(f.l(i, j), i == j ? 1.0 : 0.0);
  }
  EXPECT_EQ(ipk::ldlt_drop_solve(f, Vector{1, -2, 3}), (Vector{1, -2, 3}));
}

TEST(Ldlt, ZeroMiddlePivotDropped) {
  const auto f = ipk::ldlt_drop_factor(diag({1, 0, 2}));
  EXPECT_EQ(f.kept, (std::vector<char>{1, 0, 1}));
  const auto y = ipk::ldlt_drop_solve(f, Vector{3, 5, 4});
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_FALSE(std::signbit(y[1]));
  EXPECT_EQ(y[2], 2.0);
}

TEST(Ldlt, CoupledNearZeroPivot) {
  // Second row is a copy of the first, so the second pivot vanishes.
  const oracle::Mat b = (oracle::Mat(3, 2) << 1, 2, 1, 2, 0, 3).finished();
  const auto f = ipk::ldlt_drop_factor(to_dense_matrix(b * b.transpose()), 1e-12);
  EXPECT_EQ(f.kept, (std::vector<char>{1, 0, 1}));
  const auto y = ipk::ldlt_drop_solve(f, Vector{1, 1, 1});
  EXPECT_EQ(y[1], 0.0);
}

TEST(Ldlt, RankDeficientReconstruction) {
  std::mt19937 rng(1);
  const oracle::Mat b = oracle::gaussian(6, 4, rng);
  const oracle::Mat m = b * b.transpose();
  const auto f = ipk::ldlt_drop_factor(to_dense_matrix(m), 1e-10);
  ASSERT_EQ(f.kept_count(), 4);
  std::vector<Eigen::Index> kept;
  for (ipk::Index i = 0; i < 6; ++i) {
    if (f.kept[i]) kept.push_back(i);
  }
  oracle::Mat l(4, 4), g = oracle::Mat::Zero(4, 4), mk(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    g(i, i) = f.g[kept[i]];
    for (std::size_t j = 0; j < 4; ++j) {
      l(i, j) = f.l(kept[i], kept[j]);
      mk(i, j) = m(kept[i], kept[j]);
    }
  }
  EXPECT_LE((l * g * l.transpose() - mk).norm(), 1e-10);
  for (ipk::Index i = 0; i < 6; ++i) EXPECT_EQ(f.l(i, i), 1.0);
}

TEST(Ldlt, FullRankMatchesDenseSolve) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    std::mt19937 rng(10 + seed);
    const oracle::Mat b = oracle::gaussian(8, 8, rng);
    const oracle::Mat m = b * b.transpose() + 0.1 * oracle::Mat::Identity(8, 8);
    const oracle::Vec rhs = oracle::gaussian(8, rng);
    const auto f = ipk::ldlt_drop_factor(to_dense_matrix(m));
    EXPECT_EQ(f.kept_count(), 8);
    const auto y = ipk::ldlt_drop_solve(f, oracle::stdvec(rhs));
    EXPECT_LE(oracle::rel_err(oracle::vec(y), m.llt().solve(rhs)), 1e-10);
  }
}

TEST(Ldlt, IndefiniteRejected) {
  DenseMatrix m(2);
  m(0, 0) = 1;
  m(0, 1) = m(1, 0) = 2;
  m(1, 1) = 1;
  EXPECT_THROW(ipk::ldlt_drop_factor(m), ipk::IndefiniteMatrixError);
  EXPECT_THROW(ipk::ldlt_drop_factor(diag({1, -1})), ipk::IndefiniteMatrixError);
}

TEST(Ldlt, NormalMatrixFormation) {
  std::mt19937 rng(2);
  const oracle::Mat a = oracle::sparsify(oracle::gaussian(5, 9, rng), 0.5, rng);
  const auto mat = ipk::form_normal_matrix(oracle::sparse(a));
  const oracle::Mat want = a * a.transpose();
  for (ipk::Index i = 0; i < 5; ++i) {
    for (ipk::Index j = 0; j < 5; ++j) EXPECT_NEAR(mat(i, j), want(i, j), 1e-13);
  }
}

TEST(Ldlt, SolvesScaledNormalEquations) {
  std::mt19937 rng(3);
  const oracle::Mat a = oracle::gaussian(6, 10, rng);
  const ipk::Vector x(10, 2.0), s(10, 0.5);
  const ipk::CsrMatrix sys_a = oracle::sparse(a);
  const auto sys = ipk::build_scaled_system(sys_a, x, s);
  const auto f = ipk::ldlt_drop_factor(ipk::form_normal_matrix(sys.op));
  const Vector rhs{1, 2, 3, 4, 5, 6};
  const auto y = ipk::ldlt_drop_solve(f, rhs);
  Vector t(10), back(6);
  sys.op.apply_transpose(y, t);
  sys.op.apply(t, back);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(back[i], rhs[i], 1e-10);
}
