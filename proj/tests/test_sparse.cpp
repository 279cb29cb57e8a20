#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ipk/sparse.hpp"
#include "oracle.hpp"

using ipk::CsrMatrix;
using ipk::Vector;

namespace {

CsrMatrix random_csr(ipk::Index m, ipk::Index n, double density, unsigned seed) {
  std::mt19937 rng(seed);
  return oracle::sparse(oracle::sparsify(oracle::gaussian(m, n, rng), density, rng));
}

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1.0); }

}  // namespace

TEST(Sparse, MatvecIdentity) {
  EXPECT_EQ(ipk::matvec(CsrMatrix::identity(2), Vector{3, -1}), (Vector{3, -1}));
}

TEST(Sparse, MatvecSmall) {
  const auto a = CsrMatrix::from_dense(2, 2, Vector{1, 2, 0, 3});
  EXPECT_EQ(ipk::matvec(a, Vector{1, 1}), (Vector{3, 3}));
  EXPECT_EQ(ipk::matvec_transpose(a, Vector{1, 1}), (Vector{1, 5}));
}

TEST(Sparse, MatvecTransposeZero) {
  const CsrMatrix a(2, 3, {});
  EXPECT_EQ(ipk::matvec_transpose(a, Vector{1, 1}), (Vector{0, 0, 0}));
}

TEST(Sparse, MatvecAgainstDense) {
  std::mt19937 rng(1);
  const auto a = random_csr(5, 7, 0.5, 11);
  const auto x = oracle::gaussian(7, rng);
  const oracle::Vec want = oracle::dense(a) * x;
  EXPECT_LE(oracle::rel_err(oracle::vec(ipk::matvec(a, oracle::stdvec(x))), want), 1e-14);

  const auto b = random_csr(6, 4, 0.5, 12);
  const auto y = oracle::gaussian(6, rng);
  const oracle::Vec want_t = oracle::dense(b).transpose() * y;
  EXPECT_LE(oracle::rel_err(oracle::vec(ipk::matvec_transpose(b, oracle::stdvec(y))), want_t), 1e-14);
}

TEST(Sparse, DimensionMismatchThrows) {
  const auto a = CsrMatrix::identity(3);
  EXPECT_THROW(ipk::matvec(a, Vector{1, 2}), ipk::DimensionError);
  EXPECT_THROW(ipk::matvec_transpose(a, Vector{1}), ipk::DimensionError);
  Vector x(3, 0.0);
  EXPECT_THROW(ipk::row_dot(a, 3, x), ipk::DimensionError);
  EXPECT_THROW(ipk::row_axpy(a, -1, 1.0, x), ipk::DimensionError);
}

TEST(Sparse, RowDot) {
  const auto a = CsrMatrix::from_dense(2, 3, Vector{0, 0, 0, 1, 2, 0});
  EXPECT_EQ(ipk::row_dot(a, 0, Vector{7, 8, 9}), 0.0);
  EXPECT_EQ(ipk::row_dot(a, 1, Vector{1, 1, 5}), 3.0);

  std::mt19937 rng(2);
  const auto r = random_csr(4, 9, 0.6, 13);
  const auto x = oracle::gaussian(9, rng);
  const auto d = oracle::dense(r);
  for (ipk::Index i = 0; i < 4; ++i) {
    EXPECT_LE(rel(ipk::row_dot(r, i, oracle::stdvec(x)), d.row(i).dot(x)), 1e-14);
  }
}

TEST(Sparse, RowAxpy) {
  const auto a = CsrMatrix::from_dense(1, 3, Vector{1, 0, 2});
  Vector x{4, 5, 6};
  ipk::row_axpy(a, 0, 0.0, x);
  EXPECT_EQ(x, (Vector{4, 5, 6}));
  Vector z(3, 0.0);
  ipk::row_axpy(a, 0, 3.0, z);
  EXPECT_EQ(z, (Vector{3, 0, 6}));
}

TEST(Sparse, RowAxpyAccumulatesTranspose) {
  std::mt19937 rng(3);
  const auto a = random_csr(6, 8, 0.5, 14);
  const auto d = oracle::gaussian(6, rng);
  const auto x0 = oracle::gaussian(8, rng);
  Vector x = oracle::stdvec(x0);
  for (ipk::Index i = 0; i < 6; ++i) ipk::row_axpy(a, i, d(i), x);
  const oracle::Vec want = x0 + oracle::dense(a).transpose() * d;
  EXPECT_LE(oracle::rel_err(oracle::vec(x), want), 1e-14);
}

TEST(Sparse, RowNorms) {
  EXPECT_EQ(ipk::row_norms(CsrMatrix::identity(3)), (Vector{1, 1, 1}));
  const auto a = CsrMatrix::from_dense(2, 2, Vector{3, 4, 0, 0});
  EXPECT_EQ(ipk::row_norms(a), (Vector{5, 0}));

  const auto r = random_csr(7, 5, 0.5, 15);
  const auto n = ipk::row_norms(r);
  const auto d = oracle::dense(r);
  for (ipk::Index i = 0; i < 7; ++i) EXPECT_LE(rel(n[i], d.row(i).norm()), 1e-14);
}

TEST(Sparse, RowNormMatchesRowDotOfScatter) {
  const auto a = random_csr(6, 10, 0.4, 16);
  const auto n = ipk::row_norms(a);
  for (ipk::Index i = 0; i < a.rows(); ++i) {
    Vector scatter(10, 0.0);
    ipk::row_axpy(a, i, 1.0, scatter);
    EXPECT_LE(rel(n[i] * n[i], ipk::row_dot(a, i, scatter)), 1e-12);
  }
}

TEST(Sparse, Adjointness) {
  std::mt19937 rng(4);
  for (unsigned trial = 0; trial < 20; ++trial) {
    const auto a = random_csr(5 + trial % 4, 9, 0.5, 100 + trial);
    const auto x = oracle::stdvec(oracle::gaussian(a.cols(), rng));
    const auto y = oracle::stdvec(oracle::gaussian(a.rows(), rng));
    const double lhs = ipk::vec::dot(ipk::matvec(a, x), y);
    const double rhs = ipk::vec::dot(x, ipk::matvec_transpose(a, y));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Sparse, CanonicalizationSumsDuplicatesAndDropsZeros) {
  const CsrMatrix a(2, 2, {{1, 1, 2.0}, {0, 0, 1.0}, {1, 1, 3.0}, {0, 1, 0.0}, {1, 0, 4.0}, {1, 0, -4.0}});
  EXPECT_EQ(a.nnz(), 2);
  EXPECT_EQ(a.to_dense(), (Vector{1, 0, 0, 5}));
}

TEST(Sparse, CanonicalizationIdempotentAndOrderIndependent) {
  const auto a = random_csr(6, 6, 0.5, 17);
  auto t = a.triplets();
  EXPECT_EQ(CsrMatrix(6, 6, t), a);
  std::mt19937 rng(5);
  std::shuffle(t.begin(), t.end(), rng);
  const CsrMatrix b(6, 6, t);
  EXPECT_EQ(b, a);
  const Vector x{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(ipk::matvec(a, x), ipk::matvec(b, x));
}

TEST(Sparse, RemoveZeroRowsColsNoop) {
  const auto a = CsrMatrix::from_dense(2, 2, Vector{1, 2, 0, 3});
  const auto r = ipk::remove_zero_rows_cols(a, Vector{1, 2}, Vector{3, 4});
  EXPECT_TRUE(r.map.is_identity());
  EXPECT_EQ(r.a, a);
  EXPECT_EQ(r.b, (Vector{1, 2}));
  EXPECT_EQ(r.c, (Vector{3, 4}));
}

TEST(Sparse, RemoveZeroColumn) {
  const auto a = CsrMatrix::from_dense(2, 3, Vector{1, 0, 2, 3, 0, 4});
  const auto r = ipk::remove_zero_rows_cols(a, Vector{1, 2}, Vector{5, 6, 7});
  EXPECT_EQ(r.a.cols(), 2);
  EXPECT_EQ(r.c, (Vector{5, 7}));
  EXPECT_EQ(r.map.kept_cols, (std::vector<ipk::Index>{0, 2}));
  EXPECT_EQ(r.map.expand_cols(Vector{8, 9}), (Vector{8, 0, 9}));
}

TEST(Sparse, RemoveZeroRow) {
  const auto a = CsrMatrix::from_dense(3, 2, Vector{1, 2, 0, 0, 3, 4});
  const auto r = ipk::remove_zero_rows_cols(a, Vector{1, 0, 2}, Vector{1, 1});
  EXPECT_EQ(r.a.rows(), 2);
  EXPECT_EQ(r.b, (Vector{1, 2}));
  EXPECT_EQ(r.map.kept_rows, (std::vector<ipk::Index>{0, 2}));
  EXPECT_EQ(r.map.expand_rows(Vector{5, 6}), (Vector{5, 0, 6}));
}

TEST(Sparse, RemoveZeroRowInfeasible) {
  const auto a = CsrMatrix::from_dense(2, 2, Vector{1, 2, 0, 0});
  EXPECT_THROW(ipk::remove_zero_rows_cols(a, Vector{1, 3}, Vector{1, 1}), ipk::InfeasibleError);
}

TEST(Sparse, MatrixMarketDump) {
  std::ostringstream os;
  ipk::write_matrix_market(os, CsrMatrix::from_dense(2, 2, Vector{1, 0, 0, 2.5}));
  EXPECT_EQ(os.str(), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 2.5\n");
}
