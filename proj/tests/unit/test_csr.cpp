// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "fracprec/csr.hpp"
#include "fracprec/errors.hpp"
#include "fracprec/mmio.hpp"

using namespace fracprec;

namespace {

CsrMatrix random_sparse(int rows, int cols, double density, std::mt19937& rng) {
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<CsrMatrix::Triplet> trips;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (coin(rng) < density) trips.push_back({i, j, val(rng)});
  return CsrMatrix::from_triplets(rows, cols, std::move(trips));
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

TEST_CASE("spmv identity and zero") {
  CsrMatrix I = CsrMatrix::identity(3);
  std::vector<double> x{1, 2, 3};
  CHECK(spmv(I, x) == x);

  CsrMatrix Z(2, 2);
  std::vector<double> y = spmv(Z, std::vector<double>{5, 7});
  CHECK(y == std::vector<double>{0, 0});
}

TEST_CASE("spmv against dense row-by-row oracle") {
  // [[2,0],[1,3]] * [1,1] = [2,4]
  CsrMatrix A = CsrMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 0, 1.0}, {1, 1, 3.0}});
  CHECK(spmv(A, std::vector<double>{1, 1}) == std::vector<double>{2, 4});
  CHECK_THROWS_AS(spmv(A, std::vector<double>{1, 1, 1}), std::invalid_argument);
}

TEST_CASE("spmv_transpose examples") {
  CsrMatrix I = CsrMatrix::identity(3);
  std::vector<double> x{4, 5, 6};
  CHECK(spmv_transpose(I, x) == x);

  CsrMatrix A = CsrMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 0, 1.0}, {1, 1, 3.0}});
  CHECK(spmv_transpose(A, std::vector<double>{1, 1}) == std::vector<double>{3, 3});

  CsrMatrix col = CsrMatrix::from_triplets(2, 1, {{0, 0, 1.0}, {1, 0, 2.0}});
  CHECK(spmv_transpose(col, std::vector<double>{1, 1}) == std::vector<double>{3});
  CHECK_THROWS_AS(spmv_transpose(col, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("spmv_transpose equals spmv of transpose, dense-checked transpose") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 50);
    int cols = 1 + static_cast<int>(rng() % 50);
    CsrMatrix A = random_sparse(rows, cols, 0.2, rng);
    CsrMatrix At = transpose(A);
    CHECK((At.to_dense() - A.to_dense().transpose()).cwiseAbs().maxCoeff() == 0.0);
    std::vector<double> x(static_cast<size_t>(rows));
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (double& v : x) v = val(rng);
    auto y1 = spmv_transpose(A, x);
    auto y2 = spmv(At, x);
    double scale = to_eigen(y1).norm();
    CHECK((to_eigen(y1) - to_eigen(y2)).norm() <= 1e-14 * std::max(1.0, scale));
  }
}

TEST_CASE("spgemm examples and dense oracle") {
  std::mt19937 rng(7);
  CsrMatrix B = random_sparse(3, 3, 0.5, rng);
  CsrMatrix I = CsrMatrix::identity(3);
  CHECK((spgemm(I, B).to_dense() - B.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  CsrMatrix Z(3, 4);
  CsrMatrix AZ = spgemm(B, Z);
  CHECK(AZ.nnz() == 0);
  CHECK(AZ.n_rows == 3);
  CHECK(AZ.n_cols == 4);

  CsrMatrix A = random_sparse(3, 3, 0.5, rng);
  Eigen::MatrixXd ref = A.to_dense() * B.to_dense();
  Eigen::MatrixXd got = spgemm(A, B).to_dense();
  CHECK((got - ref).cwiseAbs().maxCoeff() <=
        1e-14 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  CHECK_THROWS_AS(spgemm(A, CsrMatrix(4, 2)), std::invalid_argument);
}

TEST_CASE("spgemm associativity on random triples") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    int n1 = 2 + static_cast<int>(rng() % 19);
    int n2 = 2 + static_cast<int>(rng() % 19);
    int n3 = 2 + static_cast<int>(rng() % 19);
    int n4 = 2 + static_cast<int>(rng() % 19);
    CsrMatrix A = random_sparse(n1, n2, 0.3, rng);
    CsrMatrix B = random_sparse(n2, n3, 0.3, rng);
    CsrMatrix C = random_sparse(n3, n4, 0.3, rng);
    Eigen::MatrixXd left = spgemm(spgemm(A, B), C).to_dense();
    Eigen::MatrixXd right = spgemm(A, spgemm(B, C)).to_dense();
    double scale = A.to_dense().norm() * B.to_dense().norm() * C.to_dense().norm();
    CHECK((left - right).norm() <= 1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("add_scaled union pattern") {
  std::mt19937 rng(5);
  CsrMatrix A = random_sparse(4, 4, 0.4, rng);
  CsrMatrix AA = add_scaled(A, A, 1.0, -1.0);
  CHECK(AA.nnz() == A.nnz());  // union pattern kept, values zero
  for (double v : AA.values) CHECK(v == 0.0);

  CsrMatrix Z(4, 4);
  CsrMatrix twoA = add_scaled(A, Z, 2.0, 0.0);
  CHECK((twoA.to_dense() - 2.0 * A.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  // disjoint patterns merge
  CsrMatrix U = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}});
  CsrMatrix V = CsrMatrix::from_triplets(2, 2, {{1, 1, 2.0}});
  CsrMatrix W = add_scaled(U, V, 3.0, 4.0);
  CHECK(W.coeff(0, 0) == 3.0);
  CHECK(W.coeff(1, 1) == 8.0);
  CHECK(W.nnz() == 2);
  CHECK_THROWS_AS(add_scaled(U, CsrMatrix(3, 2), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("bdiag3_extract slices diagonal blocks") {
  // block-diagonal input is reproduced exactly
  std::vector<CsrMatrix::Triplet> trips;
  double v = 1.0;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.push_back({3 * b + i, 3 * b + j, v += 1.0});
  CsrMatrix H = CsrMatrix::from_triplets(6, 6, trips);
  BlockDiagonal3 D = bdiag3_extract(H);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(D.block(b)[3 * i + j] == H.coeff(3 * b + i, 3 * b + j));

  // dense 6x6: off-block entries are discarded (index-slicing oracle)
  std::mt19937 rng(3);
  CsrMatrix F = random_sparse(6, 6, 1.0, rng);
  BlockDiagonal3 DF = bdiag3_extract(F);
  Eigen::MatrixXd Fd = F.to_dense();
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double expect = Fd(3 * b + i, 3 * b + j);
        if (i == j && expect == 0.0) continue;  // regularized slot
        CHECK(DF.block(b)[3 * i + j] == expect);
      }

  CHECK_THROWS_AS(bdiag3_extract(CsrMatrix(4, 4)), std::invalid_argument);

  // zero diagonal block is regularized, not an error
  CsrMatrix Z(3, 3);
  BlockDiagonal3 DZ = bdiag3_extract(Z);
  CHECK(DZ.block(0)[0] == 1e-10);
  CHECK(DZ.block(0)[4] == 1e-10);
  CHECK(DZ.block(0)[8] == 1e-10);
}

TEST_CASE("bdiag3_solve identity, scaling and dense oracle") {
  BlockDiagonal3 I;
  I.n_blocks = 2;
  I.blocks.assign(18, 0.0);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i) I.block(b)[4 * i] = 1.0;
  std::vector<double> w{1, 2, 3, 4, 5, 6};
  CHECK(bdiag3_solve(I, w) == w);

  BlockDiagonal3 two = I;
  for (double& v : two.blocks) v *= 2.0;
  auto half = bdiag3_solve(two, w);
  for (size_t i = 0; i < w.size(); ++i) CHECK(half[i] == doctest::Approx(w[i] / 2).epsilon(1e-15));

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    BlockDiagonal3 B;
    B.n_blocks = 1;
    B.blocks.resize(9);
    Eigen::Matrix3d Bd;
    do {
      for (int i = 0; i < 9; ++i) B.blocks[i] = val(rng);
      Bd = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(B.blocks.data());
    } while (std::abs(Bd.determinant()) < 1e-2);
    std::vector<double> rhs{val(rng), val(rng), val(rng)};
    auto x = bdiag3_solve(B, rhs);
    Eigen::Vector3d res = Bd * Eigen::Map<Eigen::Vector3d>(x.data()) -
                          Eigen::Map<Eigen::Vector3d>(rhs.data());
    CHECK(res.norm() <= 1e-12 * std::max(1.0, to_eigen(rhs).norm()));
  }

  BlockDiagonal3 S;
  S.n_blocks = 1;
  S.blocks.assign(9, 1.0);  // rank-1, nonzero diagonal: stays singular
  CHECK_THROWS_AS(bdiag3_solve(S, std::vector<double>{1, 1, 1}), numerical_error);
}

TEST_CASE("diag_extract") {
  CHECK(diag_extract(CsrMatrix::identity(4)) == std::vector<double>{1, 1, 1, 1});
  CsrMatrix off = CsrMatrix::from_triplets(3, 3, {{0, 1, 5.0}, {2, 0, 7.0}});
  CHECK(diag_extract(off) == std::vector<double>{0, 0, 0});

  // TPFA matrix of a 1D 3-cell chain with unit transmissibility
  CsrMatrix chain = CsrMatrix::from_triplets(
      3, 3,
      {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}, {1, 2, -1.0}, {2, 1, -1.0}, {2, 2, 1.0}});
  CHECK(diag_extract(chain) == std::vector<double>{1, 2, 1});
}

TEST_CASE("restrict_submatrix gathers dense blocks") {
  std::mt19937 rng(17);
  CsrMatrix A = random_sparse(3, 3, 0.8, rng);
  std::vector<int> all{0, 1, 2};
  CHECK((restrict_submatrix(A, all, all) - A.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd empty = restrict_submatrix(A, std::vector<int>{}, std::vector<int>{});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 0);

  std::vector<int> rows{0, 2}, cols{1};
  Eigen::MatrixXd g = restrict_submatrix(A, rows, cols);
  CHECK(g(0, 0) == A.to_dense()(0, 1));
  CHECK(g(1, 0) == A.to_dense()(2, 1));
  std::vector<int> bad{2, 1};
  CHECK_THROWS_AS(restrict_submatrix(A, bad, cols), std::invalid_argument);
  std::vector<int> oob{0, 5};
  CHECK_THROWS_AS(restrict_submatrix(A, oob, cols), std::invalid_argument);
}

TEST_CASE("matrix market round trip") {
  std::mt19937 rng(23);
  CsrMatrix A = random_sparse(7, 5, 0.3, rng);
  std::string path = "test_mm_roundtrip.mtx";
  write_matrix_market(path, A);
  CsrMatrix B = read_matrix_market(path);
  CHECK(B.n_rows == A.n_rows);
  CHECK(B.n_cols == A.n_cols);
  CHECK((B.to_dense() - A.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  std::vector<double> v{1.5, -2.25, 1e-17, 3.0};
  write_vector_text("test_vec.txt", v);
  CHECK(read_vector_text("test_vec.txt") == v);
  std::remove(path.c_str());
  std::remove("test_vec.txt");
}

TEST_CASE("csr invariants validated") {
  CsrMatrix A = CsrMatrix::identity(3);
  CHECK_NOTHROW(A.check_invariants());
  A.col_indices[1] = 9;
  CHECK_THROWS_AS(A.check_invariants(), std::invalid_argument);
}
