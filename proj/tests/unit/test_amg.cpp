// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "fracprec/amg.hpp"
#include "fracprec/dense_eigen.hpp"
#include "fracprec/errors.hpp"
#include "fracprec/gmres.hpp"
#include "test_helpers.hpp"

using namespace fracprec;
using namespace fracprec::testing;

TEST_CASE("amg single level below max_coarse is a direct solve") {
  CsrMatrix A = spd_tridiagonal(40);
  AmgConfig cfg;
  AmgHierarchy h = amg_setup(A, {}, cfg);
  CHECK(h.num_levels() == 1);
  std::mt19937 rng(4);
  std::vector<double> b = random_vector(40, rng);
  std::vector<double> x = amg_apply(h, b);
  std::vector<double> Ax = spmv(A, x);
  for (int i = 0; i < 40; ++i) CHECK(Ax[i] == doctest::Approx(b[i]).epsilon(1e-11));

  std::vector<double> zero(40, 0.0);
  CHECK(amg_apply(h, zero) == zero);
}

TEST_CASE("amg 1d poisson coarsening rate near one third") {
  CsrMatrix A = poisson1d(1024);
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  CHECK(h.num_levels() >= 3);
  for (int l = 1; l < h.num_levels(); ++l) {
    double ratio = static_cast<double>(h.levels[l].A.n_rows) / h.levels[l - 1].A.n_rows;
    CHECK(ratio < 0.45);
    CHECK(ratio > 0.2);
  }
}

TEST_CASE("amg galerkin identity on every level") {
  CsrMatrix A = poisson3d(9);  // 729 dofs
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  REQUIRE(h.num_levels() >= 2);
  for (int l = 1; l < h.num_levels(); ++l) {
    Eigen::MatrixXd Af = h.levels[l - 1].A.to_dense();
    Eigen::MatrixXd P = h.levels[l].P.to_dense();
    Eigen::MatrixXd ref = P.transpose() * Af * P;
    Eigen::MatrixXd got = h.levels[l].A.to_dense();
    CHECK((got - ref).norm() <= 1e-13 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("amg apply is linear") {
  CsrMatrix A = poisson1d(300);
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  std::mt19937 rng(8);
  std::vector<double> r1 = random_vector(300, rng), r2 = random_vector(300, rng);
  double a = 1.7, b = -0.4;
  std::vector<double> mix(300);
  for (int i = 0; i < 300; ++i) mix[i] = a * r1[i] + b * r2[i];
  std::vector<double> y = amg_apply(h, mix);
  std::vector<double> y1 = amg_apply(h, r1), y2 = amg_apply(h, r2);
  double scale = 0, err = 0;
  for (int i = 0; i < 300; ++i) {
    double e = y[i] - (a * y1[i] + b * y2[i]);
    err += e * e;
    scale += y[i] * y[i];
  }
  CHECK(std::sqrt(err) <= 1e-12 * std::max(1.0, std::sqrt(scale)));
}

TEST_CASE("amg v-cycle is symmetric for symmetric input with sgs") {
  CsrMatrix A = poisson1d(260);
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  FunctionOperator B(260, [&](std::span<const double> r) { return amg_apply(h, r); });
  Eigen::MatrixXd Bd = densify(B, 260);
  CHECK((Bd - Bd.transpose()).cwiseAbs().maxCoeff() <=
        1e-10 * Bd.cwiseAbs().maxCoeff());
}

TEST_CASE("amg 1d poisson error propagation spectral radius") {
  const int n = 64;
  CsrMatrix A = poisson1d(n);
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  // E = I - B A, built densely column by column
  FunctionOperator E(n, [&](std::span<const double> x) {
    std::vector<double> Ax = spmv(A, x);
    std::vector<double> BAx = amg_apply(h, Ax);
    std::vector<double> out(x.begin(), x.end());
    for (int i = 0; i < n; ++i) out[i] -= BAx[i];
    return out;
  });
  Eigen::MatrixXd Ed = densify(E, n);
  double rho = 0;
  for (const auto& l : dense_eigenvalues(Ed)) rho = std::max(rho, std::abs(l));
  CHECK(rho <= 0.35);
}

TEST_CASE("amg rigid body modes reproduced per aggregate (tentative P)") {
  // Synthetic displacement-space operator: 4x4x4 node grid, 3 dofs per node,
  // nearest-neighbor SPD coupling.
  const int m = 4;
  const int nn = m * m * m;
  std::vector<std::array<double, 3>> coords;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) coords.push_back({double(i), double(j), double(k)});
  std::vector<CsrMatrix::Triplet> t;
  auto id = [m](int i, int j, int k) { return i + m * (j + m * k); };
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        int v = id(i, j, k);
        for (int d = 0; d < 3; ++d) t.push_back({3 * v + d, 3 * v + d, 6.0});
        auto couple = [&](int w) {
          for (int d = 0; d < 3; ++d) {
            t.push_back({3 * v + d, 3 * w + d, -1.0});
            t.push_back({3 * w + d, 3 * v + d, -1.0});
          }
        };
        if (i + 1 < m) couple(id(i + 1, j, k));
        if (j + 1 < m) couple(id(i, j + 1, k));
        if (k + 1 < m) couple(id(i, j, k + 1));
      }
  CsrMatrix A = CsrMatrix::from_triplets(3 * nn, 3 * nn, std::move(t));
  AmgConfig cfg;
  cfg.prolongation_smoothing = false;
  cfg.max_coarse = 10;
  auto modes = rigid_body_modes(coords);
  AmgHierarchy h = amg_setup(A, modes, cfg);
  REQUIRE(h.num_levels() >= 2);
  const AmgLevel& lvl = h.levels[1];
  const CsrMatrix& P = lvl.P;
  Eigen::MatrixXd Pd = P.to_dense();
  int n_agg = static_cast<int>(lvl.aggregate_offsets.size()) - 1;
  int checked = 0;
  for (int a = 0; a < n_agg; ++a) {
    int c0 = lvl.aggregate_offsets[a], c1 = lvl.aggregate_offsets[a + 1];
    if (c1 == c0) continue;
    ++checked;
    std::vector<int> rows;
    for (int i = 0; i < 3 * nn; ++i)
      if (lvl.fine_aggregate[i] == a) rows.push_back(i);
    Eigen::MatrixXd Pl(static_cast<int>(rows.size()), c1 - c0);
    for (size_t r = 0; r < rows.size(); ++r)
      for (int c = c0; c < c1; ++c) Pl(static_cast<int>(r), c - c0) = Pd(rows[r], c);
    // The aggregate block of P spans the restricted near-null: the projector
    // reproduces every mode restricted to the aggregate rows.
    Eigen::MatrixXd proj = Pl * (Pl.transpose() * Pl).inverse() * Pl.transpose();
    for (const auto& mode : modes) {
      Eigen::VectorXd v(static_cast<int>(rows.size()));
      for (size_t r = 0; r < rows.size(); ++r) v[static_cast<int>(r)] = mode[rows[r]];
      CHECK((proj * v - v).norm() <= 1e-10 * std::max(1.0, v.norm()));
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("amg h-scalability on 3d poisson") {
  std::vector<int> iters;
  for (int m : {8, 16, 24}) {
    CsrMatrix A = poisson3d(m);
    AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
    CsrOperator op(A);
    FunctionOperator pre(A.n_rows, [&](std::span<const double> r) { return amg_apply(h, r); });
    std::mt19937 rng(55);
    std::vector<double> b = random_vector(A.n_rows, rng);
    auto [x, stats] = gmres(op, &pre, b, 1e-8, 200);
    CHECK(stats.converged);
    iters.push_back(stats.iterations);
  }
  int lo = *std::min_element(iters.begin(), iters.end());
  int hi = *std::max_element(iters.begin(), iters.end());
  CHECK(hi - lo <= 2);
}

TEST_CASE("amg rejects zero diagonal and non-square input") {
  CsrMatrix bad = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}});
  CHECK_THROWS_AS(amg_setup(bad, {}, AmgConfig{}), numerical_error);
  CHECK_THROWS_AS(amg_setup(CsrMatrix(2, 3), {}, AmgConfig{}), std::invalid_argument);
}
