// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "fracprec/bounds.hpp"
#include "fracprec/dense_eigen.hpp"
#include "fracprec/gmres.hpp"
#include "fracprec/precond.hpp"
#include "test_helpers.hpp"

using namespace fracprec;
using namespace fracprec::testing;

namespace {

Eigen::MatrixXd densify_hs(const HSurrogate& Hs, int n) {
  FunctionOperator op(n, [&](std::span<const double> v) { return Hs.solve(v); });
  return densify(op, n);
}

BlockVector random_block(const BlockSystem& J, std::mt19937& rng) {
  BlockVector w(J.n_u, J.n_t, J.n_p);
  w.u = random_vector(J.n_u, rng);
  w.t = random_vector(J.n_t, rng);
  w.p = random_vector(J.n_p, rng);
  return w;
}

}  // namespace

TEST_CASE("tpu decoupled system: schur equals A, apply splits per physics") {
  BlockSystem J = toy_system(18, 2, ToyMode::decoupled);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(J, cfg);
  CHECK((M.S.to_dense() - J.A.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937 rng(2);
  BlockVector w = random_block(J, rng);
  BlockVector v = apply_tpu(M, J, w);
  // v_u = A^-1 w_u, v_t = -H~^-1 w_t, v_p = T^-1 w_p
  Eigen::MatrixXd Ad = J.A.to_dense();
  Eigen::VectorXd vu = Ad.lu().solve(Eigen::Map<Eigen::VectorXd>(w.u.data(), J.n_u));
  for (int i = 0; i < J.n_u; ++i) CHECK(v.u[i] == doctest::Approx(vu[i]).epsilon(1e-10));
  std::vector<double> ht = bdiag3_solve(M.Hs.block_diag, w.t);
  for (int i = 0; i < J.n_t; ++i) CHECK(v.t[i] == doctest::Approx(-ht[i]).epsilon(1e-12));
  std::vector<double> tp = M.T_factor.solve(w.p);
  for (int i = 0; i < J.n_p; ++i) CHECK(v.p[i] == doctest::Approx(tp[i]).epsilon(1e-12));
}

TEST_CASE("tpu all-stick schur complement is symmetric") {
  BlockSystem J = toy_system(30, 4, ToyMode::stick);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(J, cfg);
  Eigen::MatrixXd S = M.S.to_dense();
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * S.cwiseAbs().maxCoeff());
}

TEST_CASE("tpu mixed-state schur matches dense triple-product oracle") {
  BlockSystem J = toy_system(24, 2, ToyMode::mixed);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(J, cfg);

  Eigen::MatrixXd Hb = Eigen::MatrixXd::Zero(J.n_t, J.n_t);
  BlockDiagonal3 D = bdiag3_extract(J.H);
  for (int b = 0; b < D.n_blocks; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Hb(3 * b + i, 3 * b + j) = D.block(b)[3 * i + j];
  Eigen::VectorXd tdiag = Eigen::Map<const Eigen::VectorXd>(diag_extract(J.T).data(), J.n_p);
  Eigen::MatrixXd ref = J.A.to_dense() +
                        J.C1.to_dense() * Hb.lu().solve(J.C2.to_dense()) -
                        J.Q1.to_dense() * tdiag.cwiseInverse().asDiagonal() * J.Q2.to_dense();
  CHECK((M.S.to_dense() - ref).cwiseAbs().maxCoeff() <=
        1e-13 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("tup build: stick gives zero fixed stress, decoupled gives S1 == A") {
  BlockSystem Js = toy_system(30, 3, ToyMode::stick);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TupPreconditioner Ms = build_tup(Js, cfg);
  for (double v : Ms.S_K) CHECK(v == 0.0);
  CHECK((Ms.S2.to_dense() - Js.T.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  BlockSystem Jd = toy_system(18, 2, ToyMode::decoupled);
  TupPreconditioner Md = build_tup(Jd, cfg);
  CHECK((Md.S1.to_dense() - Jd.A.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  BlockSystem Jm = toy_system(24, 2, ToyMode::mixed);
  TupPreconditioner Mm = build_tup(Jm, cfg);
  Eigen::MatrixXd S1ref =
      Jm.A.to_dense() + Jm.C1.to_dense() * densify_hs(Mm.Hs, Jm.n_t) * Jm.C2.to_dense();
  CHECK((Mm.S1.to_dense() - S1ref).cwiseAbs().maxCoeff() <=
        1e-13 * std::max(1.0, S1ref.cwiseAbs().maxCoeff()));
  Eigen::MatrixXd S2 = Mm.S2.to_dense();
  CHECK((S2 - S2.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * S2.cwiseAbs().maxCoeff());
}

TEST_CASE("fixed_stress_diag matches dense restriction oracle") {
  // scalar case: Q1(:,k) = [a], Q2(k,:) = [b], S1 local = [s] -> ab/s
  CsrMatrix S1 = CsrMatrix::from_triplets(1, 1, {{0, 0, 2.0}});
  CsrMatrix Q1 = CsrMatrix::from_triplets(1, 1, {{0, 0, 3.0}});
  CsrMatrix Q2 = CsrMatrix::from_triplets(1, 1, {{0, 0, 5.0}});
  auto sk = fixed_stress_diag(Q2, S1, Q1);
  CHECK(sk[0] == doctest::Approx(7.5).epsilon(1e-14));

  // stick row (empty Q2 row) -> exactly zero
  CsrMatrix Q2z(1, 1);
  CHECK(fixed_stress_diag(Q2z, S1, Q1)[0] == 0.0);

  // random local problems against brute-force dense indexing
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    int n_u = 12, n_p = 3;
    CsrMatrix S = spd_tridiagonal(n_u, 5.0, -1.0);
    std::vector<CsrMatrix::Triplet> q1t, q2t;
    for (int k = 0; k < n_p; ++k) {
      int base = static_cast<int>(rng() % (n_u - 6));
      for (int r = 0; r < 6; ++r) q1t.push_back({base + r, k, val(rng)});
      if (k != 1) {  // k == 1 is a stick row
        int base2 = static_cast<int>(rng() % (n_u - 5));
        for (int r = 0; r < 5; ++r) q2t.push_back({k, base2 + r, val(rng)});
      }
    }
    CsrMatrix Q1r = CsrMatrix::from_triplets(n_u, n_p, std::move(q1t));
    CsrMatrix Q2r = CsrMatrix::from_triplets(n_p, n_u, std::move(q2t));
    auto got = fixed_stress_diag(Q2r, S, Q1r);
    CHECK(got[1] == 0.0);
    Eigen::MatrixXd Sd = S.to_dense();
    Eigen::MatrixXd Q1d = Q1r.to_dense(), Q2d = Q2r.to_dense();
    for (int k = 0; k < n_p; ++k) {
      if (k == 1) continue;
      std::vector<int> idx;
      for (int i = 0; i < n_u; ++i)
        if (Q1d(i, k) != 0.0 || Q2d(k, i) != 0.0) idx.push_back(i);
      Eigen::MatrixXd Sl(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
      Eigen::VectorXd q1l(static_cast<int>(idx.size())), q2l(static_cast<int>(idx.size()));
      for (size_t a = 0; a < idx.size(); ++a) {
        q1l[static_cast<int>(a)] = Q1d(idx[a], k);
        q2l[static_cast<int>(a)] = Q2d(k, idx[a]);
        for (size_t b = 0; b < idx.size(); ++b)
          Sl(static_cast<int>(a), static_cast<int>(b)) = Sd(idx[a], idx[b]);
      }
      double ref = q2l.dot(Sl.lu().solve(q1l));
      CHECK(got[k] == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact factorization limit: J M^-1 = I and gmres in <= 2 iterations") {
  for (ToyMode mode : {ToyMode::mixed, ToyMode::open_all}) {
    BlockSystem J = toy_system(24, 2, mode, 123);
    PrecondConfig cfg;
    cfg.inner = PrecondConfig::Inner::direct;
    cfg.exact_factorization = true;
    std::mt19937 rng(9);

    TpuPreconditioner M1 = build_tpu(J, cfg);
    BlockVector w = random_block(J, rng);
    BlockVector JMw = J.apply(apply_tpu(M1, J, w));
    double err = 0, scale = 0;
    auto wf = w.flatten();
    auto jf = JMw.flatten();
    for (size_t i = 0; i < wf.size(); ++i) {
      err += (jf[i] - wf[i]) * (jf[i] - wf[i]);
      scale += wf[i] * wf[i];
    }
    CHECK(std::sqrt(err) <= 1e-9 * std::sqrt(scale));

    TupPreconditioner M2 = build_tup(J, cfg);
    BlockVector v2 = apply_tup(M2, J, w);
    BlockVector JM2w = J.apply(v2);
    auto j2 = JM2w.flatten();
    err = 0;
    for (size_t i = 0; i < wf.size(); ++i) err += (j2[i] - wf[i]) * (j2[i] - wf[i]);
    CHECK(std::sqrt(err) <= 1e-9 * std::sqrt(scale));

    BlockSystemOperator Jop(J);
    TpuOperator M1op(M1, J);
    TupOperator M2op(M2, J);
    std::vector<double> b = random_vector(J.total_dimension(), rng);
    auto [x1, s1] = gmres(Jop, &M1op, b, 1e-10);
    CHECK(s1.converged);
    CHECK(s1.iterations <= 2);
    auto [x2, s2] = gmres(Jop, &M2op, b, 1e-10);
    CHECK(s2.converged);
    CHECK(s2.iterations <= 2);
  }
}

TEST_CASE("tpu pressure unit vectors are fixed points") {
  BlockSystem J = toy_system(24, 2, ToyMode::mixed, 321);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(J, cfg);
  CHECK(tpu_pressure_column_residual(J, M) <= 1e-10);
}

TEST_CASE("apply_tpu equals the dense factor product of the block LDU") {
  BlockSystem J = toy_system(21, 2, ToyMode::mixed, 77);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(J, cfg);
  const int nu = J.n_u, nt = J.n_t, np = J.n_p, n = nu + nt + np;

  Eigen::MatrixXd Hinv = densify_hs(M.Hs, nt);
  FunctionOperator tsolv(np, [&](std::span<const double> v) { return M.T_factor.solve(v); });
  Eigen::MatrixXd Tinv = densify(tsolv, np);
  FunctionOperator ssolv(nu, [&](std::span<const double> v) { return M.S_solver.apply(v); });
  Eigen::MatrixXd Sinv = densify(ssolv, nu);
  Eigen::MatrixXd C1 = J.C1.to_dense(), C2 = J.C2.to_dense();
  Eigen::MatrixXd Q1 = J.Q1.to_dense(), Q2 = J.Q2.to_dense();

  // permuted (t,p,u) factors
  Eigen::MatrixXd F1 = Eigen::MatrixXd::Identity(n, n);
  F1.block(0, nt + np, nt, nu) = Hinv * C2;
  F1.block(nt, nt + np, np, nu) = -Tinv * Q2;
  Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(n, n);
  Dm.block(0, 0, nt, nt) = -Hinv;
  Dm.block(nt, nt, np, np) = Tinv;
  Dm.block(nt + np, nt + np, nu, nu) = Sinv;
  Eigen::MatrixXd F3 = Eigen::MatrixXd::Identity(n, n);
  F3.block(nt + np, 0, nu, nt) = C1 * Hinv;
  F3.block(nt + np, nt, nu, np) = -Q1 * Tinv;
  Eigen::MatrixXd Mperm = F1 * Dm * F3;

  // unpermute: natural (u,t,p) <- permuted (t,p,u)
  std::vector<int> nat(static_cast<size_t>(n));
  for (int i = 0; i < nt; ++i) nat[i] = nu + i;
  for (int i = 0; i < np; ++i) nat[static_cast<size_t>(nt) + i] = nu + nt + i;
  for (int i = 0; i < nu; ++i) nat[static_cast<size_t>(nt) + np + i] = i;
  Eigen::MatrixXd Mnat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Mnat(nat[i], nat[j]) = Mperm(i, j);

  TpuOperator Mop(M, J);
  Eigen::MatrixXd Mapp = densify(Mop, n);
  for (int j = 0; j < n; ++j) {
    double cn = Mnat.col(j).norm();
    CHECK((Mapp.col(j) - Mnat.col(j)).norm() <= 1e-11 * std::max(1.0, cn));
  }
}

TEST_CASE("apply_tup and tup_star match their dense factor forms") {
  BlockSystem J = toy_system(21, 2, ToyMode::mixed, 55);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TupPreconditioner M = build_tup(J, cfg);
  const int nu = J.n_u, nt = J.n_t, np = J.n_p, n = nu + nt + np;

  Eigen::MatrixXd Hinv = densify_hs(M.Hs, nt);
  FunctionOperator s1solv(nu, [&](std::span<const double> v) { return M.S1_solver.apply(v); });
  Eigen::MatrixXd S1inv = densify(s1solv, nu);
  FunctionOperator s2solv(np, [&](std::span<const double> v) { return M.s2_solve(v); });
  Eigen::MatrixXd S2inv = densify(s2solv, np);
  Eigen::MatrixXd C1 = J.C1.to_dense(), C2 = J.C2.to_dense();
  Eigen::MatrixXd Q1 = J.Q1.to_dense(), Q2 = J.Q2.to_dense();

  // permuted (t,u,p) ordering
  Eigen::MatrixXd U2inv = Eigen::MatrixXd::Identity(n, n);
  U2inv.block(0, nt, nt, nu) = Hinv * C2;
  U2inv.block(0, nt + nu, nt, np) = -Hinv * C2 * S1inv * Q1;
  U2inv.block(nt, nt + nu, nu, np) = -S1inv * Q1;
  Eigen::MatrixXd Dinv = Eigen::MatrixXd::Zero(n, n);
  Dinv.block(0, 0, nt, nt) = -Hinv;
  Dinv.block(nt, nt, nu, nu) = S1inv;
  Dinv.block(nt + nu, nt + nu, np, np) = S2inv;
  Eigen::MatrixXd L2inv = Eigen::MatrixXd::Identity(n, n);
  L2inv.block(nt, 0, nu, nt) = C1 * Hinv;
  L2inv.block(nt + nu, 0, np, nt) = -Q2 * S1inv * C1 * Hinv;
  L2inv.block(nt + nu, nt, np, nu) = -Q2 * S1inv;

  std::vector<int> nat(static_cast<size_t>(n));
  for (int i = 0; i < nt; ++i) nat[i] = nu + i;
  for (int i = 0; i < nu; ++i) nat[static_cast<size_t>(nt) + i] = i;
  for (int i = 0; i < np; ++i) nat[static_cast<size_t>(nt) + nu + i] = nu + nt + i;

  auto unpermute = [&](const Eigen::MatrixXd& Mp) {
    Eigen::MatrixXd Mn(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Mn(nat[i], nat[j]) = Mp(i, j);
    return Mn;
  };

  Eigen::MatrixXd Mfull = unpermute(U2inv * Dinv * L2inv);
  TupOperator Mop(M, J);
  Eigen::MatrixXd Mapp = densify(Mop, n);
  for (int j = 0; j < n; ++j)
    CHECK((Mapp.col(j) - Mfull.col(j)).norm() <= 1e-11 * std::max(1.0, Mfull.col(j).norm()));

  // incomplete variant: D2^-1 L2^-1 only
  Eigen::MatrixXd Mstar = unpermute(Dinv * L2inv);
  TupOperator Msop(M, J, true);
  Eigen::MatrixXd Msapp = densify(Msop, n);
  for (int j = 0; j < n; ++j)
    CHECK((Msapp.col(j) - Mstar.col(j)).norm() <= 1e-11 * std::max(1.0, Mstar.col(j).norm()));
}

TEST_CASE("tup_star equals tup on decoupled input and w = 0 maps to 0") {
  BlockSystem J = toy_system(18, 2, ToyMode::decoupled);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TupPreconditioner M = build_tup(J, cfg);
  std::mt19937 rng(6);
  BlockVector w = random_block(J, rng);
  BlockVector a = apply_tup(M, J, w);
  BlockVector b = apply_tup_star(M, J, w);
  for (int i = 0; i < J.n_u; ++i) CHECK(a.u[i] == doctest::Approx(b.u[i]).epsilon(1e-13));
  for (int i = 0; i < J.n_t; ++i) CHECK(a.t[i] == doctest::Approx(b.t[i]).epsilon(1e-13));
  for (int i = 0; i < J.n_p; ++i) CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-13));

  BlockVector z(J.n_u, J.n_t, J.n_p);
  BlockVector vz = apply_tup(M, J, z);
  CHECK(vz.norm2() == 0.0);
}

TEST_CASE("inner-solver cost contract: 1 for tpu, 2 for tup, 1 for tup_star") {
  BlockSystem J = toy_system(24, 2, ToyMode::mixed, 11);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M1 = build_tpu(J, cfg);
  TupPreconditioner M2 = build_tup(J, cfg);
  std::mt19937 rng(12);
  BlockVector w = random_block(J, rng);

  M1.S_solver.reset_count();
  apply_tpu(M1, J, w);
  CHECK(M1.S_solver.call_count() == 1);

  M2.S1_solver.reset_count();
  apply_tup(M2, J, w);
  CHECK(M2.S1_solver.call_count() == 2);

  M2.S1_solver.reset_count();
  apply_tup_star(M2, J, w);
  CHECK(M2.S1_solver.call_count() == 1);
}

TEST_CASE("preconditioner applications are linear") {
  BlockSystem J = toy_system(24, 2, ToyMode::mixed, 44);
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::amg;
  cfg.amg.max_coarse = 8;
  TpuPreconditioner M1 = build_tpu(J, cfg);
  TupPreconditioner M2 = build_tup(J, cfg);
  std::mt19937 rng(1);
  std::vector<double> x1 = random_vector(J.total_dimension(), rng);
  std::vector<double> x2 = random_vector(J.total_dimension(), rng);
  double a = 0.7, b = -1.3;
  for (const LinearOperator* op :
       {static_cast<const LinearOperator*>(new TpuOperator(M1, J)),
        static_cast<const LinearOperator*>(new TupOperator(M2, J))}) {
    std::vector<double> mix(x1.size());
    for (size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1[i] + b * x2[i];
    auto y = (*op)(mix);
    auto y1 = (*op)(x1);
    auto y2 = (*op)(x2);
    double err = 0, scale = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      double e = y[i] - (a * y1[i] + b * y2[i]);
      err += e * e;
      scale += y[i] * y[i];
    }
    CHECK(std::sqrt(err) <= 1e-12 * std::max(1.0, std::sqrt(scale)));
    delete op;
  }
}
