// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/bounds.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "fracprec/dense_eigen.hpp"

namespace fracprec {

namespace {

// Dense |cols|-wise application of a solver callback to the columns of B.
template <typename Solver>
Eigen::MatrixXd apply_columns(const Solver& solve, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd X(B.rows(), B.cols());
  std::vector<double> col(static_cast<size_t>(B.rows()));
  for (int j = 0; j < B.cols(); ++j) {
    for (int i = 0; i < B.rows(); ++i) col[i] = B(i, j);
    std::vector<double> x = solve(col);
    for (int i = 0; i < B.rows(); ++i) X(i, j) = x[i];
  }
  return X;
}

void guard_dimension(const BlockSystem& J) {
  if (J.total_dimension() > kDensifyGuard)
    throw std::invalid_argument("bound check: system exceeds the dense guard (" +
                                std::to_string(kDensifyGuard) + ")");
}

}  // namespace

Eigen::MatrixXd densify_tpu_preconditioned(const BlockSystem& J, const TpuPreconditioner& M) {
  guard_dimension(J);
  BlockSystemOperator Jop(J);
  TpuOperator Mop(M, J);
  FunctionOperator comp(J.total_dimension(), [&](std::span<const double> x) {
    std::vector<double> y(static_cast<size_t>(J.total_dimension()));
    std::vector<double> t(y.size());
    Jop.apply(x, t);
    Mop.apply(t, y);
    return y;
  });
  return densify(comp, J.total_dimension());
}

Eigen::MatrixXd densify_tup_preconditioned(const BlockSystem& J, const TupPreconditioner& M) {
  guard_dimension(J);
  BlockSystemOperator Jop(J);
  TupOperator Mop(M, J);
  FunctionOperator comp(J.total_dimension(), [&](std::span<const double> x) {
    std::vector<double> y(static_cast<size_t>(J.total_dimension()));
    std::vector<double> t(y.size());
    Jop.apply(x, t);
    Mop.apply(t, y);
    return y;
  });
  return densify(comp, J.total_dimension());
}

BoundReport check_prop1(const BlockSystem& J, const TpuPreconditioner& M) {
  guard_dimension(J);
  BoundReport rep;
  rep.variant = "tpu";
  const int nu = J.n_u, nt = J.n_t, np = J.n_p;

  Eigen::MatrixXd Hd = J.H.to_dense();
  Eigen::MatrixXd C1d = J.C1.to_dense();
  Eigen::MatrixXd C2d = J.C2.to_dense();
  Eigen::MatrixXd Q1d = J.Q1.to_dense();
  Eigen::MatrixXd Q2d = J.Q2.to_dense();

  auto hsolve = [&](const std::vector<double>& v) { return M.Hs.solve(v); };
  auto tsolve = [&](const std::vector<double>& v) { return M.T_factor.solve(v); };
  auto ssolve = [&](const std::vector<double>& v) { return M.S_solver.apply(v); };

  // E_H = I_t - H~^-1 H
  Eigen::MatrixXd HinvH = apply_columns(hsolve, Hd);
  Eigen::MatrixXd E_H = Eigen::MatrixXd::Identity(nt, nt) - HinvH;
  // S = A + C1 H~^-1 C2 - Q1 T^-1 Q2 (exact T inside the error measure)
  Eigen::MatrixXd S = J.A.to_dense() + C1d * apply_columns(hsolve, C2d) -
                      Q1d * apply_columns(tsolve, Q2d);
  Eigen::MatrixXd Bs = apply_columns(ssolve, Eigen::MatrixXd::Identity(nu, nu));
  Eigen::MatrixXd E_S = Eigen::MatrixXd::Identity(nu, nu) - Bs * S;

  Eigen::MatrixXd HinvC2 = apply_columns(hsolve, C2d);
  Eigen::MatrixXd BsC1 = Bs * C1d;
  Eigen::MatrixXd Z(nt + nu, nt + nu);
  Z.setZero();
  Z.topLeftCorner(nt, nt) = HinvC2 * BsC1;
  Z.topRightCorner(nt, nu) = -HinvC2;
  Z.bottomLeftCorner(nu, nt) = BsC1;

  rep.eps_H = E_H.norm();
  rep.eps_S = E_S.norm();
  rep.zeta = Z.norm();
  rep.bound_rhs = (1.0 + rep.zeta) * std::max(rep.eps_H, rep.eps_S);

  Eigen::MatrixXd P = densify_tpu_preconditioned(J, M);
  rep.eigenvalues = dense_eigenvalues(P);

  std::vector<double> dev(rep.eigenvalues.size());
  for (size_t i = 0; i < dev.size(); ++i)
    dev[i] = std::abs(rep.eigenvalues[i] - std::complex<double>(1.0, 0.0));
  for (double d : dev)
    if (d <= 1e-8) ++rep.unit_cluster_size;
  // Exclude the n_p-member unit cluster, then bound the rest.
  std::vector<double> sorted = dev;
  std::sort(sorted.begin(), sorted.end());
  bool cluster_ok = rep.unit_cluster_size >= np;
  double worst_rest = 0.0;
  for (size_t i = static_cast<size_t>(np); i < sorted.size(); ++i)
    worst_rest = std::max(worst_rest, sorted[i]);
  rep.max_deviation = worst_rest;
  rep.holds = cluster_ok && worst_rest <= rep.bound_rhs;
  return rep;
}

BoundReport check_prop2(const BlockSystem& J, const TupPreconditioner& M) {
  guard_dimension(J);
  BoundReport rep;
  rep.variant = "tup";
  const int nu = J.n_u, nt = J.n_t, np = J.n_p;

  Eigen::MatrixXd Hd = J.H.to_dense();
  Eigen::MatrixXd C1d = J.C1.to_dense();
  Eigen::MatrixXd C2d = J.C2.to_dense();
  Eigen::MatrixXd Q1d = J.Q1.to_dense();
  Eigen::MatrixXd Q2d = J.Q2.to_dense();

  auto hsolve = [&](const std::vector<double>& v) { return M.Hs.solve(v); };
  auto s1solve = [&](const std::vector<double>& v) { return M.S1_solver.apply(v); };
  auto s2solve = [&](const std::vector<double>& v) { return M.s2_solve(v); };

  Eigen::MatrixXd E_H = Eigen::MatrixXd::Identity(nt, nt) - apply_columns(hsolve, Hd);
  Eigen::MatrixXd B1 = apply_columns(s1solve, Eigen::MatrixXd::Identity(nu, nu));
  Eigen::MatrixXd E_S1 = Eigen::MatrixXd::Identity(nu, nu) - B1 * M.S1.to_dense();
  // S2_hat = T - Q2 S1~^-1 Q1 with the deployed inner operator
  Eigen::MatrixXd S2hat = J.T.to_dense() - Q2d * (B1 * Q1d);
  Eigen::MatrixXd E_S2 =
      Eigen::MatrixXd::Identity(np, np) - apply_columns(s2solve, S2hat);

  Eigen::MatrixXd C1S = B1 * C1d;
  Eigen::MatrixXd C2H = apply_columns(hsolve, C2d);
  Eigen::MatrixXd Q1S = B1 * Q1d;
  Eigen::MatrixXd Q2S = apply_columns(s2solve, Q2d);
  Eigen::MatrixXd IQ = Eigen::MatrixXd::Identity(nu, nu) + Q1S * Q2S;

  const int n = nt + nu + np;
  Eigen::MatrixXd G(n, n);
  G.setZero();
  G.block(0, 0, nt, nt) = C2H * IQ * C1S;
  G.block(0, nt, nt, nu) = -C2H * IQ;
  G.block(0, nt + nu, nt, np) = C2H * Q1S;
  G.block(nt, 0, nu, nt) = IQ * C1S;
  G.block(nt, nt, nu, nu) = -Q1S * Q2S;
  G.block(nt, nt + nu, nu, np) = Q1S;
  G.block(nt + nu, 0, np, nt) = -Q2S * C1S;
  G.block(nt + nu, nt, np, nu) = Q2S;

  rep.eps_H = E_H.norm();
  rep.eps_S1 = E_S1.norm();
  rep.eps_S2 = E_S2.norm();
  rep.gamma = G.norm();
  rep.bound_rhs = (1.0 + rep.gamma) * std::max({rep.eps_H, rep.eps_S1, rep.eps_S2});

  Eigen::MatrixXd P = densify_tup_preconditioned(J, M);
  rep.eigenvalues = dense_eigenvalues(P);
  double worst = 0.0;
  for (const auto& l : rep.eigenvalues) {
    double d = std::abs(l - std::complex<double>(1.0, 0.0));
    worst = std::max(worst, d);
    if (d <= 1e-8) ++rep.unit_cluster_size;
  }
  rep.max_deviation = worst;
  rep.holds = worst <= rep.bound_rhs;
  return rep;
}

double tpu_pressure_column_residual(const BlockSystem& J, const TpuPreconditioner& M) {
  guard_dimension(J);
  const int nu = J.n_u, nt = J.n_t, np = J.n_p;
  BlockSystemOperator Jop(J);
  TpuOperator Mop(M, J);
  // Permuted ordering (t, p, u): probe the pressure block column.
  double max_dev = 0.0;
  std::vector<double> x(static_cast<size_t>(J.total_dimension()));
  std::vector<double> t(x.size()), y(x.size());
  for (int jp = 0; jp < np; ++jp) {
    std::fill(x.begin(), x.end(), 0.0);
    x[static_cast<size_t>(nu) + nt + jp] = 1.0;  // natural slot of pressure dof jp
    Jop.apply(x, t);
    Mop.apply(t, y);
    // Expected in permuted coordinates: [0; e_jp; 0], i.e. natural e_{u.t.p}.
    for (int i = 0; i < J.total_dimension(); ++i) {
      double expect = (i == nu + nt + jp) ? 1.0 : 0.0;
      max_dev = std::max(max_dev, std::abs(y[i] - expect));
    }
  }
  return max_dev;
}

double tup_structure_residual(const BlockSystem& J, const TupPreconditioner& M) {
  guard_dimension(J);
  const int nu = J.n_u, nt = J.n_t, np = J.n_p;
  const int n = nt + nu + np;

  Eigen::MatrixXd Hd = J.H.to_dense();
  Eigen::MatrixXd C1d = J.C1.to_dense();
  Eigen::MatrixXd C2d = J.C2.to_dense();
  Eigen::MatrixXd Q1d = J.Q1.to_dense();
  Eigen::MatrixXd Q2d = J.Q2.to_dense();

  auto hsolve = [&](const std::vector<double>& v) { return M.Hs.solve(v); };
  auto s1solve = [&](const std::vector<double>& v) { return M.S1_solver.apply(v); };
  auto s2solve = [&](const std::vector<double>& v) { return M.s2_solve(v); };

  Eigen::MatrixXd E_H = Eigen::MatrixXd::Identity(nt, nt) - apply_columns(hsolve, Hd);
  Eigen::MatrixXd B1 = apply_columns(s1solve, Eigen::MatrixXd::Identity(nu, nu));
  Eigen::MatrixXd E_S1 = Eigen::MatrixXd::Identity(nu, nu) - B1 * M.S1.to_dense();
  Eigen::MatrixXd S2hat = J.T.to_dense() - Q2d * (B1 * Q1d);
  Eigen::MatrixXd E_S2 = Eigen::MatrixXd::Identity(np, np) - apply_columns(s2solve, S2hat);

  Eigen::MatrixXd C1S = B1 * C1d;
  Eigen::MatrixXd C2H = apply_columns(hsolve, C2d);
  Eigen::MatrixXd Q1S = B1 * Q1d;
  Eigen::MatrixXd Q2S = apply_columns(s2solve, Q2d);
  Eigen::MatrixXd IQ = Eigen::MatrixXd::Identity(nu, nu) + Q1S * Q2S;

  Eigen::MatrixXd G(n, n);
  G.setZero();
  G.block(0, 0, nt, nt) = C2H * IQ * C1S;
  G.block(0, nt, nt, nu) = -C2H * IQ;
  G.block(0, nt + nu, nt, np) = C2H * Q1S;
  G.block(nt, 0, nu, nt) = IQ * C1S;
  G.block(nt, nt, nu, nu) = -Q1S * Q2S;
  G.block(nt, nt + nu, nu, np) = Q1S;
  G.block(nt + nu, 0, np, nt) = -Q2S * C1S;
  G.block(nt + nu, nt, np, nu) = Q2S;

  Eigen::MatrixXd E2(n, n);
  E2.setZero();
  E2.block(0, 0, nt, nt) = E_H;
  E2.block(nt, nt, nu, nu) = E_S1;
  E2.block(nt + nu, nt + nu, np, np) = E_S2;

  Eigen::MatrixXd expected =
      Eigen::MatrixXd::Identity(n, n) + (G - Eigen::MatrixXd::Identity(n, n)) * E2;

  // Permuted dense preconditioned matrix (t, u, p ordering).
  Eigen::MatrixXd Pn = densify_tup_preconditioned(J, M);
  std::vector<int> perm(static_cast<size_t>(n));  // permuted index -> natural index
  for (int i = 0; i < nt; ++i) perm[i] = nu + i;
  for (int i = 0; i < nu; ++i) perm[static_cast<size_t>(nt) + i] = i;
  for (int i = 0; i < np; ++i) perm[static_cast<size_t>(nt) + nu + i] = nu + nt + i;
  double max_dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      max_dev = std::max(max_dev, std::abs(Pn(perm[i], perm[j]) - expected(i, j)));
  return max_dev;
}

std::string BoundReport::to_json() const {
  nlohmann::json j;
  j["variant"] = variant;
  j["eps_H"] = eps_H;
  if (variant == "tpu") {
    j["eps_S"] = eps_S;
    j["zeta"] = zeta;
  } else {
    j["eps_S1"] = eps_S1;
    j["eps_S2"] = eps_S2;
    j["gamma"] = gamma;
  }
  j["bound_rhs"] = bound_rhs;
  j["max_deviation"] = max_deviation;
  j["unit_cluster_size"] = unit_cluster_size;
  j["holds"] = holds;
  j["n_eigenvalues"] = eigenvalues.size();
  return j.dump(2);
}

void BoundReport::write_eigenvalues_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::invalid_argument("cannot write eigenvalue csv: " + path);
  std::fprintf(f, "re,im\n");
  for (const auto& l : eigenvalues) std::fprintf(f, "%.17g,%.17g\n", l.real(), l.imag());
  std::fclose(f);
}

}  // namespace fracprec
