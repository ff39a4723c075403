// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/gmres.hpp"

#include <cmath>

#include "fracprec/errors.hpp"

namespace fracprec {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::pair<std::vector<double>, SolveStats> gmres(const LinearOperator& op,
                                                 const LinearOperator* precond,
                                                 std::span<const double> b, double tol,
                                                 int max_iter,
                                                 std::vector<std::vector<double>>* basis_out) {
  const int n = op.dimension();
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("gmres: rhs dimension mismatch");
  if (precond && precond->dimension() != n)
    throw std::invalid_argument("gmres: preconditioner dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("gmres: tol must be positive");

  SolveStats stats;
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  const double beta = norm2(b);
  if (beta == 0.0) {
    stats.converged = true;
    return {x, stats};
  }

  std::vector<std::vector<double>> V;
  V.emplace_back(b.begin(), b.end());
  for (double& v : V[0]) v /= beta;

  // Hessenberg columns after Givens: upper triangular R, plus rotation pairs.
  std::vector<std::vector<double>> R;
  std::vector<double> cs, sn;
  std::vector<double> g{beta};

  auto assemble_solution = [&](int m) {
    // Back substitution R(0:m,0:m) y = g(0:m), then x = M^{-1}(V y).
    std::vector<double> y(static_cast<size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < m; ++j) s -= R[j][i] * y[j];
      if (R[i][i] == 0.0) throw numerical_error("gmres: singular least-squares system");
      y[i] = s / R[i][i];
    }
    std::vector<double> u(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) u[i] += V[j][i] * y[j];
    if (!precond) return u;
    return (*precond)(u);
  };

  auto true_rel_residual = [&](std::span<const double> xc) {
    std::vector<double> Ax = op(xc);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = b[i] - Ax[i];
      s += d * d;
    }
    return std::sqrt(s) / beta;
  };

  int m = 0;
  bool estimate_hit = false;
  while (m < max_iter) {
    std::vector<double> z = precond ? (*precond)(V[m]) : V[m];
    std::vector<double> w = op(z);
    const double wnorm_pre = norm2(w);
    if (!std::isfinite(wnorm_pre))
      throw numerical_error("gmres: non-finite vector in Arnoldi process");

    std::vector<double> h(static_cast<size_t>(m) + 2, 0.0);
    for (int i = 0; i <= m; ++i) {
      double hij = dot(V[i], w);
      h[i] = hij;
      for (int k = 0; k < n; ++k) w[k] -= hij * V[i][k];
    }
    // Selective reorthogonalization: a large cancellation in the first MGS
    // pass signals orthogonality loss beyond the 1e-8 budget.
    if (norm2(w) < 0.70710678118654752 * wnorm_pre) {
      for (int i = 0; i <= m; ++i) {
        double c = dot(V[i], w);
        h[i] += c;
        for (int k = 0; k < n; ++k) w[k] -= c * V[i][k];
      }
    }
    double hnext = norm2(w);
    if (!std::isfinite(hnext)) throw numerical_error("gmres: non-finite Arnoldi norm");
    h[static_cast<size_t>(m) + 1] = hnext;

    const bool happy = hnext <= 1e-14 * std::max(1.0, wnorm_pre);
    if (!happy) {
      std::vector<double> v = w;
      for (double& vi : v) vi /= hnext;
      V.push_back(std::move(v));
    }

    // Apply accumulated Givens rotations to the new column.
    for (int i = 0; i < m; ++i) {
      double t0 = cs[i] * h[i] + sn[i] * h[i + 1];
      double t1 = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t0;
      h[i + 1] = t1;
    }
    double denom = std::hypot(h[m], h[static_cast<size_t>(m) + 1]);
    double c = denom == 0.0 ? 1.0 : h[m] / denom;
    double s = denom == 0.0 ? 0.0 : h[static_cast<size_t>(m) + 1] / denom;
    cs.push_back(c);
    sn.push_back(s);
    h[m] = denom;
    h[static_cast<size_t>(m) + 1] = 0.0;
    R.push_back(std::vector<double>(h.begin(), h.begin() + m + 1));
    double gm = g[m];
    g[m] = c * gm;
    g.push_back(-s * gm);

    ++m;
    double est = std::abs(g[m]) / beta;
    stats.relative_residuals.push_back(est);
    stats.iterations = m;

    if (happy) {
      stats.breakdown = true;
      x = assemble_solution(m);
      double tr = true_rel_residual(x);
      stats.converged = tr <= tol || tr <= 1e-12;
      stats.relative_residuals.back() = tr;
      if (basis_out) *basis_out = V;
      return {x, stats};
    }
    if (est <= tol) {
      x = assemble_solution(m);
      double tr = true_rel_residual(x);
      if (tr <= tol) {
        stats.converged = true;
        stats.relative_residuals.back() = tr;
        if (basis_out) *basis_out = V;
        return {x, stats};
      }
      estimate_hit = true;  // drift: keep iterating on the true residual
    } else if (m % 50 == 0 || estimate_hit) {
      x = assemble_solution(m);
      double tr = true_rel_residual(x);
      if (tr <= tol) {
        stats.converged = true;
        stats.relative_residuals.back() = tr;
        if (basis_out) *basis_out = V;
        return {x, stats};
      }
    }
  }
  x = assemble_solution(m);
  double tr = true_rel_residual(x);
  stats.converged = tr <= tol;
  if (!stats.relative_residuals.empty()) stats.relative_residuals.back() = tr;
  if (basis_out) *basis_out = V;
  return {x, stats};
}

}  // namespace fracprec
