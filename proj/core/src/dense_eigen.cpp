// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/dense_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <lapacke.h>

#include "fracprec/errors.hpp"
#include "fracprec/threads.hpp"

namespace fracprec {

namespace {

// Inverse-iteration residual ||Mv - lambda v|| for the given eigenvalue.
double eigenpair_residual(const Eigen::MatrixXd& M, std::complex<double> lambda) {
  const int n = static_cast<int>(M.rows());
  Eigen::MatrixXcd Mc = M.cast<std::complex<double>>();
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::complex<double>(unif(rng), unif(rng));
  v.normalize();
  double scale = std::max(1.0, std::abs(lambda));
  std::complex<double> shift =
      lambda + 1e-8 * scale * std::complex<double>(1.0, 1.0) / std::sqrt(2.0);
  Eigen::MatrixXcd Ms = Mc - shift * Eigen::MatrixXcd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Ms);
  for (int it = 0; it < 3; ++it) {
    Eigen::VectorXcd w = lu.solve(v);
    double nw = w.norm();
    if (!std::isfinite(nw) || nw == 0.0) break;
    v = w / nw;
  }
  return (Mc * v - lambda * v).norm();
}

}  // namespace

Eigen::MatrixXd densify(const LinearOperator& op, int n) {
  if (n != op.dimension()) throw std::invalid_argument("densify: dimension mismatch");
  if (n > kDensifyGuard)
    throw std::invalid_argument("densify: dimension exceeds the dense guard (" +
                                std::to_string(kDensifyGuard) + ")");
  Eigen::MatrixXd M(n, n);
  parallel_for(n, [&](int j) {
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    e[j] = 1.0;
    std::vector<double> col = op(e);
    for (int i = 0; i < n; ++i) M(i, j) = col[i];
  });
  return M;
}

std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("dense_eigenvalues: matrix not square");
  const int n = static_cast<int>(M.rows());
  if (n > kDensifyGuard)
    throw std::invalid_argument("dense_eigenvalues: dimension exceeds the dense guard");
  if (n == 0) return {};

  std::vector<double> a(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a[static_cast<size_t>(j) * n + i] = M(i, j);
  std::vector<double> wr(static_cast<size_t>(n)), wi(static_cast<size_t>(n));
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(), wi.data(),
                           nullptr, 1, nullptr, 1);
  if (info > 0) throw numerical_error("dense_eigenvalues: QR iteration failed to converge");
  if (info < 0) throw std::invalid_argument("dense_eigenvalues: bad LAPACK argument");

  std::vector<std::complex<double>> lambda(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) lambda[i] = {wr[i], wi[i]};

  // Backward-error spot check on a sampled eigenpair. Candidates are tried
  // from the largest modulus down; clustered or defective samples fall
  // through to the next candidate.
  double mnorm = M.norm();
  if (mnorm > 0.0) {
    std::vector<int> order(lambda.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return std::abs(lambda[x]) > std::abs(lambda[y]); });
    bool ok = false;
    int tries = std::min<int>(3, n);
    for (int t = 0; t < tries && !ok; ++t) {
      int pick = order[static_cast<size_t>(t) * (lambda.size() - 1) / std::max(1, tries - 1)];
      ok = eigenpair_residual(M, lambda[pick]) <= 1e-8 * mnorm;
    }
    if (!ok)
      throw numerical_error("dense_eigenvalues: sampled eigenpair failed the backward-error check");
  }
  return lambda;
}

Inertia schur_inertia(const CsrMatrix& S) {
  if (S.n_rows != S.n_cols) throw std::invalid_argument("schur_inertia: matrix not square");
  if (S.n_rows > kDensifyGuard)
    throw std::invalid_argument("schur_inertia: dimension exceeds the dense guard");
  const int n = S.n_rows;
  Inertia out;
  if (n == 0) return out;
  Eigen::MatrixXd D = S.to_dense();
  double scale = D.cwiseAbs().maxCoeff();
  bool symmetric = (D - D.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0);
  if (symmetric) {
    std::vector<double> a(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a[static_cast<size_t>(j) * n + i] = D(i, j);
    std::vector<lapack_int> ipiv(static_cast<size_t>(n));
    int info =
        LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, a.data(), n, ipiv.data());
    if (info < 0) throw std::invalid_argument("schur_inertia: bad LAPACK argument");
    double ztol = 1e-12 * std::max(scale, 1.0);
    int k = 0;
    while (k < n) {
      if (ipiv[k] > 0) {
        double d = a[static_cast<size_t>(k) * n + k];
        if (std::abs(d) <= ztol)
          ++out.n_zero;
        else if (d > 0.0)
          ++out.n_pos;
        else
          ++out.n_neg;
        ++k;
      } else {
        // 2x2 pivot block [[a11, a21],[a21, a22]]
        double a11 = a[static_cast<size_t>(k) * n + k];
        double a21 = a[static_cast<size_t>(k) * n + k + 1];
        double a22 = a[static_cast<size_t>(k + 1) * n + k + 1];
        double tr = a11 + a22;
        double det = a11 * a22 - a21 * a21;
        double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        double l1 = tr / 2.0 + disc, l2 = tr / 2.0 - disc;
        for (double l : {l1, l2}) {
          if (std::abs(l) <= ztol)
            ++out.n_zero;
          else if (l > 0.0)
            ++out.n_pos;
          else
            ++out.n_neg;
        }
        k += 2;
      }
    }
    return out;
  }
  std::vector<std::complex<double>> lambda = dense_eigenvalues(D);
  double ztol = 1e-10 * std::max(scale, 1.0);
  for (const auto& l : lambda) {
    if (std::abs(l.real()) <= ztol)
      ++out.n_zero;
    else if (l.real() > 0.0)
      ++out.n_pos;
    else
      ++out.n_neg;
  }
  return out;
}

}  // namespace fracprec
