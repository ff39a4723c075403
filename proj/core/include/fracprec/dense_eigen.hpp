// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_DENSE_EIGEN_HPP
#define FRACPREC_DENSE_EIGEN_HPP

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fracprec/csr.hpp"
#include "fracprec/operator.hpp"

namespace fracprec {

/// Hard cap for the dense spectral tools.
constexpr int kDensifyGuard = 1500;

/// Column-by-column materialization of an operator, column j = op(e_j).
Eigen::MatrixXd densify(const LinearOperator& op, int n);

/// All eigenvalues of a general real matrix (balancing, Hessenberg
/// reduction, shifted QR with deflation). A sampled eigenpair is verified by
/// inverse iteration to backward error 1e-8*||M||_F.
std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& M);

struct Inertia {
  int n_pos = 0;
  int n_neg = 0;
  int n_zero = 0;
};

/// Eigenvalue real-part sign counts; symmetric input goes through a
/// symmetric-indefinite (Bunch-Kaufman) factorization instead.
Inertia schur_inertia(const CsrMatrix& S);

}  // namespace fracprec

#endif
