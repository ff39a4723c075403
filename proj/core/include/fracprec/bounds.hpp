// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_BOUNDS_HPP
#define FRACPREC_BOUNDS_HPP

#include <complex>
#include <string>
#include <vector>

#include "fracprec/precond.hpp"

namespace fracprec {

/// Dense verification record for the eigenvalue bounds of the two
/// multi-physics reduction preconditioners. Frobenius norms throughout.
struct BoundReport {
  std::string variant;  // "tpu" or "tup"
  double eps_H = 0.0;
  double eps_S = 0.0;   // tpu
  double eps_S1 = 0.0;  // tup
  double eps_S2 = 0.0;  // tup
  double zeta = 0.0;    // tpu coupling norm
  double gamma = 0.0;   // tup coupling norm
  std::vector<std::complex<double>> eigenvalues;
  double bound_rhs = 0.0;
  double max_deviation = 0.0;    // max |lambda-1|, unit cluster excluded for tpu
  int unit_cluster_size = 0;     // eigenvalues with |lambda-1| <= 1e-8
  bool holds = false;

  std::string to_json() const;
  void write_eigenvalues_csv(const std::string& path) const;
};

/// t-p-u bound: >= n_p eigenvalues at 1, remaining within
/// (1+zeta)*max(eps_H, eps_S). Error matrices use the deployed inner
/// operator and the exact T factor.
BoundReport check_prop1(const BlockSystem& J, const TpuPreconditioner& M);

/// t-u-p bound: all eigenvalues within (1+gamma)*max(eps_H, eps_S1, eps_S2).
BoundReport check_prop2(const BlockSystem& J, const TupPreconditioner& M);

/// Max entrywise deviation of the second block column of the permuted
/// t-p-u preconditioned matrix from [0; I_p; 0].
double tpu_pressure_column_residual(const BlockSystem& J, const TpuPreconditioner& M);

/// Max entrywise deviation of the dense t-u-p preconditioned matrix from
/// I + (G - I) blkdiag(E_H, E_S1, E_S2).
double tup_structure_residual(const BlockSystem& J, const TupPreconditioner& M);

/// Dense preconditioned operators (natural ordering), for spectra and tests.
Eigen::MatrixXd densify_tpu_preconditioned(const BlockSystem& J, const TpuPreconditioner& M);
Eigen::MatrixXd densify_tup_preconditioned(const BlockSystem& J, const TupPreconditioner& M);

}  // namespace fracprec

#endif
