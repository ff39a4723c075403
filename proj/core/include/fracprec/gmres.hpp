// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_GMRES_HPP
#define FRACPREC_GMRES_HPP

#include <span>
#include <utility>
#include <vector>

#include "fracprec/operator.hpp"

namespace fracprec {

struct SolveStats {
  int iterations = 0;
  /// Arnoldi residual estimates, one per iteration; the final entry is the
  /// recomputed true residual. Non-increasing for full GMRES.
  std::vector<double> relative_residuals;
  bool converged = false;
  bool breakdown = false;
};

/// Right-preconditioned full (non-restarted) GMRES, zero initial guess.
/// Arnoldi via modified Gram-Schmidt with one selective reorthogonalization
/// pass, least squares via Givens rotations. Convergence is declared on
/// ||b - J x|| <= tol * ||b||, with the true residual recomputed at exit and
/// every 50 iterations as a drift guard.
std::pair<std::vector<double>, SolveStats> gmres(const LinearOperator& op,
                                                 const LinearOperator* precond,
                                                 std::span<const double> b, double tol,
                                                 int max_iter = 500,
                                                 std::vector<std::vector<double>>* basis_out = nullptr);

}  // namespace fracprec

#endif
