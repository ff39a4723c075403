// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_AMG_HPP
#define FRACPREC_AMG_HPP

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fracprec/csr.hpp"
#include "fracprec/sparse_factor.hpp"

namespace fracprec {

struct AmgConfig {
  double strength_threshold = 0.08;
  int max_coarse = 100;
  int pre_sweeps = 1;
  int post_sweeps = 1;
  enum class Smoother { weighted_jacobi, sgs };
  Smoother smoother = Smoother::sgs;
  bool prolongation_smoothing = true;  // one damped-Jacobi step, omega = 2/3
  int cycles_per_apply = 1;            // V-cycles per application
  double jacobi_omega = 2.0 / 3.0;
  double stall_ratio = 0.9;  // stop coarsening when n_coarse > ratio * n_fine
  int max_levels = 25;
};

struct AmgLevel {
  CsrMatrix A;
  CsrMatrix P;  // prolongation from this level to the previous finer one
  std::vector<double> smoother_diag;
  // Aggregation bookkeeping (coarse levels only): aggregate id per fine row
  // (-1 for excluded isolated rows) and coarse-dof offsets per aggregate.
  std::vector<int> fine_aggregate;
  std::vector<int> aggregate_offsets;
};

/// Aggregation-based multigrid hierarchy: greedy aggregation over the
/// strength graph, tentative prolongation from the near-null vectors with
/// per-aggregate QR, optional prolongation smoothing, Galerkin coarse
/// operators, direct solve on the coarsest level.
struct AmgHierarchy {
  std::vector<AmgLevel> levels;  // levels[0] is the finest
  Eigen::FullPivLU<Eigen::MatrixXd> coarse_factor;  // used when coarsest is small
  std::optional<SparseFactor> coarse_sparse;        // fallback after a coarsening stall
  std::vector<std::vector<double>> near_null;       // fine-level vectors
  AmgConfig config;

  int fine_dimension() const { return levels.empty() ? 0 : levels.front().A.n_rows; }
  int num_levels() const { return static_cast<int>(levels.size()); }
};

AmgHierarchy amg_setup(const CsrMatrix& A, const std::vector<std::vector<double>>& near_null,
                       const AmgConfig& config);

/// cycles_per_apply V-cycles from the zero initial guess: a fixed linear
/// operator per hierarchy.
std::vector<double> amg_apply(const AmgHierarchy& h, std::span<const double> r);

/// Near-null helpers: the constant vector, and the 6 rigid-body modes of a
/// displacement space with 3 dofs per node (node-contiguous ordering).
std::vector<std::vector<double>> constant_near_null(int n);
std::vector<std::vector<double>> rigid_body_modes(std::span<const std::array<double, 3>> coords);

}  // namespace fracprec

#endif
