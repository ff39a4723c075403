// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_PRECOND_HPP
#define FRACPREC_PRECOND_HPP

#include <array>
#include <atomic>
#include <memory>
#include <optional>
#include <span>

#include "fracprec/amg.hpp"
#include "fracprec/block.hpp"
#include "fracprec/sparse_factor.hpp"

namespace fracprec {

struct PrecondConfig {
  enum class Variant { tpu, tup, tup_star };
  enum class Inner { amg, direct };
  Variant variant = Variant::tup;
  Inner inner = Inner::amg;
  AmgConfig amg;
  /// Exact-factorization limit (small systems only): the block-diagonal
  /// surrogate is replaced by a factorization of the regularized full H, the
  /// Schur complements use exact inner inverses, and for t-u-p the
  /// fixed-stress surrogate is replaced by the densified exact S2.
  bool exact_factorization = false;
};

/// Shared machinery: H-surrogate solve plus an instrumented inner solver
/// (AMG or direct) for the displacement-space Schur complement.
struct InnerSolver {
  std::shared_ptr<AmgHierarchy> amg;
  std::optional<SparseFactor> direct;
  std::shared_ptr<std::atomic<long>> calls = std::make_shared<std::atomic<long>>(0);

  std::vector<double> apply(std::span<const double> r) const;
  long call_count() const { return calls->load(); }
  void reset_count() const { calls->store(0); }
};

struct HSurrogate {
  BlockDiagonal3 block_diag;
  std::optional<SparseFactor> exact;  // regularized full H when requested

  std::vector<double> solve(std::span<const double> w) const;
};

/// t-p-u reduction preconditioner (M1): tractions and pressures are reduced
/// simultaneously onto the displacement space.
struct TpuPreconditioner {
  HSurrogate Hs;
  SparseFactor T_factor;       // exact T
  std::vector<double> T_diag;  // diagonal surrogate used inside S~
  CsrMatrix S;                 // S~ = A + C1 H~^-1 C2 - Q1 T~^-1 Q2
  InnerSolver S_solver;
};

/// t-u-p reduction preconditioner (M2): tractions, then displacements, then
/// pressures; the second-level Schur complement is approximated by the
/// algebraic fixed-stress diagonal.
struct TupPreconditioner {
  HSurrogate Hs;
  CsrMatrix S1;  // A + C1 H~^-1 C2
  InnerSolver S1_solver;
  std::vector<double> S_K;  // fixed-stress diagonal
  CsrMatrix S2;             // S~2 = T - diag(S_K)
  SparseFactor S2_factor;
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> S2_exact;  // densified exact S2

  std::vector<double> s2_solve(std::span<const double> w) const;
};

TpuPreconditioner build_tpu(const BlockSystem& J, const PrecondConfig& cfg,
                            std::span<const std::array<double, 3>> node_coords = {});
BlockVector apply_tpu(const TpuPreconditioner& M, const BlockSystem& J, const BlockVector& w);

TupPreconditioner build_tup(const BlockSystem& J, const PrecondConfig& cfg,
                            std::span<const std::array<double, 3>> node_coords = {});
BlockVector apply_tup(const TupPreconditioner& M, const BlockSystem& J, const BlockVector& w);
/// Incomplete variant: D2^-1 L2^-1 only (one inner call per application).
BlockVector apply_tup_star(const TupPreconditioner& M, const BlockSystem& J,
                           const BlockVector& w);

/// Algebraic fixed-stress diagonal: [S_K]_k = Q2(k,:) S1(K,K)^-1 Q1(:,k)
/// over the union K of the sparsity of Q1 column k and Q2 row k; zero when
/// the Q2 row is empty, zero with a warning when the local block is singular.
std::vector<double> fixed_stress_diag(const CsrMatrix& Q2, const CsrMatrix& S1,
                                      const CsrMatrix& Q1);

/// Preconditioner application as a LinearOperator on flattened vectors.
class TpuOperator : public LinearOperator {
 public:
  TpuOperator(const TpuPreconditioner& M, const BlockSystem& J) : M_(&M), J_(&J) {}
  int dimension() const override { return J_->total_dimension(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const TpuPreconditioner* M_;
  const BlockSystem* J_;
};

class TupOperator : public LinearOperator {
 public:
  TupOperator(const TupPreconditioner& M, const BlockSystem& J, bool star = false)
      : M_(&M), J_(&J), star_(star) {}
  int dimension() const override { return J_->total_dimension(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const TupPreconditioner* M_;
  const BlockSystem* J_;
  bool star_;
};

}  // namespace fracprec

#endif
