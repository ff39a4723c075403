// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_BLOCK_HPP
#define FRACPREC_BLOCK_HPP

#include <span>
#include <vector>

#include "fracprec/csr.hpp"
#include "fracprec/operator.hpp"

namespace fracprec {

/// Natural (u, t, p) partitioning of solution and residual vectors.
struct BlockVector {
  std::vector<double> u, t, p;

  BlockVector() = default;
  BlockVector(int n_u, int n_t, int n_p)
      : u(static_cast<size_t>(n_u), 0.0),
        t(static_cast<size_t>(n_t), 0.0),
        p(static_cast<size_t>(n_p), 0.0) {}

  int dimension() const { return static_cast<int>(u.size() + t.size() + p.size()); }
  std::vector<double> flatten() const;
  static BlockVector split(std::span<const double> x, int n_u, int n_t, int n_p);
  double norm2() const;
};

/// The seven sparse blocks of the coupled Jacobian
///   [ A   C1  Q1 ]
///   [ C2  -H  0  ]
///   [ Q2  0   T  ]
/// plus the flux-derivative part F_u of Q2 kept separately.
struct BlockSystem {
  CsrMatrix A, C1, Q1, C2, H, Q2, T;
  CsrMatrix F_u;
  int n_u = 0, n_t = 0, n_p = 0;

  int total_dimension() const { return n_u + n_t + n_p; }
  void check_shapes() const;

  BlockVector apply(const BlockVector& x) const;
};

/// J as a LinearOperator on flattened (u,t,p) vectors.
class BlockSystemOperator : public LinearOperator {
 public:
  explicit BlockSystemOperator(const BlockSystem& J) : J_(&J) {}
  int dimension() const override { return J_->total_dimension(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const BlockSystem* J_;
};

}  // namespace fracprec

#endif
