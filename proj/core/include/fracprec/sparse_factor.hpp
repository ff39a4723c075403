// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_SPARSE_FACTOR_HPP
#define FRACPREC_SPARSE_FACTOR_HPP

#include <memory>
#include <span>
#include <vector>

#include "fracprec/csr.hpp"

namespace fracprec {

/// Exact sparse direct factorization with a fill-reducing ordering.
/// SPD-tagged matrices take the simplicial LDL^T (AMD) route; general ones
/// go through sparse LU (COLAMD), which also covers symmetric indefinite
/// systems.
class SparseFactor {
 public:
  enum class Kind { spd, general };

  SparseFactor() = default;
  SparseFactor(const CsrMatrix& A, Kind kind);

  /// Throws numerical_error if the factorization failed (singular matrix).
  explicit operator bool() const { return ok_; }

  std::vector<double> solve(std::span<const double> b) const;
  int dimension() const { return n_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  int n_ = 0;
  bool ok_ = false;
};

}  // namespace fracprec

#endif
