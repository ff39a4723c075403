// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_OPERATOR_HPP
#define FRACPREC_OPERATOR_HPP

#include <functional>
#include <span>
#include <vector>

#include "fracprec/csr.hpp"

namespace fracprec {

/// Deterministic linear vector->vector contract wrapping matrices,
/// preconditioner applications and their compositions.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual int dimension() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> y(static_cast<size_t>(dimension()));
    apply(x, y);
    return y;
  }
};

class CsrOperator : public LinearOperator {
 public:
  explicit CsrOperator(const CsrMatrix& A) : A_(&A) {}
  int dimension() const override { return A_->n_rows; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    std::vector<double> r = spmv(*A_, x);
    std::copy(r.begin(), r.end(), y.begin());
  }

 private:
  const CsrMatrix* A_;
};

class FunctionOperator : public LinearOperator {
 public:
  using Fn = std::function<std::vector<double>(std::span<const double>)>;
  FunctionOperator(int n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  int dimension() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override {
    std::vector<double> r = fn_(x);
    std::copy(r.begin(), r.end(), y.begin());
  }

 private:
  int n_;
  Fn fn_;
};

}  // namespace fracprec

#endif
