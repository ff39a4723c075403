// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/sparse_factor.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "fracprec/errors.hpp"

namespace fracprec {

namespace {

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& A) {
  Eigen::SparseMatrix<double> M(A.n_rows, A.n_cols);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.col_indices.size());
  for (int i = 0; i < A.n_rows; ++i)
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      trips.emplace_back(i, A.col_indices[k], A.values[k]);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

}  // namespace

struct SparseFactor::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::AMDOrdering<int>>
      ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  Kind kind = Kind::general;
};

SparseFactor::SparseFactor(const CsrMatrix& A, Kind kind) {
  if (A.n_rows != A.n_cols) throw std::invalid_argument("SparseFactor: matrix must be square");
  n_ = A.n_rows;
  impl_ = std::make_shared<Impl>();
  impl_->kind = kind;
  Eigen::SparseMatrix<double> M = to_eigen(A);
  if (kind == Kind::spd) {
    impl_->ldlt.compute(M);
    if (impl_->ldlt.info() != Eigen::Success)
      throw numerical_error("SparseFactor: LDLT factorization failed (matrix not SPD?)");
  } else {
    impl_->lu.compute(M);
    if (impl_->lu.info() != Eigen::Success)
      throw numerical_error("SparseFactor: sparse LU factorization failed (singular matrix?)");
  }
  ok_ = true;
}

std::vector<double> SparseFactor::solve(std::span<const double> b) const {
  if (!ok_) throw numerical_error("SparseFactor::solve on an empty factor");
  if (static_cast<int>(b.size()) != n_)
    throw std::invalid_argument("SparseFactor::solve: dimension mismatch");
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n_);
  Eigen::VectorXd x;
  if (impl_->kind == Kind::spd)
    x = impl_->ldlt.solve(rhs);
  else
    x = impl_->lu.solve(rhs);
  return std::vector<double>(x.data(), x.data() + n_);
}

}  // namespace fracprec
