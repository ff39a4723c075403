// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_CSR_HPP
#define FRACPREC_CSR_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fracprec {

/// Compressed sparse row matrix, 0-based indices, columns sorted and unique
/// within each row. The single sparse format used throughout the project.
struct CsrMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_offsets;  // length n_rows+1, monotone
  std::vector<int> col_indices;
  std::vector<double> values;

  CsrMatrix() : row_offsets(1, 0) {}
  CsrMatrix(int rows, int cols)
      : n_rows(rows), n_cols(cols), row_offsets(static_cast<size_t>(rows) + 1, 0) {}

  int nnz() const { return static_cast<int>(col_indices.size()); }

  /// Value lookup by binary search; zero where absent. For tests and
  /// small-scale inspection, not for kernels.
  double coeff(int i, int j) const;

  /// Validates the structural invariants; throws std::invalid_argument.
  void check_invariants() const;

  static CsrMatrix identity(int n);
  static CsrMatrix zero(int rows, int cols) { return CsrMatrix(rows, cols); }

  struct Triplet {
    int row;
    int col;
    double value;
  };
  /// Builds from unordered triplets; duplicates are summed.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

  Eigen::MatrixXd to_dense() const;
};

/// Block-diagonal matrix with dense 3x3 blocks (row-major per block).
struct BlockDiagonal3 {
  int n_blocks = 0;
  std::vector<double> blocks;  // 9 * n_blocks

  double* block(int k) { return blocks.data() + 9 * static_cast<size_t>(k); }
  const double* block(int k) const { return blocks.data() + 9 * static_cast<size_t>(k); }
};

/// y = A x, sequential left-to-right accumulation within each row.
std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x);

/// y = A^T x.
std::vector<double> spmv_transpose(const CsrMatrix& A, std::span<const double> x);

CsrMatrix transpose(const CsrMatrix& A);

/// C = A B with sorted, deduplicated columns.
CsrMatrix spgemm(const CsrMatrix& A, const CsrMatrix& B);

/// alpha*A + beta*B on the union sparsity pattern (explicit zeros retained).
CsrMatrix add_scaled(const CsrMatrix& A, const CsrMatrix& B, double alpha, double beta);

/// Scales row i of A by s[i].
CsrMatrix scale_rows(const CsrMatrix& A, std::span<const double> s);

/// Extracts the 3x3 diagonal blocks of a square matrix whose dimension is
/// divisible by 3. Exactly-zero diagonal entries get a shift
/// delta*max(|block diag|,1) so isolated blocks stay invertible.
BlockDiagonal3 bdiag3_extract(const CsrMatrix& H, double delta = 1e-10);

/// Per-block 3x3 LU solve with partial pivoting. Throws numerical_error
/// naming the first singular block.
std::vector<double> bdiag3_solve(const BlockDiagonal3& H, std::span<const double> w);

/// Explicit inverse of a BlockDiagonal3 as a CSR matrix (9 entries per block).
CsrMatrix bdiag3_inverse_csr(const BlockDiagonal3& H);

/// Main diagonal; structurally missing entries read as 0.
std::vector<double> diag_extract(const CsrMatrix& T);

/// Dense |rows| x |cols| gather of A entries (zeros where absent).
/// Index sets must be sorted, unique and in range.
Eigen::MatrixXd restrict_submatrix(const CsrMatrix& A, std::span<const int> rows,
                                   std::span<const int> cols);

}  // namespace fracprec

#endif
