// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/csr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "fracprec/errors.hpp"

namespace fracprec {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double CsrMatrix::coeff(int i, int j) const {
  require(i >= 0 && i < n_rows && j >= 0 && j < n_cols, "CsrMatrix::coeff: index out of range");
  auto begin = col_indices.begin() + row_offsets[i];
  auto end = col_indices.begin() + row_offsets[i + 1];
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[static_cast<size_t>(it - col_indices.begin())];
}

void CsrMatrix::check_invariants() const {
  require(n_rows >= 0 && n_cols >= 0, "CsrMatrix: negative dimension");
  require(row_offsets.size() == static_cast<size_t>(n_rows) + 1,
          "CsrMatrix: row_offsets length must be n_rows+1");
  require(row_offsets.front() == 0, "CsrMatrix: row_offsets[0] != 0");
  require(row_offsets.back() == nnz(), "CsrMatrix: row_offsets back != nnz");
  require(col_indices.size() == values.size(), "CsrMatrix: col/value size mismatch");
  for (int i = 0; i < n_rows; ++i) {
    require(row_offsets[i] <= row_offsets[i + 1], "CsrMatrix: row_offsets not monotone");
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      require(col_indices[k] >= 0 && col_indices[k] < n_cols, "CsrMatrix: column out of range");
      if (k > row_offsets[i])
        require(col_indices[k - 1] < col_indices[k],
                "CsrMatrix: columns not strictly increasing within a row");
    }
  }
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix I(n, n);
  I.col_indices.resize(n);
  I.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    I.col_indices[i] = i;
    I.row_offsets[i + 1] = i + 1;
  }
  return I;
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries)
    require(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols,
            "from_triplets: entry out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix A(rows, cols);
  A.col_indices.reserve(entries.size());
  A.values.reserve(entries.size());
  size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < entries.size() && entries[i].row == r) {
      int c = entries[i].col;
      double v = 0.0;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;
        ++i;
      }
      A.col_indices.push_back(c);
      A.values.push_back(v);
    }
    A.row_offsets[r + 1] = static_cast<int>(A.col_indices.size());
  }
  return A;
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
  CsrMatrix A(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()));
  for (int i = 0; i < A.n_rows; ++i) {
    for (int j = 0; j < A.n_cols; ++j) {
      double v = dense(i, j);
      if (std::abs(v) > drop_tol || (drop_tol == 0.0 && v != 0.0)) {
        A.col_indices.push_back(j);
        A.values.push_back(v);
      }
    }
    A.row_offsets[i + 1] = static_cast<int>(A.col_indices.size());
  }
  return A;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n_rows, n_cols);
  for (int i = 0; i < n_rows; ++i)
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) D(i, col_indices[k]) = values[k];
  return D;
}

std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x) {
  require(static_cast<int>(x.size()) == A.n_cols, "spmv: dimension mismatch");
  std::vector<double> y(static_cast<size_t>(A.n_rows));
  for (int i = 0; i < A.n_rows; ++i) {
    double s = 0.0;
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      s += A.values[k] * x[A.col_indices[k]];
    y[i] = s;
  }
  return y;
}

std::vector<double> spmv_transpose(const CsrMatrix& A, std::span<const double> x) {
  require(static_cast<int>(x.size()) == A.n_rows, "spmv_transpose: dimension mismatch");
  std::vector<double> y(static_cast<size_t>(A.n_cols), 0.0);
  for (int i = 0; i < A.n_rows; ++i) {
    double xi = x[i];
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      y[A.col_indices[k]] += A.values[k] * xi;
  }
  return y;
}

CsrMatrix transpose(const CsrMatrix& A) {
  CsrMatrix T(A.n_cols, A.n_rows);
  T.col_indices.resize(A.col_indices.size());
  T.values.resize(A.values.size());
  std::vector<int> count(static_cast<size_t>(A.n_cols), 0);
  for (int c : A.col_indices) ++count[c];
  for (int j = 0; j < A.n_cols; ++j) T.row_offsets[j + 1] = T.row_offsets[j] + count[j];
  std::vector<int> next(T.row_offsets.begin(), T.row_offsets.end() - 1);
  for (int i = 0; i < A.n_rows; ++i)
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) {
      int pos = next[A.col_indices[k]]++;
      T.col_indices[pos] = i;
      T.values[pos] = A.values[k];
    }
  return T;
}

CsrMatrix spgemm(const CsrMatrix& A, const CsrMatrix& B) {
  require(A.n_cols == B.n_rows, "spgemm: dimension mismatch");
  CsrMatrix C(A.n_rows, B.n_cols);
  std::vector<double> acc(static_cast<size_t>(B.n_cols), 0.0);
  std::vector<char> seen(static_cast<size_t>(B.n_cols), 0);
  std::vector<int> touched;
  for (int i = 0; i < A.n_rows; ++i) {
    touched.clear();
    for (int ka = A.row_offsets[i]; ka < A.row_offsets[i + 1]; ++ka) {
      int k = A.col_indices[ka];
      double av = A.values[ka];
      for (int kb = B.row_offsets[k]; kb < B.row_offsets[k + 1]; ++kb) {
        int j = B.col_indices[kb];
        if (!seen[j]) {
          seen[j] = 1;
          acc[j] = 0.0;
          touched.push_back(j);
        }
        acc[j] += av * B.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int j : touched) {
      C.col_indices.push_back(j);
      C.values.push_back(acc[j]);
      seen[j] = 0;
    }
    C.row_offsets[i + 1] = static_cast<int>(C.col_indices.size());
  }
  return C;
}

CsrMatrix add_scaled(const CsrMatrix& A, const CsrMatrix& B, double alpha, double beta) {
  require(A.n_rows == B.n_rows && A.n_cols == B.n_cols, "add_scaled: shape mismatch");
  CsrMatrix C(A.n_rows, A.n_cols);
  C.col_indices.reserve(A.col_indices.size() + B.col_indices.size());
  C.values.reserve(A.values.size() + B.values.size());
  for (int i = 0; i < A.n_rows; ++i) {
    int ka = A.row_offsets[i], ea = A.row_offsets[i + 1];
    int kb = B.row_offsets[i], eb = B.row_offsets[i + 1];
    while (ka < ea || kb < eb) {
      int ca = ka < ea ? A.col_indices[ka] : A.n_cols;
      int cb = kb < eb ? B.col_indices[kb] : B.n_cols;
      if (ca < cb) {
        C.col_indices.push_back(ca);
        C.values.push_back(alpha * A.values[ka++]);
      } else if (cb < ca) {
        C.col_indices.push_back(cb);
        C.values.push_back(beta * B.values[kb++]);
      } else {
        C.col_indices.push_back(ca);
        C.values.push_back(alpha * A.values[ka++] + beta * B.values[kb++]);
      }
    }
    C.row_offsets[i + 1] = static_cast<int>(C.col_indices.size());
  }
  return C;
}

CsrMatrix scale_rows(const CsrMatrix& A, std::span<const double> s) {
  require(static_cast<int>(s.size()) == A.n_rows, "scale_rows: dimension mismatch");
  CsrMatrix C = A;
  for (int i = 0; i < A.n_rows; ++i)
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) C.values[k] *= s[i];
  return C;
}

BlockDiagonal3 bdiag3_extract(const CsrMatrix& H, double delta) {
  require(H.n_rows == H.n_cols, "bdiag3_extract: matrix must be square");
  require(H.n_rows % 3 == 0, "bdiag3_extract: dimension not divisible by 3");
  BlockDiagonal3 D;
  D.n_blocks = H.n_rows / 3;
  D.blocks.assign(9 * static_cast<size_t>(D.n_blocks), 0.0);
  for (int i = 0; i < H.n_rows; ++i) {
    int b = i / 3, li = i % 3;
    for (int k = H.row_offsets[i]; k < H.row_offsets[i + 1]; ++k) {
      int j = H.col_indices[k];
      if (j / 3 == b) D.block(b)[3 * li + (j % 3)] = H.values[k];
    }
  }
  for (int b = 0; b < D.n_blocks; ++b) {
    double* blk = D.block(b);
    double dmax = std::max({std::abs(blk[0]), std::abs(blk[4]), std::abs(blk[8])});
    double shift = delta * std::max(dmax, 1.0);
    for (int li = 0; li < 3; ++li)
      if (blk[4 * li] == 0.0) blk[4 * li] = shift;
  }
  return D;
}

namespace {

// 3x3 LU with partial pivoting; returns false on a singular pivot.
bool lu3_factor(double m[9], int piv[3]) {
  piv[0] = 0;
  piv[1] = 1;
  piv[2] = 2;
  double scale = 0.0;
  for (int i = 0; i < 9; ++i) scale = std::max(scale, std::abs(m[i]));
  if (scale == 0.0) return false;
  for (int c = 0; c < 3; ++c) {
    int p = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[3 * r + c]) > std::abs(m[3 * p + c])) p = r;
    if (p != c) {
      for (int j = 0; j < 3; ++j) std::swap(m[3 * c + j], m[3 * p + j]);
      std::swap(piv[c], piv[p]);
    }
    if (std::abs(m[3 * c + c]) <= 1e-300 * scale || m[3 * c + c] == 0.0) return false;
    for (int r = c + 1; r < 3; ++r) {
      double f = m[3 * r + c] / m[3 * c + c];
      m[3 * r + c] = f;
      for (int j = c + 1; j < 3; ++j) m[3 * r + j] -= f * m[3 * c + j];
    }
  }
  return true;
}

void lu3_solve(const double m[9], const int piv[3], const double b[3], double x[3]) {
  double y[3];
  for (int i = 0; i < 3; ++i) {
    y[i] = b[piv[i]];
    for (int j = 0; j < i; ++j) y[i] -= m[3 * i + j] * y[j];
  }
  for (int i = 2; i >= 0; --i) {
    x[i] = y[i];
    for (int j = i + 1; j < 3; ++j) x[i] -= m[3 * i + j] * x[j];
    x[i] /= m[3 * i + i];
  }
}

}  // namespace

std::vector<double> bdiag3_solve(const BlockDiagonal3& H, std::span<const double> w) {
  require(static_cast<int>(w.size()) == 3 * H.n_blocks, "bdiag3_solve: dimension mismatch");
  std::vector<double> x(w.size());
  for (int b = 0; b < H.n_blocks; ++b) {
    double lu[9];
    std::copy(H.block(b), H.block(b) + 9, lu);
    int piv[3];
    if (!lu3_factor(lu, piv))
      throw numerical_error("bdiag3_solve: singular 3x3 block at index " + std::to_string(b));
    lu3_solve(lu, piv, w.data() + 3 * static_cast<size_t>(b), x.data() + 3 * static_cast<size_t>(b));
  }
  return x;
}

CsrMatrix bdiag3_inverse_csr(const BlockDiagonal3& H) {
  CsrMatrix A(3 * H.n_blocks, 3 * H.n_blocks);
  A.col_indices.resize(9 * static_cast<size_t>(H.n_blocks));
  A.values.resize(9 * static_cast<size_t>(H.n_blocks));
  for (int b = 0; b < H.n_blocks; ++b) {
    double lu[9];
    std::copy(H.block(b), H.block(b) + 9, lu);
    int piv[3];
    if (!lu3_factor(lu, piv))
      throw numerical_error("bdiag3_inverse_csr: singular 3x3 block at index " +
                            std::to_string(b));
    double inv[9];
    for (int c = 0; c < 3; ++c) {
      double e[3] = {0, 0, 0};
      e[c] = 1.0;
      double col[3];
      lu3_solve(lu, piv, e, col);
      for (int r = 0; r < 3; ++r) inv[3 * r + c] = col[r];
    }
    for (int li = 0; li < 3; ++li) {
      int row = 3 * b + li;
      A.row_offsets[row + 1] = A.row_offsets[row] + 3;
      for (int lj = 0; lj < 3; ++lj) {
        A.col_indices[3 * static_cast<size_t>(row) + lj] = 3 * b + lj;
        A.values[3 * static_cast<size_t>(row) + lj] = inv[3 * li + lj];
      }
    }
  }
  return A;
}

std::vector<double> diag_extract(const CsrMatrix& T) {
  require(T.n_rows == T.n_cols, "diag_extract: matrix must be square");
  std::vector<double> d(static_cast<size_t>(T.n_rows), 0.0);
  for (int i = 0; i < T.n_rows; ++i)
    for (int k = T.row_offsets[i]; k < T.row_offsets[i + 1]; ++k)
      if (T.col_indices[k] == i) d[i] = T.values[k];
  return d;
}

Eigen::MatrixXd restrict_submatrix(const CsrMatrix& A, std::span<const int> rows,
                                   std::span<const int> cols) {
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < A.n_rows, "restrict_submatrix: row index out of range");
    if (i > 0) require(rows[i - 1] < rows[i], "restrict_submatrix: rows not sorted unique");
  }
  for (size_t j = 0; j < cols.size(); ++j) {
    require(cols[j] >= 0 && cols[j] < A.n_cols, "restrict_submatrix: col index out of range");
    if (j > 0) require(cols[j - 1] < cols[j], "restrict_submatrix: cols not sorted unique");
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()),
                                            static_cast<int>(cols.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    int k = A.row_offsets[r], e = A.row_offsets[r + 1];
    for (size_t j = 0; j < cols.size() && k < e;) {
      if (A.col_indices[k] < cols[j]) {
        ++k;
      } else if (A.col_indices[k] > cols[j]) {
        ++j;
      } else {
        M(static_cast<int>(i), static_cast<int>(j)) = A.values[k];
        ++k;
        ++j;
      }
    }
  }
  return M;
}

}  // namespace fracprec
