// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/block.hpp"

#include <cmath>

#include "fracprec/errors.hpp"

namespace fracprec {

std::vector<double> BlockVector::flatten() const {
  std::vector<double> x;
  x.reserve(u.size() + t.size() + p.size());
  x.insert(x.end(), u.begin(), u.end());
  x.insert(x.end(), t.begin(), t.end());
  x.insert(x.end(), p.begin(), p.end());
  return x;
}

BlockVector BlockVector::split(std::span<const double> x, int n_u, int n_t, int n_p) {
  if (static_cast<int>(x.size()) != n_u + n_t + n_p)
    throw std::invalid_argument("BlockVector::split: dimension mismatch");
  BlockVector v;
  v.u.assign(x.begin(), x.begin() + n_u);
  v.t.assign(x.begin() + n_u, x.begin() + n_u + n_t);
  v.p.assign(x.begin() + n_u + n_t, x.end());
  return v;
}

double BlockVector::norm2() const {
  double s = 0.0;
  for (double v : u) s += v * v;
  for (double v : t) s += v * v;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

void BlockSystem::check_shapes() const {
  auto expect = [](const CsrMatrix& M, int r, int c, const char* name) {
    if (M.n_rows != r || M.n_cols != c)
      throw std::invalid_argument(std::string("BlockSystem: bad shape for block ") + name);
  };
  expect(A, n_u, n_u, "A");
  expect(C1, n_u, n_t, "C1");
  expect(Q1, n_u, n_p, "Q1");
  expect(C2, n_t, n_u, "C2");
  expect(H, n_t, n_t, "H");
  expect(Q2, n_p, n_u, "Q2");
  expect(T, n_p, n_p, "T");
  if (F_u.n_rows > 0) expect(F_u, n_p, n_u, "F_u");
  if (n_t != 3 * n_p) throw std::invalid_argument("BlockSystem: n_t must equal 3*n_p");
}

BlockVector BlockSystem::apply(const BlockVector& x) const {
  BlockVector y(n_u, n_t, n_p);
  std::vector<double> a = spmv(A, x.u);
  std::vector<double> b = spmv(C1, x.t);
  std::vector<double> c = spmv(Q1, x.p);
  for (int i = 0; i < n_u; ++i) y.u[i] = a[i] + b[i] + c[i];
  std::vector<double> d = spmv(C2, x.u);
  std::vector<double> e = spmv(H, x.t);
  for (int i = 0; i < n_t; ++i) y.t[i] = d[i] - e[i];
  std::vector<double> f = spmv(Q2, x.u);
  std::vector<double> g = spmv(T, x.p);
  for (int i = 0; i < n_p; ++i) y.p[i] = f[i] + g[i];
  return y;
}

void BlockSystemOperator::apply(std::span<const double> x, std::span<double> y) const {
  BlockVector v = BlockVector::split(x, J_->n_u, J_->n_t, J_->n_p);
  std::vector<double> r = J_->apply(v).flatten();
  std::copy(r.begin(), r.end(), y.begin());
}

}  // namespace fracprec
