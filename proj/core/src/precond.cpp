// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/precond.hpp"

#include <cmath>
#include <cstdio>

#include "fracprec/errors.hpp"
#include "fracprec/threads.hpp"

namespace fracprec {

namespace {

// S~ and S1 share the A + C1 H~^-1 C2 core; the t-p-u variant subtracts the
// diagonally-scaled pressure coupling.
CsrMatrix schur_core(const BlockSystem& J, const HSurrogate& Hs) {
  CsrMatrix HinvC2;
  if (Hs.exact) {
    // Column-by-column solve through the exact factor (small systems only).
    Eigen::MatrixXd dense(J.n_t, J.n_u);
    CsrMatrix C2t = transpose(J.C2);
    for (int j = 0; j < J.n_u; ++j) {
      std::vector<double> col(static_cast<size_t>(J.n_t), 0.0);
      for (int k = C2t.row_offsets[j]; k < C2t.row_offsets[j + 1]; ++k)
        col[C2t.col_indices[k]] = C2t.values[k];
      std::vector<double> x = Hs.exact->solve(col);
      for (int i = 0; i < J.n_t; ++i) dense(i, j) = x[i];
    }
    HinvC2 = CsrMatrix::from_dense(dense, 1e-300);
  } else {
    HinvC2 = spgemm(bdiag3_inverse_csr(Hs.block_diag), J.C2);
  }
  return add_scaled(J.A, spgemm(J.C1, HinvC2), 1.0, 1.0);
}

InnerSolver make_inner(const CsrMatrix& S, const PrecondConfig& cfg,
                       std::span<const std::array<double, 3>> node_coords) {
  InnerSolver inner;
  if (cfg.inner == PrecondConfig::Inner::direct || cfg.exact_factorization) {
    inner.direct.emplace(S, SparseFactor::Kind::general);
  } else {
    std::vector<std::vector<double>> nn;
    if (!node_coords.empty() && static_cast<int>(node_coords.size()) * 3 == S.n_rows)
      nn = rigid_body_modes(node_coords);
    else
      nn = constant_near_null(S.n_rows);
    inner.amg = std::make_shared<AmgHierarchy>(amg_setup(S, nn, cfg.amg));
  }
  return inner;
}

HSurrogate make_h_surrogate(const CsrMatrix& H, bool exact) {
  HSurrogate Hs;
  Hs.block_diag = bdiag3_extract(H);
  if (exact) {
    // Regularize exactly like the block surrogate: shift exact-zero diagonal
    // entries, keep everything else.
    CsrMatrix Hreg = add_scaled(H, CsrMatrix::identity(H.n_rows), 1.0, 0.0);
    std::vector<double> d = diag_extract(H);
    std::vector<CsrMatrix::Triplet> shift;
    for (int b = 0; b < Hs.block_diag.n_blocks; ++b) {
      const double* blk = Hs.block_diag.block(b);
      double dmax = std::max({std::abs(d[3 * b]), std::abs(d[3 * b + 1]), std::abs(d[3 * b + 2])});
      double delta = 1e-10 * std::max(dmax, 1.0);
      for (int li = 0; li < 3; ++li)
        if (d[3 * b + li] == 0.0 && blk[4 * li] != 0.0)
          shift.push_back({3 * b + li, 3 * b + li, delta});
    }
    if (!shift.empty())
      Hreg = add_scaled(Hreg, CsrMatrix::from_triplets(H.n_rows, H.n_cols, shift), 1.0, 1.0);
    // Probe for numerical singularity (the stabilization block is a graph
    // Laplacian in fully closed states); fall back to a full diagonal shift.
    bool ok = false;
    try {
      SparseFactor F(Hreg, SparseFactor::Kind::general);
      std::vector<double> probe(static_cast<size_t>(H.n_rows), 1.0);
      std::vector<double> x = F.solve(probe);
      std::vector<double> r = spmv(Hreg, x);
      double err = 0.0;
      for (size_t i = 0; i < r.size(); ++i) err += (r[i] - 1.0) * (r[i] - 1.0);
      if (std::isfinite(err) && std::sqrt(err) <= 1e-6 * std::sqrt((double)H.n_rows)) {
        Hs.exact = std::move(F);
        ok = true;
      }
    } catch (const numerical_error&) {
    }
    if (!ok) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      double delta = 1e-10 * std::max(dmax, 1.0);
      Hreg = add_scaled(Hreg, CsrMatrix::identity(H.n_rows), 1.0, delta);
      Hs.exact.emplace(Hreg, SparseFactor::Kind::general);
    }
  }
  return Hs;
}

std::vector<double> axpy(std::span<const double> a, std::span<const double> b, double beta) {
  std::vector<double> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + beta * b[i];
  return r;
}

}  // namespace

std::vector<double> InnerSolver::apply(std::span<const double> r) const {
  calls->fetch_add(1, std::memory_order_relaxed);
  if (direct) return direct->solve(r);
  return amg_apply(*amg, r);
}

std::vector<double> HSurrogate::solve(std::span<const double> w) const {
  if (exact) return exact->solve(w);
  return bdiag3_solve(block_diag, w);
}

TpuPreconditioner build_tpu(const BlockSystem& J, const PrecondConfig& cfg,
                            std::span<const std::array<double, 3>> node_coords) {
  J.check_shapes();
  TpuPreconditioner M;
  M.Hs = make_h_surrogate(J.H, cfg.exact_factorization);
  M.T_diag = diag_extract(J.T);
  for (int i = 0; i < J.n_p; ++i)
    if (M.T_diag[i] == 0.0)
      throw numerical_error("build_tpu: singular diagonal entry of T at row " +
                            std::to_string(i));
  M.T_factor = SparseFactor(J.T, SparseFactor::Kind::spd);

  CsrMatrix core = schur_core(J, M.Hs);
  if (cfg.exact_factorization) {
    // Exact T^-1 inside the Schur complement: S = A + C1 H^-1 C2 - Q1 T^-1 Q2.
    Eigen::MatrixXd TinvQ2(J.n_p, J.n_u);
    CsrMatrix Q2t = transpose(J.Q2);
    for (int j = 0; j < J.n_u; ++j) {
      std::vector<double> col(static_cast<size_t>(J.n_p), 0.0);
      for (int k = Q2t.row_offsets[j]; k < Q2t.row_offsets[j + 1]; ++k)
        col[Q2t.col_indices[k]] = Q2t.values[k];
      std::vector<double> x = M.T_factor.solve(col);
      for (int i = 0; i < J.n_p; ++i) TinvQ2(i, j) = x[i];
    }
    M.S = add_scaled(core, spgemm(J.Q1, CsrMatrix::from_dense(TinvQ2, 1e-300)), 1.0, -1.0);
  } else {
    std::vector<double> tinv(M.T_diag.size());
    for (size_t i = 0; i < tinv.size(); ++i) tinv[i] = 1.0 / M.T_diag[i];
    M.S = add_scaled(core, spgemm(J.Q1, scale_rows(J.Q2, tinv)), 1.0, -1.0);
  }
  M.S_solver = make_inner(M.S, cfg, node_coords);
  return M;
}

BlockVector apply_tpu(const TpuPreconditioner& M, const BlockSystem& J, const BlockVector& w) {
  if (w.dimension() != J.total_dimension())
    throw std::invalid_argument("apply_tpu: dimension mismatch");
  BlockVector v(J.n_u, J.n_t, J.n_p);
  std::vector<double> t_p = M.T_factor.solve(w.p);
  std::vector<double> t_t = M.Hs.solve(w.t);
  std::vector<double> t_u = axpy(axpy(w.u, spmv(J.C1, t_t), 1.0), spmv(J.Q1, t_p), -1.0);
  v.u = M.S_solver.apply(t_u);
  std::vector<double> s_p = spmv(J.Q2, v.u);
  std::vector<double> s_t = spmv(J.C2, v.u);
  v.p = axpy(t_p, M.T_factor.solve(s_p), -1.0);
  v.t = axpy(M.Hs.solve(s_t), t_t, -1.0);
  return v;
}

TupPreconditioner build_tup(const BlockSystem& J, const PrecondConfig& cfg,
                            std::span<const std::array<double, 3>> node_coords) {
  J.check_shapes();
  TupPreconditioner M;
  M.Hs = make_h_surrogate(J.H, cfg.exact_factorization);
  M.S1 = schur_core(J, M.Hs);
  M.S1_solver = make_inner(M.S1, cfg, node_coords);

  M.S_K = fixed_stress_diag(J.Q2, M.S1, J.Q1);
  std::vector<CsrMatrix::Triplet> sk;
  for (int k = 0; k < J.n_p; ++k)
    if (M.S_K[k] != 0.0) sk.push_back({k, k, M.S_K[k]});
  M.S2 = add_scaled(J.T, CsrMatrix::from_triplets(J.n_p, J.n_p, std::move(sk)), 1.0, -1.0);
  try {
    M.S2_factor = SparseFactor(M.S2, SparseFactor::Kind::general);
  } catch (const numerical_error&) {
    throw numerical_error("build_tup: singular S~2 factor (indefinite second-level Schur)");
  }

  if (cfg.exact_factorization) {
    // Densified exact S2 = T - Q2 S1^-1 Q1 through the direct S1 factor.
    Eigen::MatrixXd S2d = J.T.to_dense();
    CsrMatrix Q1t = transpose(J.Q1);
    for (int k = 0; k < J.n_p; ++k) {
      std::vector<double> q1col(static_cast<size_t>(J.n_u), 0.0);
      for (int e = Q1t.row_offsets[k]; e < Q1t.row_offsets[k + 1]; ++e)
        q1col[Q1t.col_indices[e]] = Q1t.values[e];
      std::vector<double> x = M.S1_solver.direct->solve(q1col);
      std::vector<double> col = spmv(J.Q2, x);
      for (int i = 0; i < J.n_p; ++i) S2d(i, k) -= col[i];
    }
    M.S2_exact.emplace(S2d);
  }
  return M;
}

std::vector<double> TupPreconditioner::s2_solve(std::span<const double> w) const {
  if (S2_exact) {
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    Eigen::VectorXd x = S2_exact->solve(rhs);
    return std::vector<double>(x.data(), x.data() + x.size());
  }
  return S2_factor.solve(w);
}

BlockVector apply_tup(const TupPreconditioner& M, const BlockSystem& J, const BlockVector& w) {
  if (w.dimension() != J.total_dimension())
    throw std::invalid_argument("apply_tup: dimension mismatch");
  BlockVector v(J.n_u, J.n_t, J.n_p);
  std::vector<double> t_t = M.Hs.solve(w.t);
  std::vector<double> t_u = axpy(w.u, spmv(J.C1, t_t), 1.0);
  std::vector<double> s_u = M.S1_solver.apply(t_u);
  std::vector<double> t_p = axpy(w.p, spmv(J.Q2, s_u), -1.0);
  v.p = M.s2_solve(t_p);
  std::vector<double> t_u2 = spmv(J.Q1, v.p);
  std::vector<double> v_u2 = M.S1_solver.apply(t_u2);
  v.u = axpy(s_u, v_u2, -1.0);
  std::vector<double> s_t = spmv(J.C2, v.u);
  v.t = axpy(M.Hs.solve(s_t), t_t, -1.0);
  return v;
}

BlockVector apply_tup_star(const TupPreconditioner& M, const BlockSystem& J,
                           const BlockVector& w) {
  if (w.dimension() != J.total_dimension())
    throw std::invalid_argument("apply_tup_star: dimension mismatch");
  BlockVector v(J.n_u, J.n_t, J.n_p);
  std::vector<double> t_t = M.Hs.solve(w.t);
  std::vector<double> t_u = axpy(w.u, spmv(J.C1, t_t), 1.0);
  v.u = M.S1_solver.apply(t_u);
  v.p = M.s2_solve(axpy(w.p, spmv(J.Q2, v.u), -1.0));
  for (size_t i = 0; i < t_t.size(); ++i) v.t[i] = -t_t[i];
  return v;
}

std::vector<double> fixed_stress_diag(const CsrMatrix& Q2, const CsrMatrix& S1,
                                      const CsrMatrix& Q1) {
  if (Q1.n_cols != Q2.n_rows || Q1.n_rows != Q2.n_cols || S1.n_rows != Q1.n_rows ||
      S1.n_rows != S1.n_cols)
    throw std::invalid_argument("fixed_stress_diag: inconsistent shapes");
  const int n_p = Q1.n_cols;
  CsrMatrix Q1t = transpose(Q1);
  std::vector<double> sk(static_cast<size_t>(n_p), 0.0);
  std::atomic<int> warned{0};
  parallel_for(n_p, [&](int k) {
    const int q2b = Q2.row_offsets[k], q2e = Q2.row_offsets[k + 1];
    if (q2b == q2e) return;  // stick element: no displacement-flux coupling
    const int q1b = Q1t.row_offsets[k], q1e = Q1t.row_offsets[k + 1];
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(q2e - q2b + q1e - q1b));
    idx.insert(idx.end(), Q1t.col_indices.begin() + q1b, Q1t.col_indices.begin() + q1e);
    idx.insert(idx.end(), Q2.col_indices.begin() + q2b, Q2.col_indices.begin() + q2e);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    Eigen::MatrixXd Sloc = restrict_submatrix(S1, idx, idx);
    Eigen::VectorXd q1loc = Eigen::VectorXd::Zero(static_cast<int>(idx.size()));
    Eigen::VectorXd q2loc = Eigen::VectorXd::Zero(static_cast<int>(idx.size()));
    for (int e = q1b; e < q1e; ++e) {
      auto pos = std::lower_bound(idx.begin(), idx.end(), Q1t.col_indices[e]) - idx.begin();
      q1loc[static_cast<int>(pos)] = Q1t.values[e];
    }
    for (int e = q2b; e < q2e; ++e) {
      auto pos = std::lower_bound(idx.begin(), idx.end(), Q2.col_indices[e]) - idx.begin();
      q2loc[static_cast<int>(pos)] = Q2.values[e];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Sloc);
    if (!lu.isInvertible()) {
      warned.store(1, std::memory_order_relaxed);
      return;  // decoupled element, entry stays 0
    }
    sk[k] = q2loc.dot(lu.solve(q1loc));
  });
  if (warned.load())
    std::fprintf(stderr, "fixed_stress_diag: singular local block(s), entries set to 0\n");
  return sk;
}

void TpuOperator::apply(std::span<const double> x, std::span<double> y) const {
  BlockVector w = BlockVector::split(x, J_->n_u, J_->n_t, J_->n_p);
  std::vector<double> r = apply_tpu(*M_, *J_, w).flatten();
  std::copy(r.begin(), r.end(), y.begin());
}

void TupOperator::apply(std::span<const double> x, std::span<double> y) const {
  BlockVector w = BlockVector::split(x, J_->n_u, J_->n_t, J_->n_p);
  std::vector<double> r =
      star_ ? apply_tup_star(*M_, *J_, w).flatten() : apply_tup(*M_, *J_, w).flatten();
  std::copy(r.begin(), r.end(), y.begin());
}

}  // namespace fracprec
