// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/amg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "fracprec/errors.hpp"

namespace fracprec {

namespace {

constexpr int kDenseCoarseLimit = 600;

struct StrengthGraph {
  // CSR adjacency of strong off-diagonal connections of (A + A^T)/2.
  std::vector<int> offsets;
  std::vector<int> neighbors;
  std::vector<double> weights;  // |b_ij|
  std::vector<char> isolated;   // diagonal-only rows of the symmetrized matrix
};

StrengthGraph build_strength(const CsrMatrix& A, double theta) {
  CsrMatrix B = add_scaled(A, transpose(A), 0.5, 0.5);
  std::vector<double> d = diag_extract(B);
  StrengthGraph g;
  g.offsets.assign(static_cast<size_t>(A.n_rows) + 1, 0);
  g.isolated.assign(static_cast<size_t>(A.n_rows), 0);
  std::vector<int> cols;
  std::vector<double> w;
  for (int i = 0; i < B.n_rows; ++i) {
    int strong = 0, offdiag = 0;
    for (int k = B.row_offsets[i]; k < B.row_offsets[i + 1]; ++k) {
      int j = B.col_indices[k];
      if (j == i) continue;
      if (B.values[k] != 0.0) ++offdiag;
      double thr = theta * std::sqrt(std::abs(d[i]) * std::abs(d[j]));
      if (std::abs(B.values[k]) > thr) {
        cols.push_back(j);
        w.push_back(std::abs(B.values[k]));
        ++strong;
      }
    }
    g.offsets[i + 1] = static_cast<int>(cols.size());
    if (offdiag == 0) g.isolated[i] = 1;
  }
  g.neighbors = std::move(cols);
  g.weights = std::move(w);
  return g;
}

// Greedy aggregation: BFS-ordered roots seed aggregates of a root plus all
// its unaggregated strong neighbors; leftovers join the strongest
// neighboring aggregate. Returns aggregate id per row (-1 for excluded
// isolated rows) and the aggregate count.
std::pair<std::vector<int>, int> aggregate(const StrengthGraph& g, int n) {
  std::vector<int> agg(static_cast<size_t>(n), -2);  // -2 unvisited, -1 excluded
  for (int i = 0; i < n; ++i)
    if (g.isolated[i]) agg[i] = -1;
  int n_agg = 0;
  std::vector<char> enqueued(static_cast<size_t>(n), 0);
  for (int seed = 0; seed < n; ++seed) {
    if (agg[seed] != -2 || enqueued[seed]) continue;
    std::deque<int> queue{seed};
    enqueued[seed] = 1;
    while (!queue.empty()) {
      int i = queue.front();
      queue.pop_front();
      if (agg[i] == -2) {
        bool all_free = true;
        for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
          if (agg[g.neighbors[k]] >= 0) {
            all_free = false;
            break;
          }
        if (all_free) {
          int id = n_agg++;
          agg[i] = id;
          for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) {
            int j = g.neighbors[k];
            if (agg[j] == -2) agg[j] = id;
          }
        }
      }
      for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) {
        int j = g.neighbors[k];
        if (!enqueued[j]) {
          enqueued[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  // Phase 2: join leftovers to the strongest neighboring aggregate.
  for (int i = 0; i < n; ++i) {
    if (agg[i] != -2) continue;
    int best = -1;
    double best_w = -1.0;
    for (int k = g.offsets[i]; k < g.offsets[i + 1]; ++k) {
      int j = g.neighbors[k];
      if (agg[j] >= 0 && g.weights[k] > best_w) {
        best_w = g.weights[k];
        best = agg[j];
      }
    }
    agg[i] = best >= 0 ? best : n_agg++;
  }
  return {agg, n_agg};
}

void sgs_sweep(const CsrMatrix& A, std::span<const double> diag, std::span<const double> b,
               std::vector<double>& x) {
  const int n = A.n_rows;
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) {
      int j = A.col_indices[k];
      if (j != i) s -= A.values[k] * x[j];
    }
    x[i] = s / diag[i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) {
      int j = A.col_indices[k];
      if (j != i) s -= A.values[k] * x[j];
    }
    x[i] = s / diag[i];
  }
}

void jacobi_sweep(const CsrMatrix& A, std::span<const double> diag, double omega,
                  std::span<const double> b, std::vector<double>& x) {
  std::vector<double> Ax = spmv(A, x);
  for (int i = 0; i < A.n_rows; ++i) x[i] += omega * (b[i] - Ax[i]) / diag[i];
}

std::vector<double> vcycle(const AmgHierarchy& h, size_t level, std::span<const double> b);

std::vector<double> coarse_solve(const AmgHierarchy& h, std::span<const double> b) {
  if (h.coarse_sparse) return h.coarse_sparse->solve(b);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  Eigen::VectorXd x = h.coarse_factor.solve(rhs);
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::vector<double> vcycle(const AmgHierarchy& h, size_t level, std::span<const double> b) {
  const AmgLevel& lvl = h.levels[level];
  if (level + 1 == h.levels.size()) return coarse_solve(h, b);
  const CsrMatrix& A = lvl.A;
  std::vector<double> x(static_cast<size_t>(A.n_rows), 0.0);
  for (int s = 0; s < h.config.pre_sweeps; ++s) {
    if (h.config.smoother == AmgConfig::Smoother::sgs)
      sgs_sweep(A, lvl.smoother_diag, b, x);
    else
      jacobi_sweep(A, lvl.smoother_diag, h.config.jacobi_omega, b, x);
  }
  std::vector<double> Ax = spmv(A, x);
  std::vector<double> r(Ax.size());
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - Ax[i];
  const CsrMatrix& P = h.levels[level + 1].P;
  std::vector<double> rc = spmv_transpose(P, r);
  std::vector<double> ec = vcycle(h, level + 1, rc);
  std::vector<double> Pe = spmv(P, ec);
  for (size_t i = 0; i < x.size(); ++i) x[i] += Pe[i];
  for (int s = 0; s < h.config.post_sweeps; ++s) {
    if (h.config.smoother == AmgConfig::Smoother::sgs)
      sgs_sweep(A, lvl.smoother_diag, b, x);
    else
      jacobi_sweep(A, lvl.smoother_diag, h.config.jacobi_omega, b, x);
  }
  return x;
}

}  // namespace

AmgHierarchy amg_setup(const CsrMatrix& A, const std::vector<std::vector<double>>& near_null,
                       const AmgConfig& config) {
  if (A.n_rows != A.n_cols) throw std::invalid_argument("amg_setup: matrix must be square");
  if (!(config.strength_threshold >= 0.0 && config.strength_threshold < 1.0))
    throw std::invalid_argument("amg_setup: strength_threshold must be in [0,1)");
  if (config.pre_sweeps < 1 || config.post_sweeps < 1)
    throw std::invalid_argument("amg_setup: sweeps must be >= 1");

  AmgHierarchy h;
  h.config = config;
  h.near_null = near_null.empty() ? constant_near_null(A.n_rows) : near_null;
  for (const auto& v : h.near_null)
    if (static_cast<int>(v.size()) != A.n_rows)
      throw std::invalid_argument("amg_setup: near-null vector length mismatch");

  AmgLevel finest;
  finest.A = A;
  finest.smoother_diag = diag_extract(A);
  h.levels.push_back(std::move(finest));
  std::vector<std::vector<double>> nn = h.near_null;

  while (true) {
    AmgLevel& fine = h.levels.back();
    const int n = fine.A.n_rows;
    for (int i = 0; i < n; ++i)
      if (fine.smoother_diag[i] == 0.0)
        throw numerical_error("amg_setup: zero diagonal entry at row " + std::to_string(i));
    if (n <= config.max_coarse || h.num_levels() >= config.max_levels) break;

    StrengthGraph g = build_strength(fine.A, config.strength_threshold);
    auto [agg, n_agg] = aggregate(g, n);
    if (n_agg == 0) break;

    // Tentative prolongation: per-aggregate QR of the near-null restriction.
    const int k = static_cast<int>(nn.size());
    std::vector<std::vector<int>> rows_of(static_cast<size_t>(n_agg));
    for (int i = 0; i < n; ++i)
      if (agg[i] >= 0) rows_of[agg[i]].push_back(i);

    std::vector<int> coarse_offset(static_cast<size_t>(n_agg) + 1, 0);
    std::vector<Eigen::MatrixXd> qs(static_cast<size_t>(n_agg));
    std::vector<Eigen::MatrixXd> coarse_nn_blocks(static_cast<size_t>(n_agg));
    for (int a = 0; a < n_agg; ++a) {
      const auto& rows = rows_of[a];
      Eigen::MatrixXd B(static_cast<int>(rows.size()), k);
      for (size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < k; ++c) B(static_cast<int>(r), c) = nn[c][rows[r]];
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
      double pivot_tol = 1e-12 * std::max(1.0, std::abs(qr.matrixR()(0, 0)));
      int rank = 0;
      int maxr = std::min<int>(static_cast<int>(rows.size()), k);
      for (int j = 0; j < maxr; ++j)
        if (std::abs(qr.matrixR()(j, j)) > pivot_tol) ++rank;
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(
                                                  static_cast<int>(rows.size()), rank);
      Eigen::MatrixXd R = qr.matrixR()
                              .topLeftCorner(rank, k)
                              .triangularView<Eigen::Upper>();
      // Un-permute columns so P * coarse_nn reproduces the fine near-null.
      Eigen::MatrixXd Rp = R * qr.colsPermutation().transpose();
      qs[a] = Q;
      coarse_nn_blocks[a] = Rp;
      coarse_offset[a + 1] = coarse_offset[a] + rank;
    }
    const int nc = coarse_offset[n_agg];
    if (nc == 0) break;

    std::vector<CsrMatrix::Triplet> ptrips;
    for (int a = 0; a < n_agg; ++a) {
      const auto& rows = rows_of[a];
      for (size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < qs[a].cols(); ++c) {
          double v = qs[a](static_cast<int>(r), c);
          if (v != 0.0) ptrips.push_back({rows[r], coarse_offset[a] + c, v});
        }
    }
    CsrMatrix P = CsrMatrix::from_triplets(n, nc, std::move(ptrips));

    if (config.prolongation_smoothing) {
      std::vector<double> dinv(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) dinv[i] = 1.0 / fine.smoother_diag[i];
      CsrMatrix DA = scale_rows(fine.A, dinv);
      P = add_scaled(P, spgemm(DA, P), 1.0, -config.jacobi_omega);
    }

    if (nc > config.stall_ratio * n) break;  // coarsening stalled

    CsrMatrix Ac = spgemm(transpose(P), spgemm(fine.A, P));
    std::vector<std::vector<double>> nnc(static_cast<size_t>(k),
                                         std::vector<double>(static_cast<size_t>(nc), 0.0));
    for (int a = 0; a < n_agg; ++a)
      for (int r = 0; r < coarse_nn_blocks[a].rows(); ++r)
        for (int c = 0; c < k; ++c) nnc[c][coarse_offset[a] + r] = coarse_nn_blocks[a](r, c);
    nn = std::move(nnc);
    AmgLevel next;
    next.A = std::move(Ac);
    next.P = std::move(P);
    next.smoother_diag = diag_extract(next.A);
    next.fine_aggregate = std::move(agg);
    next.aggregate_offsets = std::move(coarse_offset);
    h.levels.push_back(std::move(next));
  }

  const CsrMatrix& Ac = h.levels.back().A;
  if (Ac.n_rows <= kDenseCoarseLimit) {
    h.coarse_factor.compute(Ac.to_dense());
  } else {
    h.coarse_sparse.emplace(Ac, SparseFactor::Kind::general);
  }
  return h;
}

std::vector<double> amg_apply(const AmgHierarchy& h, std::span<const double> r) {
  if (static_cast<int>(r.size()) != h.fine_dimension())
    throw std::invalid_argument("amg_apply: dimension mismatch");
  std::vector<double> x = vcycle(h, 0, r);
  for (int c = 1; c < h.config.cycles_per_apply; ++c) {
    std::vector<double> Ax = spmv(h.levels.front().A, x);
    std::vector<double> res(Ax.size());
    for (size_t i = 0; i < res.size(); ++i) res[i] = r[i] - Ax[i];
    std::vector<double> dx = vcycle(h, 0, res);
    for (size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  }
  return x;
}

std::vector<std::vector<double>> constant_near_null(int n) {
  return {std::vector<double>(static_cast<size_t>(n), 1.0)};
}

std::vector<std::vector<double>> rigid_body_modes(
    std::span<const std::array<double, 3>> coords) {
  const size_t n = coords.size();
  std::vector<std::vector<double>> modes(6, std::vector<double>(3 * n, 0.0));
  for (size_t v = 0; v < n; ++v) {
    const double x = coords[v][0], y = coords[v][1], z = coords[v][2];
    modes[0][3 * v + 0] = 1.0;
    modes[1][3 * v + 1] = 1.0;
    modes[2][3 * v + 2] = 1.0;
    // rotations about x, y, z
    modes[3][3 * v + 1] = -z;
    modes[3][3 * v + 2] = y;
    modes[4][3 * v + 0] = z;
    modes[4][3 * v + 2] = -x;
    modes[5][3 * v + 0] = -y;
    modes[5][3 * v + 1] = x;
  }
  return modes;
}

}  // namespace fracprec
