// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "fracprec/errors.hpp"

namespace fracprec {

namespace {

constexpr double kSlipRegularization = 1e-12;  // m

// The slip direction is meaningful only when the tangential increment
// exceeds a fraction of the elastic slip scale tau/k; below it the
// direction is frozen so Newton does not chase a degenerate linearization.
double slip_freeze_threshold(const MaterialParams& mat, double k_scale, double t_N) {
  double tau = mat.tau_max(t_N);
  return std::max(kSlipRegularization, 0.1 * std::max(tau, 0.0) / k_scale);
}

const double kGauss = 1.0 / std::sqrt(3.0);
const double kXi[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
const double kEta[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
const double kZeta[8] = {-1, -1, -1, -1, 1, 1, 1, 1};

// Trilinear shape gradients in reference coordinates.
void shape_gradients(double xi, double eta, double zeta, double dN[8][3]) {
  for (int a = 0; a < 8; ++a) {
    dN[a][0] = 0.125 * kXi[a] * (1 + kEta[a] * eta) * (1 + kZeta[a] * zeta);
    dN[a][1] = 0.125 * (1 + kXi[a] * xi) * kEta[a] * (1 + kZeta[a] * zeta);
    dN[a][2] = 0.125 * (1 + kXi[a] * xi) * (1 + kEta[a] * eta) * kZeta[a];
  }
}

// 24x24 stiffness of one hexahedron, 2x2x2 Gauss quadrature.
void element_stiffness(const std::array<std::array<double, 3>, 8>& xyz, double lambda, double mu,
                       double ke[24][24]) {
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) ke[i][j] = 0.0;
  for (int gp = 0; gp < 8; ++gp) {
    double xi = kXi[gp] * kGauss, eta = kEta[gp] * kGauss, zeta = kZeta[gp] * kGauss;
    double dN[8][3];
    shape_gradients(xi, eta, zeta, dN);
    double Jm[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (int a = 0; a < 8; ++a)
      for (int r = 0; r < 3; ++r)
        for (int ccol = 0; ccol < 3; ++ccol) Jm[r][ccol] += dN[a][r] * xyz[a][ccol];
    double det = Jm[0][0] * (Jm[1][1] * Jm[2][2] - Jm[1][2] * Jm[2][1]) -
                 Jm[0][1] * (Jm[1][0] * Jm[2][2] - Jm[1][2] * Jm[2][0]) +
                 Jm[0][2] * (Jm[1][0] * Jm[2][1] - Jm[1][1] * Jm[2][0]);
    if (!(det > 0.0)) throw numerical_error("assemble_elasticity: degenerate cell Jacobian");
    double inv[3][3];
    inv[0][0] = (Jm[1][1] * Jm[2][2] - Jm[1][2] * Jm[2][1]) / det;
    inv[0][1] = (Jm[0][2] * Jm[2][1] - Jm[0][1] * Jm[2][2]) / det;
    inv[0][2] = (Jm[0][1] * Jm[1][2] - Jm[0][2] * Jm[1][1]) / det;
    inv[1][0] = (Jm[1][2] * Jm[2][0] - Jm[1][0] * Jm[2][2]) / det;
    inv[1][1] = (Jm[0][0] * Jm[2][2] - Jm[0][2] * Jm[2][0]) / det;
    inv[1][2] = (Jm[0][2] * Jm[1][0] - Jm[0][0] * Jm[1][2]) / det;
    inv[2][0] = (Jm[1][0] * Jm[2][1] - Jm[1][1] * Jm[2][0]) / det;
    inv[2][1] = (Jm[0][1] * Jm[2][0] - Jm[0][0] * Jm[2][1]) / det;
    inv[2][2] = (Jm[0][0] * Jm[1][1] - Jm[0][1] * Jm[1][0]) / det;
    double g[8][3];
    for (int a = 0; a < 8; ++a)
      for (int d = 0; d < 3; ++d)
        g[a][d] = inv[d][0] * dN[a][0] + inv[d][1] * dN[a][1] + inv[d][2] * dN[a][2];

    // B^T D B accumulated directly from the strain components
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        double k[3][3];
        for (int di = 0; di < 3; ++di)
          for (int dj = 0; dj < 3; ++dj) k[di][dj] = lambda * g[a][di] * g[b][dj];
        double gab = g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2];
        for (int d = 0; d < 3; ++d) k[d][d] += mu * gab;
        for (int di = 0; di < 3; ++di)
          for (int dj = 0; dj < 3; ++dj) k[di][dj] += mu * g[a][dj] * g[b][di];
        for (int di = 0; di < 3; ++di)
          for (int dj = 0; dj < 3; ++dj) ke[3 * a + di][3 * b + dj] += k[di][dj] * det;
      }
  }
}

double resolved_k_scale(const Mesh& mesh, const MaterialParams& mat) {
  if (mat.k_scale > 0.0) return mat.k_scale;
  double h = mesh.mean_face_size();
  return h > 0.0 ? mat.E / h : mat.E;
}

// Stabilization scalar for one edge: beta * (mean face area / E) * |edge|.
double stab_scalar(const Mesh& mesh, const MaterialParams& mat, const FractureEdge& e) {
  double h = 0.5 * (mesh.faces[e.k].area + mesh.faces[e.l].area);
  return mat.stab_beta * (h / mat.E) * e.length;
}

bool closed(Region r) { return r != Region::open; }

}  // namespace

void MaterialParams::validate() const {
  if (!(E > 0.0) || !(nu >= 0.0 && nu < 0.5) || !(theta >= 0.0 && theta < M_PI_2) ||
      !(C_f0 > 0.0) || !(mu_f > 0.0) || !(stab_beta > 0.0) || k_scale < 0.0)
    throw std::invalid_argument("MaterialParams: values out of range");
}

FractureState FractureState::all_stick(int n_faces) {
  FractureState s;
  s.region.assign(static_cast<size_t>(n_faces), Region::stick);
  s.gap.assign(static_cast<size_t>(n_faces), {0, 0, 0});
  s.traction.assign(static_cast<size_t>(n_faces), {0, 0, 0});
  s.pressure.assign(static_cast<size_t>(n_faces), 0.0);
  s.gap_prev.assign(static_cast<size_t>(n_faces), {0, 0, 0});
  s.slip_dir.assign(static_cast<size_t>(n_faces), {1.0, 0.0});
  return s;
}

void FractureState::count(int& stick, int& slip, int& open) const {
  stick = slip = open = 0;
  for (Region r : region) {
    if (r == Region::stick)
      ++stick;
    else if (r == Region::slip)
      ++slip;
    else
      ++open;
  }
}

CsrMatrix assemble_elasticity(const Mesh& mesh, const MaterialParams& mat) {
  mat.validate();
  const int n_u = mesh.n_u();
  const double lambda = mat.E * mat.nu / ((1 + mat.nu) * (1 - 2 * mat.nu));
  const double mu = mat.E / (2 * (1 + mat.nu));

  // Pattern-first assembly: node adjacency, then 3x3 dof blocks per pair.
  std::vector<std::vector<int>> nbr(static_cast<size_t>(mesh.n_nodes()));
  for (const auto& cell : mesh.cells)
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) nbr[cell[a]].push_back(cell[b]);
  for (auto& list : nbr) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  CsrMatrix A(n_u, n_u);
  {
    size_t nnz = 0;
    for (const auto& list : nbr) nnz += 3 * list.size();
    A.col_indices.reserve(3 * nnz);
    for (int v = 0; v < mesh.n_nodes(); ++v)
      for (int d = 0; d < 3; ++d) {
        for (int w : nbr[v])
          for (int e = 0; e < 3; ++e) A.col_indices.push_back(3 * w + e);
        A.row_offsets[3 * v + d + 1] = static_cast<int>(A.col_indices.size());
      }
    A.values.assign(A.col_indices.size(), 0.0);
  }
  auto entry = [&](int row, int col) -> double& {
    int lo = A.row_offsets[row], hi = A.row_offsets[row + 1];
    auto it = std::lower_bound(A.col_indices.begin() + lo, A.col_indices.begin() + hi, col);
    return A.values[static_cast<size_t>(it - A.col_indices.begin())];
  };

  double ke[24][24];
  for (const auto& cell : mesh.cells) {
    std::array<std::array<double, 3>, 8> xyz;
    for (int a = 0; a < 8; ++a) xyz[a] = mesh.nodes[cell[a]];
    element_stiffness(xyz, lambda, mu, ke);
    for (int a = 0; a < 8; ++a)
      for (int di = 0; di < 3; ++di) {
        int row = 3 * cell[a] + di;
        for (int b = 0; b < 8; ++b)
          for (int dj = 0; dj < 3; ++dj) entry(row, 3 * cell[b] + dj) += ke[3 * a + di][3 * b + dj];
      }
  }

  // Symmetric Dirichlet elimination with unit diagonal.
  for (int row = 0; row < n_u; ++row) {
    bool rdir = mesh.dirichlet_mask[row];
    for (int k = A.row_offsets[row]; k < A.row_offsets[row + 1]; ++k) {
      int col = A.col_indices[k];
      if (rdir || mesh.dirichlet_mask[col]) A.values[k] = (row == col) ? 1.0 : 0.0;
    }
  }
  return A;
}

std::pair<CsrMatrix, CsrMatrix> assemble_coupling(const Mesh& mesh) {
  std::vector<CsrMatrix::Triplet> c1, q1;
  for (int f = 0; f < mesh.n_p(); ++f) {
    const FractureFace& face = mesh.faces[f];
    const double w = face.area / 4.0;
    const std::array<double, 3>* frame[3] = {&face.normal, &face.m1, &face.m2};
    for (int v = 0; v < 4; ++v) {
      if (face.plus_nodes[v] == face.minus_nodes[v]) continue;  // rim: jump cancels
      for (int side = 0; side < 2; ++side) {
        int node = side == 0 ? face.plus_nodes[v] : face.minus_nodes[v];
        double sgn = side == 0 ? 1.0 : -1.0;
        for (int d = 0; d < 3; ++d) {
          int row = 3 * node + d;
          if (mesh.dirichlet_mask[row]) continue;
          for (int c = 0; c < 3; ++c) {
            double val = sgn * w * (*frame[c])[d];
            if (val != 0.0) c1.push_back({row, 3 * f + c, val});
          }
          double qv = -sgn * w * face.normal[d];
          if (qv != 0.0) q1.push_back({row, f, qv});
        }
      }
    }
  }
  return {CsrMatrix::from_triplets(mesh.n_u(), mesh.n_t(), std::move(c1)),
          CsrMatrix::from_triplets(mesh.n_u(), mesh.n_p(), std::move(q1))};
}

ModelOperators assemble_linear(const Mesh& mesh, const MaterialParams& mat) {
  ModelOperators ops;
  ops.A = assemble_elasticity(mesh, mat);
  auto [c1, q1] = assemble_coupling(mesh);
  ops.C1 = std::move(c1);
  ops.Q1 = std::move(q1);
  ops.f_u = mesh.neumann_force;
  ops.k_scale = resolved_k_scale(mesh, mat);
  return ops;
}

FractureBlocks assemble_fracture_blocks(const Mesh& mesh, const MaterialParams& mat,
                                        const FractureState& state, double dt) {
  mat.validate();
  if (state.n_faces() != mesh.n_p())
    throw std::invalid_argument("assemble_fracture_blocks: state size mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("assemble_fracture_blocks: dt must be positive");
  const int n_p = mesh.n_p(), n_t = mesh.n_t(), n_u = mesh.n_u();
  const double k_scale = resolved_k_scale(mesh, mat);
  const double tan_th = mat.tan_theta();

  std::vector<CsrMatrix::Triplet> c2, h, t, q2gap, fu;

  // face-local contact rows
  for (int f = 0; f < n_p; ++f) {
    const FractureFace& face = mesh.faces[f];
    const double w = face.area / 4.0;
    const std::array<double, 3>* frame[3] = {&face.normal, &face.m1, &face.m2};
    const Region reg = state.region[f];

    auto jump_row = [&](int row, int comp, double scale) {
      // scale * (jump . frame[comp]) integrated over the face
      for (int v = 0; v < 4; ++v) {
        if (face.plus_nodes[v] == face.minus_nodes[v]) continue;
        for (int d = 0; d < 3; ++d) {
          double val = scale * w * (*frame[comp])[d];
          if (val == 0.0) continue;
          int cp = 3 * face.plus_nodes[v] + d;
          int cm = 3 * face.minus_nodes[v] + d;
          if (!mesh.dirichlet_mask[cp]) c2.push_back({row, cp, val});
          if (!mesh.dirichlet_mask[cm]) c2.push_back({row, cm, -val});
        }
      }
    };

    if (reg == Region::stick) {
      for (int c = 0; c < 3; ++c) jump_row(3 * f + c, c, 1.0);
    } else if (reg == Region::slip) {
      jump_row(3 * f + 0, 0, 1.0);
      // tangential rows: -(1/k) * dtT*/dgT . jump, with the frozen-direction
      // branch dropping the coupling entirely
      double dgT[2] = {state.gap[f][1] - state.gap_prev[f][1],
                       state.gap[f][2] - state.gap_prev[f][2]};
      double r = std::hypot(dgT[0], dgT[1]);
      double m[2];
      double D[2][2] = {{0, 0}, {0, 0}};
      if (!state.freeze_directions &&
          r >= slip_freeze_threshold(mat, k_scale, state.traction[f][0])) {
        m[0] = dgT[0] / r;
        m[1] = dgT[1] / r;
        double tau = mat.tau_max(state.traction[f][0]);
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) D[a][b] = (tau / r) * ((a == b ? 1.0 : 0.0) - m[a] * m[b]);
      } else {
        m[0] = state.slip_dir[f][0];
        m[1] = state.slip_dir[f][1];
      }
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (D[a][b] != 0.0) jump_row(3 * f + 1 + a, 1 + b, -D[a][b] / k_scale);
      // H slip entries
      for (int a = 0; a < 2; ++a) {
        h.push_back({3 * f + 1 + a, 3 * f + 1 + a, -face.area / k_scale});
        double dtn = -tan_th * m[a];  // dtT*/dt_N
        if (dtn != 0.0) h.push_back({3 * f + 1 + a, 3 * f + 0, (face.area / k_scale) * dtn});
      }
    } else {  // open
      for (int c = 0; c < 3; ++c) h.push_back({3 * f + c, 3 * f + c, -face.area / k_scale});
    }
  }

  // traction stabilization: jump penalty on closed-closed edges, diagonal
  // anchor on the closed side of closed|open edges (open tractions known)
  for (const FractureEdge& e : mesh.fracture_edges) {
    bool ck = closed(state.region[e.k]), cl = closed(state.region[e.l]);
    if (!ck && !cl) continue;
    double s = stab_scalar(mesh, mat, e);
    for (int c = 0; c < 3; ++c) {
      if (ck && cl) {
        h.push_back({3 * e.k + c, 3 * e.k + c, s});
        h.push_back({3 * e.l + c, 3 * e.l + c, s});
        h.push_back({3 * e.k + c, 3 * e.l + c, -s});
        h.push_back({3 * e.l + c, 3 * e.k + c, -s});
      } else if (ck) {
        h.push_back({3 * e.k + c, 3 * e.k + c, s});
      } else {
        h.push_back({3 * e.l + c, 3 * e.l + c, s});
      }
    }
  }

  // TPFA transmissibility with the current conductivities, pressure
  // stabilization, and the flux derivative with respect to displacements
  // Closed faces keep the contact aperture: conductivity C_f0 with zero
  // derivative, so the flux depends on u only through open faces.
  std::vector<double> cf(static_cast<size_t>(n_p)), dcf(static_cast<size_t>(n_p));
  for (int f = 0; f < n_p; ++f) {
    bool open = state.region[f] == Region::open;
    cf[f] = mat.conductivity(open ? state.gap[f][0] : 0.0);
    dcf[f] = open ? mat.conductivity_derivative(state.gap[f][0]) : 0.0;
    if (!(cf[f] > 0.0)) throw numerical_error("assemble_fracture_blocks: non-positive conductivity");
  }

  auto fu_row = [&](int row, int face_id, double coeff) {
    // coeff * d g_N(face)/du = coeff * (jump_N row) / area
    if (coeff == 0.0) return;
    const FractureFace& face = mesh.faces[face_id];
    for (int v = 0; v < 4; ++v) {
      if (face.plus_nodes[v] == face.minus_nodes[v]) continue;
      for (int d = 0; d < 3; ++d) {
        double val = coeff * face.normal[d] / 4.0;
        if (val == 0.0) continue;
        int cp = 3 * face.plus_nodes[v] + d;
        int cm = 3 * face.minus_nodes[v] + d;
        if (!mesh.dirichlet_mask[cp]) fu.push_back({row, cp, val});
        if (!mesh.dirichlet_mask[cm]) fu.push_back({row, cm, -val});
      }
    }
  };

  for (const FractureEdge& e : mesh.fracture_edges) {
    double yk = (cf[e.k] / mat.mu_f) * e.length / e.d_k;
    double yl = (cf[e.l] / mat.mu_f) * e.length / e.d_l;
    double ykl = 2.0 * yk * yl / (yk + yl);
    t.push_back({e.k, e.k, ykl});
    t.push_back({e.l, e.l, ykl});
    t.push_back({e.k, e.l, -ykl});
    t.push_back({e.l, e.k, -ykl});
    double s = stab_scalar(mesh, mat, e) / dt;
    t.push_back({e.k, e.k, s});
    t.push_back({e.l, e.l, s});
    t.push_back({e.k, e.l, -s});
    t.push_back({e.l, e.k, -s});

    double dp = state.pressure[e.k] - state.pressure[e.l];
    if (dp != 0.0) {
      double dykl_dyk = 2.0 * (yl / (yk + yl)) * (yl / (yk + yl));
      double dykl_dyl = 2.0 * (yk / (yk + yl)) * (yk / (yk + yl));
      double ck = dp * dykl_dyk * (e.length / (mat.mu_f * e.d_k)) * dcf[e.k];
      double cl = dp * dykl_dyl * (e.length / (mat.mu_f * e.d_l)) * dcf[e.l];
      fu_row(e.k, e.k, ck);
      fu_row(e.k, e.l, cl);
      fu_row(e.l, e.k, -ck);
      fu_row(e.l, e.l, -cl);
    }
  }
  for (const PressureBcEdge& e : mesh.pressure_bc_edges) {
    double yb = (cf[e.k] / mat.mu_f) * e.length / e.d;
    t.push_back({e.k, e.k, yb});
    double pk = state.pressure[e.k];  // Dirichlet value is 0
    if (pk != 0.0) fu_row(e.k, e.k, pk * (e.length / (mat.mu_f * e.d)) * dcf[e.k]);
  }

  // Q2 = -Psi(Q1^T)/dt + F_u: the gap-rate term lives on open rows only
  for (int f = 0; f < n_p; ++f) {
    if (state.region[f] != Region::open) continue;
    const FractureFace& face = mesh.faces[f];
    const double w = face.area / 4.0;
    for (int v = 0; v < 4; ++v) {
      if (face.plus_nodes[v] == face.minus_nodes[v]) continue;
      for (int d = 0; d < 3; ++d) {
        double val = (w / dt) * face.normal[d];
        if (val == 0.0) continue;
        int cp = 3 * face.plus_nodes[v] + d;
        int cm = 3 * face.minus_nodes[v] + d;
        if (!mesh.dirichlet_mask[cp]) q2gap.push_back({f, cp, val});
        if (!mesh.dirichlet_mask[cm]) q2gap.push_back({f, cm, -val});
      }
    }
  }

  FractureBlocks out;
  out.C2 = CsrMatrix::from_triplets(n_t, n_u, std::move(c2));
  out.H = CsrMatrix::from_triplets(n_t, n_t, std::move(h));
  out.T = CsrMatrix::from_triplets(n_p, n_p, std::move(t));
  out.F_u = CsrMatrix::from_triplets(n_p, n_u, std::move(fu));
  out.Q2 = add_scaled(CsrMatrix::from_triplets(n_p, n_u, std::move(q2gap)), out.F_u, 1.0, 1.0);
  return out;
}

BlockSystem assemble_jacobian(const Mesh& mesh, const MaterialParams& mat,
                              const FractureState& state, const ModelOperators& ops, double dt) {
  FractureBlocks fb = assemble_fracture_blocks(mesh, mat, state, dt);
  BlockSystem J;
  J.n_u = mesh.n_u();
  J.n_t = mesh.n_t();
  J.n_p = mesh.n_p();
  J.A = ops.A;
  J.C1 = ops.C1;
  J.Q1 = ops.Q1;
  J.C2 = std::move(fb.C2);
  J.H = std::move(fb.H);
  J.Q2 = std::move(fb.Q2);
  J.F_u = std::move(fb.F_u);
  J.T = std::move(fb.T);
  J.check_shapes();
  return J;
}

BlockVector residual(const Mesh& mesh, const MaterialParams& mat, const FractureState& state,
                     const ModelOperators& ops, const BlockVector& x, double dt,
                     std::span<const double> q_source) {
  const int n_p = mesh.n_p();
  if (static_cast<int>(q_source.size()) != n_p && !q_source.empty())
    throw std::invalid_argument("residual: q_source size mismatch");
  const double k_scale = resolved_k_scale(mesh, mat);
  BlockVector r(mesh.n_u(), mesh.n_t(), n_p);

  // r_u = A u + C1 t + Q1 p - f
  {
    std::vector<double> Au = spmv(ops.A, x.u);
    std::vector<double> Ct = spmv(ops.C1, x.t);
    std::vector<double> Qp = spmv(ops.Q1, x.p);
    for (int i = 0; i < mesh.n_u(); ++i) r.u[i] = Au[i] + Ct[i] + Qp[i] - ops.f_u[i];
  }

  std::vector<double> gint = spmv_transpose(ops.C1, x.u);  // integrated jumps

  for (int f = 0; f < n_p; ++f) {
    const FractureFace& face = mesh.faces[f];
    const Region reg = state.region[f];
    if (reg == Region::stick) {
      for (int c = 0; c < 3; ++c) r.t[3 * f + c] = gint[3 * f + c];
    } else if (reg == Region::slip) {
      r.t[3 * f + 0] = gint[3 * f + 0];
      double dgT[2] = {gint[3 * f + 1] / face.area - state.gap_prev[f][1],
                       gint[3 * f + 2] / face.area - state.gap_prev[f][2]};
      double rn = std::hypot(dgT[0], dgT[1]);
      double m[2];
      if (!state.freeze_directions &&
          rn >= slip_freeze_threshold(mat, k_scale, x.t[3 * f + 0])) {
        m[0] = dgT[0] / rn;
        m[1] = dgT[1] / rn;
      } else {
        m[0] = state.slip_dir[f][0];
        m[1] = state.slip_dir[f][1];
      }
      double tau = mat.tau_max(x.t[3 * f + 0]);
      for (int a = 0; a < 2; ++a)
        r.t[3 * f + 1 + a] = (face.area / k_scale) * (x.t[3 * f + 1 + a] - tau * m[a]);
    } else {
      for (int c = 0; c < 3; ++c) r.t[3 * f + c] = (face.area / k_scale) * x.t[3 * f + c];
    }
  }

  // traction stabilization, consistent with the assembled H
  for (const FractureEdge& e : mesh.fracture_edges) {
    bool ck = closed(state.region[e.k]), cl = closed(state.region[e.l]);
    if (!ck && !cl) continue;
    double s = stab_scalar(mesh, mat, e);
    for (int c = 0; c < 3; ++c) {
      double tk = x.t[3 * e.k + c], tl = x.t[3 * e.l + c];
      if (ck && cl) {
        r.t[3 * e.k + c] -= s * (tk - tl);
        r.t[3 * e.l + c] -= s * (tl - tk);
      } else if (ck) {
        r.t[3 * e.k + c] -= s * tk;
      } else {
        r.t[3 * e.l + c] -= s * tl;
      }
    }
  }

  // r_p: storage + TPFA flux + rim condition + stabilization - source
  std::vector<double> cf(static_cast<size_t>(n_p));
  for (int f = 0; f < n_p; ++f) {
    double gN = state.region[f] == Region::open ? gint[3 * f + 0] / mesh.faces[f].area : 0.0;
    cf[f] = mat.conductivity(gN);
    double stored = state.region[f] == Region::open ? gint[3 * f + 0] : 0.0;
    r.p[f] = (stored - mesh.faces[f].area * state.gap_prev[f][0]) / dt;
    if (!q_source.empty()) r.p[f] -= q_source[f];
  }
  for (const FractureEdge& e : mesh.fracture_edges) {
    double yk = (cf[e.k] / mat.mu_f) * e.length / e.d_k;
    double yl = (cf[e.l] / mat.mu_f) * e.length / e.d_l;
    double ykl = 2.0 * yk * yl / (yk + yl);
    double dp = x.p[e.k] - x.p[e.l];
    r.p[e.k] += ykl * dp;
    r.p[e.l] -= ykl * dp;
    double s = stab_scalar(mesh, mat, e) / dt;
    r.p[e.k] += s * dp;
    r.p[e.l] -= s * dp;
  }
  for (const PressureBcEdge& e : mesh.pressure_bc_edges) {
    double yb = (cf[e.k] / mat.mu_f) * e.length / e.d;
    r.p[e.k] += yb * x.p[e.k];
  }
  return r;
}

void update_state_iterates(const Mesh& mesh, const MaterialParams& mat,
                           const ModelOperators& ops, const BlockVector& x,
                           FractureState& state) {
  std::vector<double> gint = spmv_transpose(ops.C1, x.u);
  for (int f = 0; f < mesh.n_p(); ++f) {
    const double area = mesh.faces[f].area;
    for (int c = 0; c < 3; ++c) {
      state.gap[f][c] = gint[3 * f + c] / area;
      state.traction[f][c] = x.t[3 * f + c];
    }
    state.pressure[f] = x.p[f];
    double dgT[2] = {state.gap[f][1] - state.gap_prev[f][1],
                     state.gap[f][2] - state.gap_prev[f][2]};
    double rn = std::hypot(dgT[0], dgT[1]);
    if (!state.freeze_directions &&
        rn >= slip_freeze_threshold(mat, resolved_k_scale(mesh, mat), x.t[3 * f + 0])) {
      state.slip_dir[f][0] = dgT[0] / rn;
      state.slip_dir[f][1] = dgT[1] / rn;
    }
  }
}

Region coulomb_classify(const std::array<double, 3>& t, const std::array<double, 3>& g,
                        const MaterialParams& mat, double traction_scale) {
  double tau = mat.tau_max(t[0]);
  double tol_tau = 1e-8 * std::max(tau, mat.E * 1e-12);
  double tol_t = 1e-6 * (traction_scale > 0.0 ? traction_scale : mat.E * 1e-3);
  if (t[0] > 0.0) return Region::open;  // tension demanded
  double tnorm = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
  if (g[0] > 0.0 && tnorm <= tol_t) return Region::open;
  if (std::hypot(t[1], t[2]) >= tau - tol_tau) return Region::slip;
  return Region::stick;
}

}  // namespace fracprec
