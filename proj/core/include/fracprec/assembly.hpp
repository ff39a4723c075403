// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_ASSEMBLY_HPP
#define FRACPREC_ASSEMBLY_HPP

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "fracprec/block.hpp"
#include "fracprec/csr.hpp"
#include "fracprec/mesh.hpp"

namespace fracprec {

struct MaterialParams {
  double E = 3.0e9;       // Pa
  double nu = 0.25;
  double c = 0.0;         // cohesion, Pa
  double theta = 0.5235987755982988;  // friction angle, rad (30 deg)
  double C_f0 = 9.87e-15;  // fracture conductivity at contact, m^2*m
  double mu_f = 1.0e-3;    // fluid viscosity, Pa*s
  double k_scale = 0.0;    // traction scaling, Pa/m; 0 -> E / mean face size
  double stab_beta = 0.02;  // jump-penalty constant

  void validate() const;
  double tan_theta() const { return std::tan(theta); }
  double tau_max(double t_N) const { return c - t_N * tan_theta(); }
  double conductivity(double g_N) const {
    double g = g_N > 0.0 ? g_N : 0.0;
    return C_f0 + g * g * g / 12.0;
  }
  double conductivity_derivative(double g_N) const {
    double g = g_N > 0.0 ? g_N : 0.0;
    return g * g / 4.0;
  }
};

enum class Region : char { stick = 's', slip = 'l', open = 'o' };

/// Per-face contact state: region labels plus the current gap, traction and
/// pressure iterates (face-averaged, local frame) and the previous-step gap.
struct FractureState {
  std::vector<Region> region;
  std::vector<std::array<double, 3>> gap;       // (N, T1, T2), m
  std::vector<std::array<double, 3>> traction;  // (N, T1, T2), Pa
  std::vector<double> pressure;                 // Pa
  std::vector<std::array<double, 3>> gap_prev;  // previous converged step
  std::vector<std::array<double, 2>> slip_dir;  // last regular slip direction
  /// Picard latch: when set, slip directions stay at slip_dir during
  /// assembly and residual evaluation (smooths a stalled Newton loop).
  bool freeze_directions = false;

  static FractureState all_stick(int n_faces);
  int n_faces() const { return static_cast<int>(region.size()); }
  void count(int& stick, int& slip, int& open) const;
};

/// State-independent operators: elastic stiffness (Dirichlet-eliminated),
/// coupling blocks, Neumann load and the resolved traction scaling.
struct ModelOperators {
  CsrMatrix A, C1, Q1;
  std::vector<double> f_u;
  double k_scale = 0.0;
};

/// Trilinear hexahedra, 2x2x2 Gauss, symmetric Dirichlet elimination with
/// unit diagonal.
CsrMatrix assemble_elasticity(const Mesh& mesh, const MaterialParams& mat);

/// Face-integral coupling blocks: C1 (jump vs multipliers) and
/// Q1 = -(normal jump vs pressures). Dirichlet rows are zeroed.
std::pair<CsrMatrix, CsrMatrix> assemble_coupling(const Mesh& mesh);

ModelOperators assemble_linear(const Mesh& mesh, const MaterialParams& mat);

struct FractureBlocks {
  CsrMatrix C2, H, Q2, F_u, T;
};

/// State-dependent blocks: contact rows C2/H with jump-penalty
/// stabilization, TPFA transmissibility T with pressure stabilization, and
/// the displacement-flux coupling Q2 = -Psi(Q1^T)/dt + F_u.
FractureBlocks assemble_fracture_blocks(const Mesh& mesh, const MaterialParams& mat,
                                        const FractureState& state, double dt);

BlockSystem assemble_jacobian(const Mesh& mesh, const MaterialParams& mat,
                              const FractureState& state, const ModelOperators& ops, double dt);

/// Nonlinear residual (r_u, r_t, r_p) at the iterate x, with injection
/// rates q_source per face (m^3/s).
BlockVector residual(const Mesh& mesh, const MaterialParams& mat, const FractureState& state,
                     const ModelOperators& ops, const BlockVector& x, double dt,
                     std::span<const double> q_source);

/// Refreshes state.gap / traction / pressure / slip_dir from the iterate.
void update_state_iterates(const Mesh& mesh, const MaterialParams& mat,
                           const ModelOperators& ops, const BlockVector& x,
                           FractureState& state);

/// Coulomb consistency check for one face. traction_scale sets the
/// "traction approximately zero" threshold for open persistence; 0 picks a
/// conservative default from E.
Region coulomb_classify(const std::array<double, 3>& t, const std::array<double, 3>& g,
                        const MaterialParams& mat, double traction_scale = 0.0);

}  // namespace fracprec

#endif
