// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_MESH_HPP
#define FRACPREC_MESH_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace fracprec {

/// Tick-based axis description. Axes may be graded: a list of
/// (segment length, cell count) pieces laid end to end.
struct AxisSpec {
  std::vector<double> ticks;

  static AxisSpec uniform(double length, int cells);
  static AxisSpec segments(const std::vector<std::pair<double, int>>& pieces);
  int cells() const { return static_cast<int>(ticks.size()) - 1; }
  double length() const { return ticks.back() - ticks.front(); }
};

/// Axis-aligned rectangular fracture snapped to grid planes. The in-plane
/// axes are (normal_axis+1)%3 and (normal_axis+2)%3, in that order, so the
/// local frame (n, m1, m2) is right-handed.
struct FractureSpec {
  int normal_axis = 0;
  double coord = 0.0;
  double lo1 = 0.0, hi1 = 0.0;  // extent along (normal_axis+1)%3
  double lo2 = 0.0, hi2 = 0.0;  // extent along (normal_axis+2)%3
};

enum class FaceBcKind { free_surface, roller, fixed, load };
struct FaceBc {
  FaceBcKind kind = FaceBcKind::free_surface;
  double sigma = 0.0;  // compressive magnitude for `load` (Pa)
};

struct MeshSpec {
  std::array<AxisSpec, 3> axes;
  std::vector<FractureSpec> fractures;
  std::array<FaceBc, 6> box_bc;  // xmin, xmax, ymin, ymax, zmin, zmax
};

/// One fracture face: two overlapping quads. minus_nodes are the original
/// node ids (the side the normal points away from), plus_nodes the
/// duplicates. Nodes on the fracture rim are shared, so their jump
/// contribution vanishes.
struct FractureFace {
  int fracture_id = 0;
  std::array<int, 4> minus_nodes{};
  std::array<int, 4> plus_nodes{};
  double area = 0.0;
  std::array<double, 3> normal{}, m1{}, m2{};
  std::array<double, 3> centroid{};
  double len1 = 0.0, len2 = 0.0;  // extents along m1, m2
  int i1 = 0, i2 = 0;             // integer patch coordinates
};

/// TPFA interior edge between faces k and l of one fracture.
struct FractureEdge {
  int k = 0, l = 0;
  double length = 0.0;
  double d_k = 0.0, d_l = 0.0;  // centroid-to-edge distances
};

/// Dirichlet pressure edge on the fracture rim.
struct PressureBcEdge {
  int k = 0;
  double length = 0.0;
  double d = 0.0;
};

struct Mesh {
  std::vector<std::array<double, 3>> nodes;
  std::vector<std::array<int, 8>> cells;
  std::vector<FractureFace> faces;
  std::vector<FractureEdge> fracture_edges;
  std::vector<PressureBcEdge> pressure_bc_edges;
  std::vector<char> dirichlet_mask;   // per displacement dof
  std::vector<double> neumann_force;  // per displacement dof

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_u() const { return 3 * n_nodes(); }
  int n_p() const { return static_cast<int>(faces.size()); }
  int n_t() const { return 3 * n_p(); }
  /// Mean fracture face size sqrt(area), used for the traction scaling
  /// coefficient default.
  double mean_face_size() const;
};

Mesh build_mesh(const MeshSpec& spec);

}  // namespace fracprec

#endif
