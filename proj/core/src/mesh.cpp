// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fracprec/errors.hpp"

namespace fracprec {

AxisSpec AxisSpec::uniform(double length, int cells) {
  if (cells < 1 || !(length > 0.0)) throw geometry_error("AxisSpec: bad uniform axis");
  AxisSpec a;
  a.ticks.resize(static_cast<size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) a.ticks[i] = length * i / cells;
  return a;
}

AxisSpec AxisSpec::segments(const std::vector<std::pair<double, int>>& pieces) {
  AxisSpec a;
  a.ticks.push_back(0.0);
  for (const auto& [len, cells] : pieces) {
    if (cells < 1 || !(len > 0.0)) throw geometry_error("AxisSpec: bad segment");
    double start = a.ticks.back();
    for (int i = 1; i <= cells; ++i) a.ticks.push_back(start + len * i / cells);
  }
  if (a.cells() < 1) throw geometry_error("AxisSpec: empty axis");
  return a;
}

namespace {

int find_tick(const std::vector<double>& ticks, double x, const char* what) {
  double scale = std::max(1.0, std::abs(ticks.back() - ticks.front()));
  for (size_t i = 0; i < ticks.size(); ++i)
    if (std::abs(ticks[i] - x) <= 1e-9 * scale) return static_cast<int>(i);
  throw geometry_error(std::string(what) + ": coordinate " + std::to_string(x) +
                       " is not aligned to a grid plane");
}

}  // namespace

double Mesh::mean_face_size() const {
  if (faces.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : faces) s += std::sqrt(f.area);
  return s / static_cast<double>(faces.size());
}

Mesh build_mesh(const MeshSpec& spec) {
  const auto& ax = spec.axes;
  for (int d = 0; d < 3; ++d)
    if (ax[d].cells() < 1) throw geometry_error("build_mesh: axis with no cells");
  const int nc[3] = {ax[0].cells(), ax[1].cells(), ax[2].cells()};
  const int nn[3] = {nc[0] + 1, nc[1] + 1, nc[2] + 1};

  Mesh mesh;
  mesh.nodes.reserve(static_cast<size_t>(nn[0]) * nn[1] * nn[2]);
  auto node_id = [&](int i, int j, int k) { return i + nn[0] * (j + nn[1] * k); };
  for (int k = 0; k < nn[2]; ++k)
    for (int j = 0; j < nn[1]; ++j)
      for (int i = 0; i < nn[0]; ++i)
        mesh.nodes.push_back({ax[0].ticks[i], ax[1].ticks[j], ax[2].ticks[k]});

  mesh.cells.reserve(static_cast<size_t>(nc[0]) * nc[1] * nc[2]);
  auto cell_id = [&](int i, int j, int k) { return i + nc[0] * (j + nc[1] * k); };
  for (int k = 0; k < nc[2]; ++k)
    for (int j = 0; j < nc[1]; ++j)
      for (int i = 0; i < nc[0]; ++i)
        mesh.cells.push_back({node_id(i, j, k), node_id(i + 1, j, k), node_id(i + 1, j + 1, k),
                              node_id(i, j + 1, k), node_id(i, j, k + 1), node_id(i + 1, j, k + 1),
                              node_id(i + 1, j + 1, k + 1), node_id(i, j + 1, k + 1)});

  for (size_t fi = 0; fi < spec.fractures.size(); ++fi) {
    const FractureSpec& fs = spec.fractures[fi];
    const int a = fs.normal_axis;
    if (a < 0 || a > 2) throw geometry_error("build_mesh: bad fracture normal axis");
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const int ia = find_tick(ax[a].ticks, fs.coord, "fracture plane");
    if (ia == 0 || ia == nc[a]) throw geometry_error("build_mesh: fracture plane on the boundary");
    const int jb0 = find_tick(ax[b].ticks, fs.lo1, "fracture extent");
    const int jb1 = find_tick(ax[b].ticks, fs.hi1, "fracture extent");
    const int jc0 = find_tick(ax[c].ticks, fs.lo2, "fracture extent");
    const int jc1 = find_tick(ax[c].ticks, fs.hi2, "fracture extent");
    if (jb1 <= jb0 || jc1 <= jc0) throw geometry_error("build_mesh: empty fracture patch");

    auto grid_node = [&](int jb, int jc) {
      int ijk[3];
      ijk[a] = ia;
      ijk[b] = jb;
      ijk[c] = jc;
      return node_id(ijk[0], ijk[1], ijk[2]);
    };

    // Duplicate nodes strictly interior to the patch; the rim stays shared.
    std::unordered_map<int, int> dup;
    for (int jb = jb0 + 1; jb < jb1; ++jb)
      for (int jc = jc0 + 1; jc < jc1; ++jc) {
        int orig = grid_node(jb, jc);
        dup[orig] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(mesh.nodes[orig]);
      }

    // The plus-side cell layer (index ia along the normal) references the
    // duplicates.
    if (!dup.empty()) {
      int lo[3] = {0, 0, 0}, hi[3] = {nc[0], nc[1], nc[2]};
      lo[a] = ia;
      hi[a] = ia + 1;
      for (int k = lo[2]; k < hi[2]; ++k)
        for (int j = lo[1]; j < hi[1]; ++j)
          for (int i = lo[0]; i < hi[0]; ++i) {
            auto& cell = mesh.cells[cell_id(i, j, k)];
            for (int v = 0; v < 8; ++v) {
              auto it = dup.find(cell[v]);
              if (it != dup.end()) cell[v] = it->second;
            }
          }
    }

    std::array<double, 3> en{}, em1{}, em2{};
    en[a] = 1.0;
    em1[b] = 1.0;
    em2[c] = 1.0;
    const int first_face = mesh.n_p();
    for (int jc = jc0; jc < jc1; ++jc)
      for (int jb = jb0; jb < jb1; ++jb) {
        FractureFace face;
        face.fracture_id = static_cast<int>(fi);
        face.normal = en;
        face.m1 = em1;
        face.m2 = em2;
        face.len1 = ax[b].ticks[jb + 1] - ax[b].ticks[jb];
        face.len2 = ax[c].ticks[jc + 1] - ax[c].ticks[jc];
        face.area = face.len1 * face.len2;
        face.centroid[a] = fs.coord;
        face.centroid[b] = 0.5 * (ax[b].ticks[jb] + ax[b].ticks[jb + 1]);
        face.centroid[c] = 0.5 * (ax[c].ticks[jc] + ax[c].ticks[jc + 1]);
        face.i1 = jb - jb0;
        face.i2 = jc - jc0;
        const int corners[4][2] = {{jb, jc}, {jb + 1, jc}, {jb + 1, jc + 1}, {jb, jc + 1}};
        for (int v = 0; v < 4; ++v) {
          int orig = grid_node(corners[v][0], corners[v][1]);
          face.minus_nodes[v] = orig;
          auto it = dup.find(orig);
          face.plus_nodes[v] = it == dup.end() ? orig : it->second;
        }
        mesh.faces.push_back(face);
      }

    // TPFA adjacency and the rim pressure condition on patch corner faces.
    const int nb = jb1 - jb0, ncc = jc1 - jc0;
    auto face_at = [&](int i1, int i2) { return first_face + i1 + nb * i2; };
    for (int i2 = 0; i2 < ncc; ++i2)
      for (int i1 = 0; i1 < nb; ++i1) {
        const FractureFace& K = mesh.faces[face_at(i1, i2)];
        if (i1 + 1 < nb) {
          const FractureFace& L = mesh.faces[face_at(i1 + 1, i2)];
          mesh.fracture_edges.push_back(
              {face_at(i1, i2), face_at(i1 + 1, i2), K.len2, 0.5 * K.len1, 0.5 * L.len1});
        }
        if (i2 + 1 < ncc) {
          const FractureFace& L = mesh.faces[face_at(i1, i2 + 1)];
          mesh.fracture_edges.push_back(
              {face_at(i1, i2), face_at(i1, i2 + 1), K.len1, 0.5 * K.len2, 0.5 * L.len2});
        }
        bool corner = (i1 == 0 || i1 == nb - 1) && (i2 == 0 || i2 == ncc - 1);
        if (!corner) continue;
        if (i1 == 0) mesh.pressure_bc_edges.push_back({face_at(i1, i2), K.len2, 0.5 * K.len1});
        if (i1 == nb - 1 && nb > 1)
          mesh.pressure_bc_edges.push_back({face_at(i1, i2), K.len2, 0.5 * K.len1});
        if (i2 == 0) mesh.pressure_bc_edges.push_back({face_at(i1, i2), K.len1, 0.5 * K.len2});
        if (i2 == ncc - 1 && ncc > 1)
          mesh.pressure_bc_edges.push_back({face_at(i1, i2), K.len1, 0.5 * K.len2});
      }
  }

  // Box boundary conditions; coordinate matching picks up duplicates too.
  mesh.dirichlet_mask.assign(static_cast<size_t>(mesh.n_u()), 0);
  mesh.neumann_force.assign(static_cast<size_t>(mesh.n_u()), 0.0);
  for (int d = 0; d < 3; ++d) {
    double span = std::max(1.0, ax[d].length());
    for (int side = 0; side < 2; ++side) {
      const FaceBc& bc = spec.box_bc[2 * d + side];
      double plane = side == 0 ? ax[d].ticks.front() : ax[d].ticks.back();
      if (bc.kind == FaceBcKind::roller || bc.kind == FaceBcKind::fixed) {
        for (int v = 0; v < mesh.n_nodes(); ++v) {
          if (std::abs(mesh.nodes[v][d] - plane) > 1e-9 * span) continue;
          if (bc.kind == FaceBcKind::fixed) {
            mesh.dirichlet_mask[3 * v] = 1;
            mesh.dirichlet_mask[3 * v + 1] = 1;
            mesh.dirichlet_mask[3 * v + 2] = 1;
          } else {
            mesh.dirichlet_mask[3 * v + d] = 1;
          }
        }
      } else if (bc.kind == FaceBcKind::load) {
        // Constant compressive traction -sigma * n_outer on the boundary
        // quads, lumped by quarter areas.
        const int e1 = (d + 1) % 3, e2 = (d + 2) % 3;
        double n_outer = side == 0 ? -1.0 : 1.0;
        for (int k = 0; k < nc[2]; ++k)
          for (int j = 0; j < nc[1]; ++j)
            for (int i = 0; i < nc[0]; ++i) {
              int ijk[3] = {i, j, k};
              if (ijk[d] != (side == 0 ? 0 : nc[d] - 1)) continue;
              const auto& cell = mesh.cells[cell_id(i, j, k)];
              double da = ax[e1].ticks[ijk[e1] + 1] - ax[e1].ticks[ijk[e1]];
              double db = ax[e2].ticks[ijk[e2] + 1] - ax[e2].ticks[ijk[e2]];
              double fmag = -bc.sigma * n_outer * da * db / 4.0;
              for (int v = 0; v < 8; ++v) {
                int g = cell[v];
                if (std::abs(mesh.nodes[g][d] - plane) > 1e-9 * span) continue;
                mesh.neumann_force[3 * g + d] += fmag;
              }
            }
      }
    }
  }
  for (int dof = 0; dof < mesh.n_u(); ++dof)
    if (mesh.dirichlet_mask[dof]) mesh.neumann_force[dof] = 0.0;
  return mesh;
}

}  // namespace fracprec
