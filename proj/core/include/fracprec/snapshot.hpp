// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_SNAPSHOT_HPP
#define FRACPREC_SNAPSHOT_HPP

#include <array>
#include <string>
#include <vector>

#include "fracprec/assembly.hpp"
#include "fracprec/block.hpp"

namespace fracprec {

/// Block bundle on disk: the seven Jacobian blocks plus F_u in Matrix
/// Market files, region labels and sizes in manifest.json, optional node
/// coordinates for rigid-body near-null spaces.
struct Snapshot {
  BlockSystem J;
  std::vector<Region> region;
  double dt = 0.5;
  std::vector<std::array<double, 3>> node_coords;  // optional

  std::string region_string() const;  // "s", "l", "o" per face
};

void export_snapshot(const std::string& dir, const Snapshot& snap);
Snapshot import_snapshot(const std::string& dir);

}  // namespace fracprec

#endif
