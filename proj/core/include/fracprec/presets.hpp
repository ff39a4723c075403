// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_PRESETS_HPP
#define FRACPREC_PRESETS_HPP

#include <string>
#include <vector>

#include "fracprec/driver.hpp"

namespace fracprec {

/// Built-in problem definitions:
///   test1          single through-going fracture in a thin plate, graded grid
///   test2a-coarse  unit cube, 4 fracture patches, h = 0.04
///   test2a-fine    same geometry, h = 0.02
///   test2b-level1..6  unit cube, 9 fracture patches, 10..60 cells per side
///   test3-desk     staggered multi-fracture block
///   mini           small single-fracture problem for quick runs
ProblemSpec make_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parameterized families (cube cells per side / refinement level).
ProblemSpec make_test2a(int cells);
ProblemSpec make_test2b(int level);

std::string problem_to_json(const ProblemSpec& problem);
ProblemSpec problem_from_json(const std::string& text);

}  // namespace fracprec

#endif
