// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_ERRORS_HPP
#define FRACPREC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracprec {

/// Thrown when a computation fails numerically (singular pivot, divergence,
/// non-convergence of an eigenvalue sweep). Argument/usage errors throw
/// std::invalid_argument instead.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the mesh generator and bundle readers for malformed input.
class geometry_error : public std::invalid_argument {
 public:
  explicit geometry_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace fracprec

#endif
