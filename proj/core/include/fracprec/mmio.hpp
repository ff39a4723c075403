// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_MMIO_HPP
#define FRACPREC_MMIO_HPP

#include <string>
#include <vector>

#include "fracprec/csr.hpp"

namespace fracprec {

/// Matrix Market coordinate format (real, general), 1-based on disk,
/// 0-based in memory. Values written with 17 significant digits.
CsrMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const CsrMatrix& A);

/// Whitespace-separated plain text vectors, one value per line.
std::vector<double> read_vector_text(const std::string& path);
void write_vector_text(const std::string& path, const std::vector<double>& v);

}  // namespace fracprec

#endif
