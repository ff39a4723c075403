// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/mmio.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fracprec/errors.hpp"

namespace fracprec {

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty matrix file: " + path);
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
      throw std::invalid_argument("unsupported MatrixMarket header in " + path);
    if (field != "real" || (symmetry != "general" && !symmetry.empty() && symmetry != "General"))
      throw std::invalid_argument("only real general coordinate matrices supported: " + path);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream ss(line);
  long rows = 0, cols = 0, entries = 0;
  if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
    throw std::invalid_argument("bad size line in " + path);
  std::vector<CsrMatrix::Triplet> trips;
  trips.reserve(static_cast<size_t>(entries));
  for (long e = 0; e < entries; ++e) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw std::invalid_argument("truncated matrix data in " + path);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw std::invalid_argument("entry out of range in " + path);
    trips.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
  }
  return CsrMatrix::from_triplets(static_cast<int>(rows), static_cast<int>(cols),
                                  std::move(trips));
}

void write_matrix_market(const std::string& path, const CsrMatrix& A) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::invalid_argument("cannot write matrix file: " + path);
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(f, "%d %d %d\n", A.n_rows, A.n_cols, A.nnz());
  for (int i = 0; i < A.n_rows; ++i)
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      std::fprintf(f, "%d %d %.17g\n", i + 1, A.col_indices[k] + 1, A.values[k]);
  std::fclose(f);
}

std::vector<double> read_vector_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open vector file: " + path);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw std::invalid_argument("malformed vector file: " + path);
  return v;
}

void write_vector_text(const std::string& path, const std::vector<double>& v) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::invalid_argument("cannot write vector file: " + path);
  for (double x : v) std::fprintf(f, "%.17g\n", x);
  std::fclose(f);
}

}  // namespace fracprec
