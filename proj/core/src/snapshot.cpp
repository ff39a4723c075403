// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/snapshot.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fracprec/errors.hpp"
#include "fracprec/mmio.hpp"

namespace fracprec {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Snapshot::region_string() const {
  std::string s;
  s.reserve(region.size());
  for (Region r : region) s.push_back(static_cast<char>(r));
  return s;
}

void export_snapshot(const std::string& dir, const Snapshot& snap) {
  snap.J.check_shapes();
  if (static_cast<int>(snap.region.size()) != snap.J.n_p)
    throw std::invalid_argument("export_snapshot: region labels size mismatch");
  fs::create_directories(dir);
  auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  write_matrix_market(path("A.mtx"), snap.J.A);
  write_matrix_market(path("C1.mtx"), snap.J.C1);
  write_matrix_market(path("Q1.mtx"), snap.J.Q1);
  write_matrix_market(path("C2.mtx"), snap.J.C2);
  write_matrix_market(path("H.mtx"), snap.J.H);
  write_matrix_market(path("Q2.mtx"), snap.J.Q2);
  write_matrix_market(path("T.mtx"), snap.J.T);
  CsrMatrix fu = snap.J.F_u.n_rows > 0 ? snap.J.F_u : CsrMatrix(snap.J.n_p, snap.J.n_u);
  write_matrix_market(path("F_u.mtx"), fu);

  json m;
  m["n_u"] = snap.J.n_u;
  m["n_t"] = snap.J.n_t;
  m["n_p"] = snap.J.n_p;
  m["dt"] = snap.dt;
  m["region"] = snap.region_string();
  m["blocks"] = {{"A", "A.mtx"},   {"C1", "C1.mtx"}, {"Q1", "Q1.mtx"}, {"C2", "C2.mtx"},
                 {"H", "H.mtx"},   {"Q2", "Q2.mtx"}, {"T", "T.mtx"},   {"F_u", "F_u.mtx"}};
  if (!snap.node_coords.empty()) {
    m["coords"] = "coords.txt";
    std::vector<double> flat;
    flat.reserve(snap.node_coords.size() * 3);
    for (const auto& c : snap.node_coords) {
      flat.push_back(c[0]);
      flat.push_back(c[1]);
      flat.push_back(c[2]);
    }
    write_vector_text(path("coords.txt"), flat);
  }
  std::ofstream out(path("manifest.json"));
  out << m.dump(2) << "\n";
}

Snapshot import_snapshot(const std::string& dir) {
  auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  std::ifstream in(path("manifest.json"));
  if (!in) throw std::invalid_argument("import_snapshot: missing manifest.json in " + dir);
  json m = json::parse(in);

  Snapshot snap;
  snap.J.n_u = m.at("n_u").get<int>();
  snap.J.n_t = m.at("n_t").get<int>();
  snap.J.n_p = m.at("n_p").get<int>();
  snap.dt = m.at("dt").get<double>();
  if (snap.J.n_t != 3 * snap.J.n_p)
    throw std::invalid_argument("import_snapshot: manifest violates n_t == 3*n_p");
  std::string reg = m.at("region").get<std::string>();
  if (static_cast<int>(reg.size()) != snap.J.n_p)
    throw std::invalid_argument("import_snapshot: region string length mismatch");
  for (char ch : reg) {
    if (ch != 's' && ch != 'l' && ch != 'o')
      throw std::invalid_argument("import_snapshot: bad region label");
    snap.region.push_back(static_cast<Region>(ch));
  }
  const auto& blocks = m.at("blocks");
  snap.J.A = read_matrix_market(path(blocks.at("A").get<std::string>()));
  snap.J.C1 = read_matrix_market(path(blocks.at("C1").get<std::string>()));
  snap.J.Q1 = read_matrix_market(path(blocks.at("Q1").get<std::string>()));
  snap.J.C2 = read_matrix_market(path(blocks.at("C2").get<std::string>()));
  snap.J.H = read_matrix_market(path(blocks.at("H").get<std::string>()));
  snap.J.Q2 = read_matrix_market(path(blocks.at("Q2").get<std::string>()));
  snap.J.T = read_matrix_market(path(blocks.at("T").get<std::string>()));
  if (blocks.contains("F_u")) snap.J.F_u = read_matrix_market(path(blocks.at("F_u").get<std::string>()));
  snap.J.check_shapes();
  if (m.contains("coords")) {
    std::vector<double> flat = read_vector_text(path(m.at("coords").get<std::string>()));
    if (static_cast<int>(flat.size()) != snap.J.n_u)
      throw std::invalid_argument("import_snapshot: coords length mismatch");
    for (size_t i = 0; i + 2 < flat.size(); i += 3)
      snap.node_coords.push_back({flat[i], flat[i + 1], flat[i + 2]});
  }
  return snap;
}

}  // namespace fracprec
