// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/presets.hpp"

#include <cmath>

#include <json.hpp>

#include "fracprec/errors.hpp"

namespace fracprec {

using nlohmann::json;

namespace {

// Triangular injection history: ramp to q_max at t_max/2, then linear
// drawdown to -q_max at t_max (injection followed by extraction).
std::vector<double> injection_schedule(int n_steps, double q_max) {
  std::vector<double> q(static_cast<size_t>(n_steps));
  for (int i = 1; i <= n_steps; ++i) {
    double s = static_cast<double>(i) / n_steps;  // fraction of the cycle
    q[i - 1] = s <= 0.5 ? q_max * (2.0 * s) : q_max * (1.0 - 4.0 * (s - 0.5));
  }
  return q;
}

FaceBc roller() { return {FaceBcKind::roller, 0.0}; }
FaceBc fixed_face() { return {FaceBcKind::fixed, 0.0}; }
FaceBc load(double sigma) { return {FaceBcKind::load, sigma}; }

ProblemSpec test1() {
  ProblemSpec p;
  p.name = "test1";
  p.mesh.axes[0] = AxisSpec::uniform(10.0, 10);
  p.mesh.axes[1] = AxisSpec::segments({{4.0, 8}, {2.0, 20}, {4.0, 8}});
  p.mesh.axes[2] = AxisSpec::uniform(0.15, 6);
  p.mesh.fractures.push_back({0, 5.0, 4.0, 6.0, 0.0, 0.15});
  p.mesh.box_bc = {roller(), load(1.0e8), roller(), roller(), roller(), roller()};
  p.materials = MaterialParams{};
  p.dt = 0.5;
  p.t_max = 6.0;
  p.schedule = injection_schedule(12, 5.0e-4);
  return p;
}

ProblemSpec test3_desk() {
  ProblemSpec p;
  p.name = "test3-desk";
  p.mesh.axes[0] = AxisSpec::uniform(2.5, 25);
  p.mesh.axes[1] = AxisSpec::uniform(0.8, 8);
  p.mesh.axes[2] = AxisSpec::uniform(1.2, 12);
  // staggered patches mimic fractures intersected at varying positions
  p.mesh.fractures.push_back({0, 0.8, 0.1, 0.5, 0.2, 0.8});
  p.mesh.fractures.push_back({0, 1.2, 0.2, 0.6, 0.3, 0.9});
  p.mesh.fractures.push_back({0, 1.6, 0.3, 0.7, 0.4, 1.0});
  p.mesh.box_bc = {load(1.0e7), load(1.0e7), fixed_face(), fixed_face(), fixed_face(),
                   fixed_face()};
  p.materials = MaterialParams{};
  p.dt = 0.5;
  p.t_max = 6.0;
  p.schedule = injection_schedule(12, 2.0e-5);
  return p;
}

ProblemSpec mini() {
  ProblemSpec p;
  p.name = "mini";
  p.mesh.axes[0] = AxisSpec::uniform(4.0, 4);
  p.mesh.axes[1] = AxisSpec::segments({{1.5, 2}, {1.0, 6}, {1.5, 2}});
  p.mesh.axes[2] = AxisSpec::uniform(0.2, 2);
  p.mesh.fractures.push_back({0, 2.0, 1.5, 2.5, 0.0, 0.2});
  p.mesh.box_bc = {roller(), load(5.0e6), roller(), roller(), roller(), roller()};
  p.materials = MaterialParams{};
  p.dt = 0.5;
  p.t_max = 6.0;
  p.schedule = injection_schedule(12, 3.0e-4);
  return p;
}

}  // namespace

ProblemSpec make_test2a(int cells) {
  if (cells < 10 || cells % 5 != 0)
    throw std::invalid_argument("test2a: cells per side must be a positive multiple of 5");
  ProblemSpec p;
  p.name = "test2a-" + std::to_string(cells);
  for (int d = 0; d < 3; ++d) p.mesh.axes[d] = AxisSpec::uniform(1.0, cells);
  for (double x : {0.2, 0.4, 0.6, 0.8})
    p.mesh.fractures.push_back({0, x, 0.2, 0.8, 0.2, 0.8});
  p.mesh.box_bc = {load(1.0e7), load(1.0e7), fixed_face(), fixed_face(), fixed_face(),
                   fixed_face()};
  p.materials = MaterialParams{};
  p.dt = 0.5;
  p.t_max = 6.0;
  p.schedule = injection_schedule(12, 5.0e-4);
  return p;
}

ProblemSpec make_test2b(int level) {
  if (level < 1 || level > 6) throw std::invalid_argument("test2b: level must be in 1..6");
  ProblemSpec p;
  p.name = "test2b-level" + std::to_string(level);
  int cells = 10 * level;
  for (int d = 0; d < 3; ++d) p.mesh.axes[d] = AxisSpec::uniform(1.0, cells);
  for (int i = 1; i <= 9; ++i)
    p.mesh.fractures.push_back({0, 0.1 * i, 0.2, 0.8, 0.2, 0.8});
  p.mesh.box_bc = {load(1.0e7), load(1.0e7), fixed_face(), fixed_face(), fixed_face(),
                   fixed_face()};
  p.materials = MaterialParams{};
  p.dt = 0.5;
  p.t_max = 6.0;
  p.schedule = injection_schedule(12, 5.0e-4);
  return p;
}

ProblemSpec make_preset(const std::string& name) {
  if (name == "test1") return test1();
  if (name == "test2a-coarse") return make_test2a(25);
  if (name == "test2a-fine") return make_test2a(50);
  if (name.rfind("test2b-level", 0) == 0 && name.size() == 13)
    return make_test2b(name[12] - '0');
  if (name == "test3-desk") return test3_desk();
  if (name == "mini") return mini();
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"test1",         "test2a-coarse", "test2a-fine",   "test2b-level1", "test2b-level2",
          "test2b-level3", "test2b-level4", "test2b-level5", "test2b-level6", "test3-desk",
          "mini"};
}

namespace {

json axis_to_json(const AxisSpec& a) {
  json j;
  j["ticks"] = a.ticks;
  return j;
}

AxisSpec axis_from_json(const json& j) {
  AxisSpec a;
  if (j.contains("ticks")) {
    a.ticks = j.at("ticks").get<std::vector<double>>();
    if (a.cells() < 1) throw geometry_error("axis: need at least one cell");
    for (size_t i = 1; i < a.ticks.size(); ++i)
      if (!(a.ticks[i] > a.ticks[i - 1])) throw geometry_error("axis: ticks not increasing");
    return a;
  }
  if (j.contains("uniform"))
    return AxisSpec::uniform(j.at("uniform").at("length").get<double>(),
                             j.at("uniform").at("cells").get<int>());
  if (j.contains("segments")) {
    std::vector<std::pair<double, int>> segs;
    for (const auto& s : j.at("segments"))
      segs.emplace_back(s.at(0).get<double>(), s.at(1).get<int>());
    return AxisSpec::segments(segs);
  }
  throw std::invalid_argument("axis: expected ticks, uniform or segments");
}

json bc_to_json(const FaceBc& bc) {
  switch (bc.kind) {
    case FaceBcKind::free_surface:
      return "free";
    case FaceBcKind::roller:
      return "roller";
    case FaceBcKind::fixed:
      return "fixed";
    case FaceBcKind::load:
      return json{{"load", bc.sigma}};
  }
  return "free";
}

FaceBc bc_from_json(const json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "free") return {FaceBcKind::free_surface, 0.0};
    if (s == "roller") return roller();
    if (s == "fixed") return fixed_face();
    throw std::invalid_argument("bc: unknown kind " + s);
  }
  return load(j.at("load").get<double>());
}

}  // namespace

std::string problem_to_json(const ProblemSpec& p) {
  json j;
  j["name"] = p.name;
  j["axes"] = {axis_to_json(p.mesh.axes[0]), axis_to_json(p.mesh.axes[1]),
               axis_to_json(p.mesh.axes[2])};
  j["fractures"] = json::array();
  for (const auto& f : p.mesh.fractures)
    j["fractures"].push_back({{"normal_axis", f.normal_axis},
                              {"coord", f.coord},
                              {"range1", {f.lo1, f.hi1}},
                              {"range2", {f.lo2, f.hi2}}});
  const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  for (int i = 0; i < 6; ++i) j["bc"][names[i]] = bc_to_json(p.mesh.box_bc[i]);
  j["materials"] = {{"E", p.materials.E},
                    {"nu", p.materials.nu},
                    {"c", p.materials.c},
                    {"theta", p.materials.theta},
                    {"C_f0", p.materials.C_f0},
                    {"mu_f", p.materials.mu_f},
                    {"k_scale", p.materials.k_scale},
                    {"stab_beta", p.materials.stab_beta}};
  j["dt"] = p.dt;
  j["t_max"] = p.t_max;
  j["schedule"] = p.schedule;
  return j.dump(2);
}

ProblemSpec problem_from_json(const std::string& text) {
  json j = json::parse(text);
  ProblemSpec p;
  p.name = j.value("name", "problem");
  const auto& axes = j.at("axes");
  if (axes.size() != 3) throw std::invalid_argument("problem: need 3 axes");
  for (int d = 0; d < 3; ++d) p.mesh.axes[d] = axis_from_json(axes[d]);
  for (const auto& f : j.at("fractures")) {
    FractureSpec fs;
    fs.normal_axis = f.at("normal_axis").get<int>();
    fs.coord = f.at("coord").get<double>();
    fs.lo1 = f.at("range1").at(0).get<double>();
    fs.hi1 = f.at("range1").at(1).get<double>();
    fs.lo2 = f.at("range2").at(0).get<double>();
    fs.hi2 = f.at("range2").at(1).get<double>();
    p.mesh.fractures.push_back(fs);
  }
  const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  for (int i = 0; i < 6; ++i) p.mesh.box_bc[i] = bc_from_json(j.at("bc").at(names[i]));
  const auto& m = j.at("materials");
  p.materials.E = m.at("E").get<double>();
  p.materials.nu = m.at("nu").get<double>();
  p.materials.c = m.at("c").get<double>();
  p.materials.theta = m.contains("theta") ? m.at("theta").get<double>()
                                          : m.at("theta_deg").get<double>() * M_PI / 180.0;
  p.materials.C_f0 = m.at("C_f0").get<double>();
  p.materials.mu_f = m.at("mu_f").get<double>();
  p.materials.k_scale = m.value("k_scale", 0.0);
  p.materials.stab_beta = m.value("stab_beta", 1.0);
  p.dt = j.at("dt").get<double>();
  p.t_max = j.at("t_max").get<double>();
  p.schedule = j.at("schedule").get<std::vector<double>>();
  p.validate();
  return p;
}

}  // namespace fracprec
