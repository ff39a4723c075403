// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Batch front-end: generate problems, run simulations, export block
// snapshots, run the spectral diagnostics, and emit scalability tables.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracprec/bounds.hpp"
#include "fracprec/dense_eigen.hpp"
#include "fracprec/driver.hpp"
#include "fracprec/errors.hpp"
#include "fracprec/gmres.hpp"
#include "fracprec/presets.hpp"
#include "fracprec/snapshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracprec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

PrecondConfig::Variant parse_pc(const std::string& s) {
  if (s == "tpu") return PrecondConfig::Variant::tpu;
  if (s == "tup") return PrecondConfig::Variant::tup;
  if (s == "tup-star") return PrecondConfig::Variant::tup_star;
  throw std::invalid_argument("unknown preconditioner variant: " + s);
}

PrecondConfig::Inner parse_inner(const std::string& s) {
  if (s == "amg") return PrecondConfig::Inner::amg;
  if (s == "direct") return PrecondConfig::Inner::direct;
  throw std::invalid_argument("unknown inner solver: " + s);
}

void apply_amg_json(AmgConfig& cfg, const json& j) {
  cfg.strength_threshold = j.value("strength_threshold", cfg.strength_threshold);
  cfg.max_coarse = j.value("max_coarse", cfg.max_coarse);
  cfg.pre_sweeps = j.value("pre_sweeps", cfg.pre_sweeps);
  cfg.post_sweeps = j.value("post_sweeps", cfg.post_sweeps);
  cfg.cycles_per_apply = j.value("cycles_per_apply", cfg.cycles_per_apply);
  cfg.prolongation_smoothing = j.value("prolongation_smoothing", cfg.prolongation_smoothing);
  if (j.contains("smoother")) {
    std::string s = j.at("smoother").get<std::string>();
    if (s == "sgs")
      cfg.smoother = AmgConfig::Smoother::sgs;
    else if (s == "jacobi")
      cfg.smoother = AmgConfig::Smoother::weighted_jacobi;
    else
      throw std::invalid_argument("unknown smoother: " + s);
  }
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open problem file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return problem_from_json(text);
}

json runrecord_json(const SimulationHistory& hist, const std::string& problem,
                    const std::string& pc, const std::string& inner, double tol, int max_iter,
                    unsigned seed, bool with_timing) {
  json steps = json::array();
  for (const auto& st : hist.steps) {
    json solves = json::array();
    for (const auto& s : st.solves) {
      json e;
      e["iterations"] = s.iterations;
      e["converged"] = s.converged;
      if (with_timing) e["wall_seconds"] = s.wall_seconds;
      solves.push_back(e);
    }
    json rec;
    rec["step"] = st.step;
    rec["time"] = st.time;
    rec["n_active_set"] = st.n_active_set;
    rec["n_newton"] = st.n_newton;
    rec["n_restarts"] = st.n_restarts;
    rec["n_stick"] = st.n_stick;
    rec["n_slip"] = st.n_slip;
    rec["n_open"] = st.n_open;
    rec["mean_linear_iterations"] = st.mean_linear_iterations();
    rec["failed"] = st.failed;
    rec["solves"] = std::move(solves);
    steps.push_back(std::move(rec));
  }
  json out;
  out["problem"] = problem;
  out["pc"] = pc;
  out["inner"] = inner;
  out["tol"] = tol;
  out["max_iter"] = max_iter;
  out["seed"] = seed;
  out["failed"] = hist.failed;
  if (!hist.failure.empty()) out["failure"] = hist.failure;
  out["steps"] = std::move(steps);
  out["totals"] = {{"N_l", hist.total_active_set()},
                   {"N_N", hist.total_newton()},
                   {"N_G_total", hist.total_linear_iterations()},
                   {"N_G_mean", hist.mean_linear_iterations()},
                   {"N_G_min", hist.min_linear_iterations()},
                   {"N_G_max", hist.max_linear_iterations()}};
  return out;
}

void write_residual_csv(const std::string& path, const SimulationHistory& hist) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::invalid_argument("cannot write " + path);
  std::fprintf(f, "solve_id,iter,rel_residual\n");
  int id = 0;
  for (const auto& st : hist.steps)
    for (const auto& s : st.solves) {
      for (size_t i = 0; i < s.residuals.size(); ++i)
        std::fprintf(f, "%d,%zu,%.17g\n", id, i + 1, s.residuals[i]);
      ++id;
    }
  std::fclose(f);
}

void write_fields_csv(const std::string& dir, const Mesh& mesh, const BlockVector& x) {
  {
    std::FILE* f = std::fopen((fs::path(dir) / "final_u.csv").string().c_str(), "w");
    std::fprintf(f, "node,x,y,z,ux,uy,uz\n");
    for (int v = 0; v < mesh.n_nodes(); ++v)
      std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", v, mesh.nodes[v][0],
                   mesh.nodes[v][1], mesh.nodes[v][2], x.u[3 * v], x.u[3 * v + 1],
                   x.u[3 * v + 2]);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((fs::path(dir) / "final_p.csv").string().c_str(), "w");
    std::fprintf(f, "face,cx,cy,cz,p\n");
    for (int k = 0; k < mesh.n_p(); ++k)
      std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", k, mesh.faces[k].centroid[0],
                   mesh.faces[k].centroid[1], mesh.faces[k].centroid[2], x.p[k]);
    std::fclose(f);
  }
}

int cmd_generate(const std::string& preset, const std::string& config, int cells,
                 const std::string& out) {
  ProblemSpec p;
  if (!config.empty()) {
    p = load_problem(config);
  } else if (preset == "test2a" && cells > 0) {
    p = make_test2a(cells);
  } else {
    p = make_preset(preset);
  }
  Mesh mesh = build_mesh(p.mesh);  // validates the geometry
  fs::create_directories(out);
  std::ofstream f(fs::path(out) / "problem.json");
  f << problem_to_json(p) << "\n";
  json info;
  info["name"] = p.name;
  info["n_u"] = mesh.n_u();
  info["n_t"] = mesh.n_t();
  info["n_p"] = mesh.n_p();
  info["total"] = mesh.n_u() + mesh.n_t() + mesh.n_p();
  info["n_nodes"] = mesh.n_nodes();
  info["n_cells"] = mesh.cells.size();
  std::ofstream g(fs::path(out) / "mesh_info.json");
  g << info.dump(2) << "\n";
  std::printf("generated %s: n_u=%d n_t=%d n_p=%d (total %d)\n", p.name.c_str(), mesh.n_u(),
              mesh.n_t(), mesh.n_p(), mesh.n_u() + mesh.n_t() + mesh.n_p());
  return kExitOk;
}

int cmd_solve(const std::string& problem_path, const std::string& pc, const std::string& inner,
              double tol, int max_iter, const std::string& out, int max_steps,
              const std::string& snapshots, unsigned seed, const std::string& amg_json,
              bool no_timing) {
  ProblemSpec p = load_problem(problem_path);
  DriverOptions opts;
  opts.precond.variant = parse_pc(pc);
  opts.precond.inner = parse_inner(inner);
  if (!amg_json.empty()) apply_amg_json(opts.precond.amg, json::parse(amg_json));
  opts.gmres_tol = tol;
  opts.gmres_max_iter = max_iter;
  opts.max_steps = max_steps;
  if (!snapshots.empty()) {
    fs::create_directories(snapshots);
    opts.snapshot_hook = [&](int step, const BlockSystem& J, const FractureState& state,
                             const Mesh& mesh, double dt) {
      Snapshot snap;
      snap.J = J;
      snap.region = state.region;
      snap.dt = dt;
      snap.node_coords = mesh.nodes;
      export_snapshot((fs::path(snapshots) / ("step_" + std::to_string(step))).string(), snap);
    };
  }

  Mesh mesh = build_mesh(p.mesh);
  SimulationHistory hist = active_set_solve(p, opts);

  fs::create_directories(out);
  {
    std::ofstream f(fs::path(out) / "runrecord.json");
    f << runrecord_json(hist, p.name, pc, inner, tol, max_iter, seed, !no_timing).dump(2)
      << "\n";
  }
  write_residual_csv((fs::path(out) / "residuals.csv").string(), hist);
  write_fields_csv(out, mesh, hist.final_x);

  std::printf("%s: steps=%zu N_l=%d N_N=%d NG_mean=%.2f NG_min=%d NG_max=%d%s\n", p.name.c_str(),
              hist.steps.size(), hist.total_active_set(), hist.total_newton(),
              hist.mean_linear_iterations(), hist.min_linear_iterations(),
              hist.max_linear_iterations(), hist.failed ? " [FAILED]" : "");
  return hist.failed ? kExitSolver : kExitOk;
}

int cmd_bench(const std::string& family, const std::string& levels, const std::string& pc,
              const std::string& inner, double tol, int max_iter, const std::string& out,
              int max_steps) {
  std::vector<ProblemSpec> problems;
  std::string item;
  std::istringstream ss(levels);
  while (std::getline(ss, item, ',')) {
    if (family == "test2b")
      problems.push_back(make_test2b(std::stoi(item)));
    else if (family == "test2a") {
      if (item == "coarse")
        problems.push_back(make_test2a(25));
      else if (item == "fine")
        problems.push_back(make_test2a(50));
      else
        problems.push_back(make_test2a(std::stoi(item)));
    } else {
      throw std::invalid_argument("unknown preset family: " + family);
    }
  }
  if (problems.empty()) throw std::invalid_argument("no levels requested");

  std::FILE* f = std::fopen(out.c_str(), "w");
  if (!f) throw std::invalid_argument("cannot write " + out);
  std::fprintf(f,
               "level,total_unknowns,n_u,n_t,n_p,fraction_2d,N_l,N_N,NG_mean,NG_min,NG_max,"
               "mean_solve_seconds,failed\n");
  for (size_t i = 0; i < problems.size(); ++i) {
    const ProblemSpec& p = problems[i];
    Mesh mesh = build_mesh(p.mesh);
    int total = mesh.n_u() + mesh.n_t() + mesh.n_p();
    double frac2d = static_cast<double>(mesh.n_t() + mesh.n_p()) / total;
    DriverOptions opts;
    opts.precond.variant = parse_pc(pc);
    opts.precond.inner = parse_inner(inner);
    opts.gmres_tol = tol;
    opts.gmres_max_iter = max_iter;
    opts.max_steps = max_steps;
    SimulationHistory hist = active_set_solve(p, opts);
    double mean_wall = 0;
    int n_solves = 0;
    for (const auto& st : hist.steps)
      for (const auto& s : st.solves) {
        mean_wall += s.wall_seconds;
        ++n_solves;
      }
    if (n_solves > 0) mean_wall /= n_solves;
    std::fprintf(f, "%s,%d,%d,%d,%d,%.6f,%d,%d,%.3f,%d,%d,%.6f,%d\n", p.name.c_str(), total,
                 mesh.n_u(), mesh.n_t(), mesh.n_p(), frac2d, hist.total_active_set(),
                 hist.total_newton(), hist.mean_linear_iterations(),
                 hist.min_linear_iterations(), hist.max_linear_iterations(), mean_wall,
                 hist.failed ? 1 : 0);
    std::fflush(f);
    std::printf("%s: NG_mean=%.2f%s\n", p.name.c_str(), hist.mean_linear_iterations(),
                hist.failed ? " [FAILED]" : "");
  }
  std::fclose(f);
  return kExitOk;
}

int cmd_spectrum(const std::string& snapshot_path, const std::string& inner,
                 const std::string& out, bool exact, const std::string& amg_json) {
  Snapshot snap = import_snapshot(snapshot_path);
  if (snap.J.total_dimension() > kDensifyGuard) {
    std::fprintf(stderr,
                 "spectrum: snapshot dimension %d exceeds the dense guard %d; export a smaller "
                 "snapshot\n",
                 snap.J.total_dimension(), kDensifyGuard);
    return kExitInput;
  }
  PrecondConfig cfg;
  cfg.inner = parse_inner(inner);
  cfg.exact_factorization = exact;
  if (!amg_json.empty()) apply_amg_json(cfg.amg, json::parse(amg_json));
  fs::create_directories(out);

  TpuPreconditioner M1 = build_tpu(snap.J, cfg, snap.node_coords);
  TupPreconditioner M2 = build_tup(snap.J, cfg, snap.node_coords);
  BoundReport r1 = check_prop1(snap.J, M1);
  BoundReport r2 = check_prop2(snap.J, M2);
  {
    std::ofstream f(fs::path(out) / "boundreport_tpu.json");
    f << r1.to_json() << "\n";
    std::ofstream g(fs::path(out) / "boundreport_tup.json");
    g << r2.to_json() << "\n";
  }
  r1.write_eigenvalues_csv((fs::path(out) / "eigenvalues_tpu.csv").string());
  r2.write_eigenvalues_csv((fs::path(out) / "eigenvalues_tup.csv").string());

  // Schur spectra: |lambda| extremes and real-part sign counts
  std::FILE* f = std::fopen((fs::path(out) / "schur.csv").string().c_str(), "w");
  std::fprintf(f, "matrix,lambda_max,lambda_min,ratio,n_pos,n_neg,n_zero\n");
  auto report = [&](const char* name, const CsrMatrix& S) {
    auto lam = dense_eigenvalues(S.to_dense());
    double lmax = 0, lmin = std::numeric_limits<double>::infinity();
    for (const auto& l : lam) {
      lmax = std::max(lmax, std::abs(l));
      lmin = std::min(lmin, std::abs(l));
    }
    Inertia in = schur_inertia(S);
    std::fprintf(f, "%s,%.6e,%.6e,%.6e,%d,%d,%d\n", name, lmax, lmin,
                 lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity(), in.n_pos,
                 in.n_neg, in.n_zero);
    std::printf("%s: |lambda|max=%.3e |lambda|min=%.3e ratio=%.3e inertia=(%d,%d,%d)\n", name,
                lmax, lmin, lmin > 0 ? lmax / lmin : 0.0, in.n_pos, in.n_neg, in.n_zero);
  };
  report("S_tilde", M1.S);
  report("S1", M2.S1);
  report("S2_tilde", M2.S2);
  std::fclose(f);

  std::printf("prop1: holds=%d cluster=%d bound=%.3e worst=%.3e\n", r1.holds ? 1 : 0,
              r1.unit_cluster_size, r1.bound_rhs, r1.max_deviation);
  std::printf("prop2: holds=%d bound=%.3e worst=%.3e\n", r2.holds ? 1 : 0, r2.bound_rhs,
              r2.max_deviation);
  return kExitOk;
}

int cmd_export(const std::string& problem_path, const std::string& out) {
  ProblemSpec p = load_problem(problem_path);
  Mesh mesh = build_mesh(p.mesh);
  ModelOperators ops = assemble_linear(mesh, p.materials);
  FractureState state = FractureState::all_stick(mesh.n_p());
  BlockSystem J = assemble_jacobian(mesh, p.materials, state, ops, p.dt);
  Snapshot snap;
  snap.J = std::move(J);
  snap.region = state.region;
  snap.dt = p.dt;
  snap.node_coords = mesh.nodes;
  export_snapshot(out, snap);
  std::printf("exported all-stick snapshot of %s to %s\n", p.name.c_str(), out.c_str());
  return kExitOk;
}

int cmd_import(const std::string& snapshot_path, const std::string& out, unsigned seed) {
  Snapshot snap = import_snapshot(snapshot_path);
  // solvability smoke check: one preconditioned solve on a seeded rhs
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TupPreconditioner M = build_tup(snap.J, cfg, snap.node_coords);
  TupOperator Mop(M, snap.J);
  BlockSystemOperator Jop(snap.J);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> b(static_cast<size_t>(snap.J.total_dimension()));
  for (double& v : b) v = val(rng);
  auto [x, stats] = gmres(Jop, &Mop, b, 1e-8, 500);
  std::printf("imported %s: n_u=%d n_t=%d n_p=%d, smoke solve N_G=%d converged=%d\n",
              snapshot_path.c_str(), snap.J.n_u, snap.J.n_t, snap.J.n_p, stats.iterations,
              stats.converged ? 1 : 0);
  if (!out.empty()) export_snapshot(out, snap);
  return stats.converged ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracprec: block preconditioners for coupled contact and fracture flow"};
  app.require_subcommand(1);

  std::string preset = "mini", config, out = "out", problem, snapshot;
  std::string pc = "tup", inner = "amg", family = "test2b", levels = "1,2,3";
  std::string snapshots_dir, amg_json;
  double tol = 1e-8;
  int max_iter = 500, max_steps = 0, cells = 0;
  unsigned seed = 42;
  bool exact = false, no_timing = false;

  auto* gen = app.add_subcommand("generate", "write a problem bundle");
  gen->add_option("--preset", preset, "preset name or test2a with --cells");
  gen->add_option("--config", config, "problem JSON instead of a preset");
  gen->add_option("--cells", cells, "cells per side for the test2a family");
  gen->add_option("--out", out, "output directory");

  auto* sol = app.add_subcommand("solve", "run the nonlinear simulation");
  sol->add_option("problem", problem, "problem.json path")->required();
  sol->add_option("--pc", pc, "tpu | tup | tup-star");
  sol->add_option("--inner", inner, "amg | direct");
  sol->add_option("--tol", tol, "GMRES relative tolerance");
  sol->add_option("--max-iter", max_iter, "GMRES iteration cap");
  sol->add_option("--out", out, "output directory");
  sol->add_option("--max-steps", max_steps, "run only the first N time steps");
  sol->add_option("--snapshots", snapshots_dir, "export per-step block snapshots here");
  sol->add_option("--seed", seed, "seed recorded in the run record");
  sol->add_option("--amg", amg_json, "AMG config JSON string");
  sol->add_flag("--no-timing", no_timing, "omit wall times from the run record");

  auto* ben = app.add_subcommand("bench-scalability", "refinement sweep table");
  ben->add_option("--family", family, "test2a | test2b");
  ben->add_option("--levels", levels, "comma list (levels or coarse/fine/cells)");
  ben->add_option("--pc", pc, "tpu | tup | tup-star");
  ben->add_option("--inner", inner, "amg | direct");
  ben->add_option("--tol", tol, "GMRES relative tolerance");
  ben->add_option("--max-iter", max_iter, "GMRES iteration cap");
  ben->add_option("--max-steps", max_steps, "limit time steps per level");
  ben->add_option("--out", out, "output CSV path");

  auto* spe = app.add_subcommand("spectrum", "bound checks and Schur spectra of a snapshot");
  spe->add_option("snapshot", snapshot, "snapshot directory")->required();
  spe->add_option("--inner", inner, "amg | direct");
  spe->add_option("--out", out, "output directory");
  spe->add_option("--amg", amg_json, "AMG config JSON string");
  spe->add_flag("--exact", exact, "exact-factorization preconditioners");

  auto* exp = app.add_subcommand("export", "assemble a problem and write its block snapshot");
  exp->add_option("problem", problem, "problem.json path")->required();
  exp->add_option("--out", out, "snapshot directory");

  auto* imp = app.add_subcommand("import", "validate a snapshot bundle (and optionally rewrite)");
  imp->add_option("snapshot", snapshot, "snapshot directory")->required();
  imp->add_option("--out", out, "re-export directory (optional)")->default_val("");
  imp->add_option("--seed", seed, "seed for the smoke-solve rhs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(preset, config, cells, out);
    if (sol->parsed())
      return cmd_solve(problem, pc, inner, tol, max_iter, out, max_steps, snapshots_dir, seed,
                       amg_json, no_timing);
    if (ben->parsed())
      return cmd_bench(family, levels, pc, inner, tol, max_iter, out, max_steps);
    if (spe->parsed()) return cmd_spectrum(snapshot, inner, out, exact, amg_json);
    if (exp->parsed()) return cmd_export(problem, out);
    if (imp->parsed()) return cmd_import(snapshot, out, seed);
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const geometry_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  }
  return kExitOk;
}
