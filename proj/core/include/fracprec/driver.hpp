// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_DRIVER_HPP
#define FRACPREC_DRIVER_HPP

#include <functional>
#include <string>

#include "fracprec/assembly.hpp"
#include "fracprec/gmres.hpp"
#include "fracprec/precond.hpp"

namespace fracprec {

/// Full problem description: geometry, materials, loads and the per-step
/// injection schedule (rate per source face, one entry per time step).
struct ProblemSpec {
  std::string name;
  MeshSpec mesh;
  MaterialParams materials;
  double dt = 0.5;
  double t_max = 6.0;
  std::vector<double> schedule;  // m^3/s per source face, length = n_steps
  /// Sources sit at the center face of each fracture patch.
  bool inject_at_fracture_centers = true;

  int n_steps() const { return static_cast<int>(std::lround(t_max / dt)); }
  void validate() const;
};

struct LinearSolveRecord {
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<double> residuals;
};

struct StepRecord {
  int step = 0;       // 1-based
  double time = 0.0;  // end-of-step time
  int n_active_set = 0;
  int n_newton = 0;
  int n_restarts = 0;
  std::vector<LinearSolveRecord> solves;
  int n_stick = 0, n_slip = 0, n_open = 0;
  bool failed = false;

  double mean_linear_iterations() const;
};

struct SimulationHistory {
  std::vector<StepRecord> steps;
  bool failed = false;
  std::string failure;
  BlockVector final_x;
  FractureState final_state;

  int total_active_set() const;
  int total_newton() const;
  int total_linear_iterations() const;
  double mean_linear_iterations() const;
  int min_linear_iterations() const;
  int max_linear_iterations() const;
};

struct DriverOptions {
  PrecondConfig precond;
  double gmres_tol = 1e-8;
  int gmres_max_iter = 500;
  double newton_rtol = 1e-6;
  int max_newton = 30;
  int max_active_set = 20;
  int max_restarts = 2;
  bool freeze_labels = false;
  int max_steps = 0;  // 0 = run the full schedule
  /// Called once per time step with the Jacobian assembled at the step's
  /// first Newton iteration.
  std::function<void(int step, const BlockSystem& J, const FractureState& state,
                     const Mesh& mesh, double dt)>
      snapshot_hook;
};

/// Outer active-set loop around an inner Newton loop; each linear system is
/// solved by right-preconditioned full GMRES. Newton divergence triggers a
/// restart from the fully closed configuration.
SimulationHistory active_set_solve(const ProblemSpec& problem, const DriverOptions& opts);

/// Injection rates per face for one step of the schedule.
std::vector<double> source_vector(const ProblemSpec& problem, const Mesh& mesh, int step);

}  // namespace fracprec

#endif
