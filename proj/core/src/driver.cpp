// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "fracprec/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "fracprec/errors.hpp"

namespace fracprec {

void ProblemSpec::validate() const {
  materials.validate();
  if (!(dt > 0.0) || !(t_max > 0.0)) throw std::invalid_argument("ProblemSpec: bad time grid");
  if (static_cast<int>(schedule.size()) < n_steps())
    throw std::invalid_argument("ProblemSpec: schedule shorter than the number of steps");
}

double StepRecord::mean_linear_iterations() const {
  if (solves.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : solves) s += r.iterations;
  return s / static_cast<double>(solves.size());
}

int SimulationHistory::total_active_set() const {
  int s = 0;
  for (const auto& st : steps) s += st.n_active_set;
  return s;
}

int SimulationHistory::total_newton() const {
  int s = 0;
  for (const auto& st : steps) s += st.n_newton;
  return s;
}

int SimulationHistory::total_linear_iterations() const {
  int s = 0;
  for (const auto& st : steps)
    for (const auto& r : st.solves) s += r.iterations;
  return s;
}

double SimulationHistory::mean_linear_iterations() const {
  int n = 0;
  for (const auto& st : steps) n += static_cast<int>(st.solves.size());
  return n == 0 ? 0.0 : static_cast<double>(total_linear_iterations()) / n;
}

int SimulationHistory::min_linear_iterations() const {
  int m = std::numeric_limits<int>::max();
  for (const auto& st : steps)
    for (const auto& r : st.solves) m = std::min(m, r.iterations);
  return m == std::numeric_limits<int>::max() ? 0 : m;
}

int SimulationHistory::max_linear_iterations() const {
  int m = 0;
  for (const auto& st : steps)
    for (const auto& r : st.solves) m = std::max(m, r.iterations);
  return m;
}

std::vector<double> source_vector(const ProblemSpec& problem, const Mesh& mesh, int step) {
  std::vector<double> q(static_cast<size_t>(mesh.n_p()), 0.0);
  if (!problem.inject_at_fracture_centers) return q;
  double rate = problem.schedule[static_cast<size_t>(step) - 1];
  if (rate == 0.0) return q;
  // center face of each fracture patch
  int n_frac = 0;
  for (const auto& f : mesh.faces) n_frac = std::max(n_frac, f.fracture_id + 1);
  for (int fr = 0; fr < n_frac; ++fr) {
    int best = -1, best_i1 = -1, best_i2 = -1;
    int max_i1 = 0, max_i2 = 0;
    for (int f = 0; f < mesh.n_p(); ++f)
      if (mesh.faces[f].fracture_id == fr) {
        max_i1 = std::max(max_i1, mesh.faces[f].i1);
        max_i2 = std::max(max_i2, mesh.faces[f].i2);
      }
    int ci1 = max_i1 / 2, ci2 = max_i2 / 2;
    for (int f = 0; f < mesh.n_p(); ++f) {
      const auto& face = mesh.faces[f];
      if (face.fracture_id == fr && face.i1 == ci1 && face.i2 == ci2) {
        best = f;
        break;
      }
    }
    if (best >= 0) q[best] += rate;
  }
  return q;
}

namespace {

// The SI-unit blocks differ by many orders of magnitude (force rows vs
// jump-constraint rows vs flux rows). A symmetric block scaling
// D = blkdiag(I, st*I, sp*I) balances the mixed residual norm; the solve
// runs on D J D, which is similar to J M^-1 under the matching
// preconditioner transform, so iteration counts and spectra carry over.
struct BlockScaling {
  double st = 1.0, sp = 1.0;
  int n_u = 0, n_t = 0, n_p = 0;

  static double max_abs_diag(const CsrMatrix& M) {
    double m = 0.0;
    for (double v : diag_extract(M)) m = std::max(m, std::abs(v));
    return m;
  }

  static BlockScaling from(const BlockSystem& J) {
    BlockScaling s;
    s.n_u = J.n_u;
    s.n_t = J.n_t;
    s.n_p = J.n_p;
    double da = max_abs_diag(J.A);
    double dh = max_abs_diag(J.H);
    double dt = max_abs_diag(J.T);
    if (da > 0.0 && dh > 0.0) s.st = std::sqrt(da / dh);
    if (da > 0.0 && dt > 0.0) s.sp = std::sqrt(da / dt);
    return s;
  }

  void scale(std::vector<double>& v, bool inverse) const {
    double at = inverse ? 1.0 / st : st;
    double ap = inverse ? 1.0 / sp : sp;
    for (int i = 0; i < n_t; ++i) v[static_cast<size_t>(n_u) + i] *= at;
    for (int i = 0; i < n_p; ++i) v[static_cast<size_t>(n_u) + n_t + i] *= ap;
  }

  double scaled_norm(const BlockVector& r) const {
    double s = 0.0;
    for (double v : r.u) s += v * v;
    for (double v : r.t) s += (st * v) * (st * v);
    for (double v : r.p) s += (sp * v) * (sp * v);
    return std::sqrt(s);
  }
};

struct PrecondHolder {
  PrecondConfig::Variant variant;
  std::optional<TpuPreconditioner> tpu;
  std::optional<TupPreconditioner> tup;
  std::optional<TpuOperator> tpu_op;
  std::optional<TupOperator> tup_op;

  const LinearOperator* build(const BlockSystem& J, const PrecondConfig& cfg,
                              std::span<const std::array<double, 3>> coords) {
    variant = cfg.variant;
    if (cfg.variant == PrecondConfig::Variant::tpu) {
      tpu.emplace(build_tpu(J, cfg, coords));
      tpu_op.emplace(*tpu, J);
      return &*tpu_op;
    }
    tup.emplace(build_tup(J, cfg, coords));
    tup_op.emplace(*tup, J, cfg.variant == PrecondConfig::Variant::tup_star);
    return &*tup_op;
  }
};

double block_norm(const BlockVector& v) { return v.norm2(); }

}  // namespace

SimulationHistory active_set_solve(const ProblemSpec& problem, const DriverOptions& opts) {
  problem.validate();
  Mesh mesh = build_mesh(problem.mesh);
  ModelOperators ops = assemble_linear(mesh, problem.materials);
  const MaterialParams& mat = problem.materials;

  SimulationHistory hist;
  FractureState state = FractureState::all_stick(mesh.n_p());
  BlockVector x(mesh.n_u(), mesh.n_t(), mesh.n_p());

  int n_steps = problem.n_steps();
  if (opts.max_steps > 0) n_steps = std::min(n_steps, opts.max_steps);

  for (int step = 1; step <= n_steps; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.time = step * problem.dt;
    std::vector<double> q = source_vector(problem, mesh, step);

    BlockVector x_start = x;
    FractureState state_start = state;
    int restarts = 0;
    bool step_done = false, snapshot_taken = false;

    while (!step_done) {
      bool diverged = false;
      for (int as_iter = 0; as_iter < opts.max_active_set; ++as_iter) {
        ++rec.n_active_set;
        update_state_iterates(mesh, mat, ops, x, state);
        BlockSystem J = assemble_jacobian(mesh, mat, state, ops, problem.dt);
        BlockScaling D = BlockScaling::from(J);
        BlockVector r = residual(mesh, mat, state, ops, x, problem.dt, q);
        const double r0 = D.scaled_norm(r);
        // Floating-point floor of the residual evaluation, tied to the
        // load-scale residual; guards steps whose increment is tiny.
        double rfloor;
        {
          BlockVector zero(J.n_u, J.n_t, J.n_p);
          BlockVector rload = residual(mesh, mat, state, ops, zero, problem.dt, q);
          rfloor = 1e-11 * std::max(D.scaled_norm(rload), r0);
        }
        double rn = r0;
        int newton = 0;
        diverged = false;
        bool first_assembly = true;
        int collapsed_searches = 0;
        state.freeze_directions = false;
        while (rn > std::max(opts.newton_rtol * r0, rfloor) && r0 > 0.0) {
          if (newton >= opts.max_newton) {
            diverged = true;
            break;
          }
          if (!first_assembly) {
            J = assemble_jacobian(mesh, mat, state, ops, problem.dt);
            D = BlockScaling::from(J);
          }
          first_assembly = false;
          if (opts.snapshot_hook && !snapshot_taken) {
            opts.snapshot_hook(step, J, state, mesh, problem.dt);
            snapshot_taken = true;
          }
          PrecondHolder pc;
          const LinearOperator* M = pc.build(J, opts.precond, mesh.nodes);
          BlockSystemOperator Jop(J);
          const int n = J.total_dimension();
          FunctionOperator Jscaled(n, [&](std::span<const double> v) {
            std::vector<double> w(v.begin(), v.end());
            D.scale(w, false);
            std::vector<double> y(static_cast<size_t>(n));
            Jop.apply(w, y);
            D.scale(y, false);
            return y;
          });
          FunctionOperator Mscaled(n, [&](std::span<const double> v) {
            std::vector<double> w(v.begin(), v.end());
            D.scale(w, true);
            std::vector<double> y(static_cast<size_t>(n));
            M->apply(w, y);
            D.scale(y, true);
            return y;
          });
          std::vector<double> rhs = r.flatten();
          for (double& v : rhs) v = -v;
          D.scale(rhs, false);
          auto t0 = std::chrono::steady_clock::now();
          auto [dxs, stats] = gmres(Jscaled, &Mscaled, rhs, opts.gmres_tol, opts.gmres_max_iter);
          auto t1 = std::chrono::steady_clock::now();
          D.scale(dxs, false);  // x = D x'
          LinearSolveRecord lr;
          lr.iterations = stats.iterations;
          lr.converged = stats.converged;
          lr.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
          lr.residuals = stats.relative_residuals;
          rec.solves.push_back(std::move(lr));

          // Backtracking on the scaled residual norm; slip-direction flips
          // otherwise drive period-2 Newton cycles.
          BlockVector dxb = BlockVector::split(dxs, J.n_u, J.n_t, J.n_p);
          BlockVector x_old = x;
          double rn_old = rn;
          double lambda = 1.0;
          for (int ls = 0; ls < 8; ++ls) {
            for (int i = 0; i < J.n_u; ++i) x.u[i] = x_old.u[i] + lambda * dxb.u[i];
            for (int i = 0; i < J.n_t; ++i) x.t[i] = x_old.t[i] + lambda * dxb.t[i];
            for (int i = 0; i < J.n_p; ++i) x.p[i] = x_old.p[i] + lambda * dxb.p[i];
            update_state_iterates(mesh, mat, ops, x, state);
            r = residual(mesh, mat, state, ops, x, problem.dt, q);
            rn = D.scaled_norm(r);
            if (rn <= (1.0 - 1e-4 * lambda) * rn_old || rn <= rfloor) break;
            lambda *= 0.5;
          }
          // Repeated line-search collapse: latch the slip directions and
          // continue on the smoothed problem.
          if (lambda < 0.02) {
            if (++collapsed_searches >= 2 && !state.freeze_directions) {
              state.freeze_directions = true;
              collapsed_searches = 0;
              r = residual(mesh, mat, state, ops, x, problem.dt, q);
              rn = D.scaled_norm(r);
            }
          } else {
            collapsed_searches = 0;
          }
          ++newton;
          ++rec.n_newton;
          if (!std::isfinite(rn) || rn > 1e4 * std::max(r0, 1e-300)) {
            diverged = true;
            break;
          }
        }
        state.freeze_directions = false;
        if (diverged) break;

        // Coulomb consistency check. A transition band (relative to the
        // field scales, widened if the loop drags on) suppresses label
        // flapping of faces sitting exactly on a regime boundary.
        double tscale = 0.0, gscale = 0.0;
        for (int f = 0; f < mesh.n_p(); ++f) {
          tscale = std::max(tscale, std::sqrt(state.traction[f][0] * state.traction[f][0] +
                                              state.traction[f][1] * state.traction[f][1] +
                                              state.traction[f][2] * state.traction[f][2]));
          gscale = std::max(gscale, std::abs(state.gap[f][0]));
        }
        double band = 1e-6 * std::pow(10.0, std::max(0, as_iter - 9));
        double band_t = band * tscale, band_g = band * std::max(gscale, 1e-12);
        int changed = 0;
        std::vector<Region> next(state.region);
        if (!opts.freeze_labels) {
          for (int f = 0; f < mesh.n_p(); ++f) {
            Region cur = state.region[f];
            Region fresh = coulomb_classify(state.traction[f], state.gap[f], mat, tscale);
            if (fresh != cur) {
              bool opening = fresh == Region::open && cur != Region::open;
              bool closing = cur == Region::open && fresh != Region::open;
              if (opening && !(state.traction[f][0] > band_t)) fresh = cur;
              if (closing && !(state.gap[f][0] < -band_g)) fresh = cur;
              if (!opening && !closing) {
                // stick <-> slip: require a clear crossing of the cone
                double tau = mat.tau_max(state.traction[f][0]);
                double tt = std::hypot(state.traction[f][1], state.traction[f][2]);
                if (fresh == Region::slip && !(tt > tau + band_t)) fresh = cur;
                if (fresh == Region::stick && !(tt < tau - band_t)) fresh = cur;
              }
            }
            next[f] = fresh;
            if (next[f] != state.region[f]) ++changed;
          }
        }
        if (changed == 0) {
          step_done = true;
          break;
        }
        for (int f = 0; f < mesh.n_p(); ++f) {
          if (next[f] == Region::open && state.region[f] != Region::open) {
            // traction is known (zero) on open faces
            for (int c = 0; c < 3; ++c) {
              x.t[3 * f + c] = 0.0;
              state.traction[f][c] = 0.0;
            }
          }
          if (next[f] == Region::slip && state.region[f] == Region::stick) {
            // elastic-predictor slip direction
            double tt = std::hypot(state.traction[f][1], state.traction[f][2]);
            if (tt > 0.0) {
              state.slip_dir[f][0] = state.traction[f][1] / tt;
              state.slip_dir[f][1] = state.traction[f][2] / tt;
            }
          }
          state.region[f] = next[f];
        }
      }
      if (step_done) break;
      // Newton divergence or active-set exhaustion: restart from the fully
      // closed configuration.
      ++restarts;
      ++rec.n_restarts;
      if (restarts > opts.max_restarts) {
        rec.failed = true;
        hist.failed = true;
        hist.failure = "step " + std::to_string(step) +
                       (diverged ? ": Newton divergence" : ": active-set loop not converged");
        break;
      }
      x = x_start;
      state = state_start;
      for (auto& rg : state.region) rg = Region::stick;
    }

    state.count(rec.n_stick, rec.n_slip, rec.n_open);
    hist.steps.push_back(std::move(rec));
    if (hist.failed) break;

    // accept the step: current gaps become the previous-step gaps; closed
    // faces carry zero aperture, tangential slip accumulates
    update_state_iterates(mesh, mat, ops, x, state);
    for (int f = 0; f < mesh.n_p(); ++f) {
      state.gap_prev[f][0] = state.region[f] == Region::open ? state.gap[f][0] : 0.0;
      state.gap_prev[f][1] = state.gap[f][1];
      state.gap_prev[f][2] = state.gap[f][2];
    }
  }

  hist.final_x = x;
  hist.final_state = state;
  return hist;
}

}  // namespace fracprec
