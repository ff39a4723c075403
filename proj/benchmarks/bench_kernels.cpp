// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "fracprec/amg.hpp"
#include "fracprec/assembly.hpp"
#include "fracprec/gmres.hpp"
#include "fracprec/precond.hpp"
#include "fracprec/presets.hpp"

using namespace fracprec;

namespace {

CsrMatrix poisson3d(int m) {
  const int n = m * m * m;
  auto id = [m](int i, int j, int k) { return i + m * (j + m * k); };
  std::vector<CsrMatrix::Triplet> t;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        int r = id(i, j, k);
        t.push_back({r, r, 6.0});
        if (i > 0) t.push_back({r, id(i - 1, j, k), -1.0});
        if (i + 1 < m) t.push_back({r, id(i + 1, j, k), -1.0});
        if (j > 0) t.push_back({r, id(i, j - 1, k), -1.0});
        if (j + 1 < m) t.push_back({r, id(i, j + 1, k), -1.0});
        if (k > 0) t.push_back({r, id(i, j, k - 1), -1.0});
        if (k + 1 < m) t.push_back({r, id(i, j, k + 1), -1.0});
      }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

std::vector<double> random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = val(rng);
  return v;
}

void BM_spmv(benchmark::State& state) {
  CsrMatrix A = poisson3d(static_cast<int>(state.range(0)));
  std::vector<double> x = random_vec(A.n_cols, 1);
  for (auto _ : state) benchmark::DoNotOptimize(spmv(A, x));
  state.SetItemsProcessed(state.iterations() * A.nnz());
}
BENCHMARK(BM_spmv)->Arg(16)->Arg(32);

void BM_spgemm_rap(benchmark::State& state) {
  CsrMatrix A = poisson3d(static_cast<int>(state.range(0)));
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  const CsrMatrix& P = h.levels.size() > 1 ? h.levels[1].P : A;
  for (auto _ : state) benchmark::DoNotOptimize(spgemm(transpose(P), spgemm(A, P)));
}
BENCHMARK(BM_spgemm_rap)->Arg(16)->Arg(24);

void BM_amg_vcycle(benchmark::State& state) {
  CsrMatrix A = poisson3d(static_cast<int>(state.range(0)));
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  std::vector<double> r = random_vec(A.n_rows, 2);
  for (auto _ : state) benchmark::DoNotOptimize(amg_apply(h, r));
}
BENCHMARK(BM_amg_vcycle)->Arg(16)->Arg(32);

struct MiniSystem {
  Mesh mesh;
  BlockSystem J;
  MiniSystem() {
    ProblemSpec p = make_preset("mini");
    mesh = build_mesh(p.mesh);
    ModelOperators ops = assemble_linear(mesh, p.materials);
    FractureState st = FractureState::all_stick(mesh.n_p());
    J = assemble_jacobian(mesh, p.materials, st, ops, p.dt);
  }
};

void BM_apply_tpu(benchmark::State& state) {
  static MiniSystem sys;
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TpuPreconditioner M = build_tpu(sys.J, cfg, sys.mesh.nodes);
  BlockVector w(sys.J.n_u, sys.J.n_t, sys.J.n_p);
  w.u = random_vec(sys.J.n_u, 3);
  w.t = random_vec(sys.J.n_t, 4);
  w.p = random_vec(sys.J.n_p, 5);
  for (auto _ : state) benchmark::DoNotOptimize(apply_tpu(M, sys.J, w));
}
BENCHMARK(BM_apply_tpu);

void BM_apply_tup(benchmark::State& state) {
  static MiniSystem sys;
  PrecondConfig cfg;
  cfg.inner = PrecondConfig::Inner::direct;
  TupPreconditioner M = build_tup(sys.J, cfg, sys.mesh.nodes);
  BlockVector w(sys.J.n_u, sys.J.n_t, sys.J.n_p);
  w.u = random_vec(sys.J.n_u, 3);
  w.t = random_vec(sys.J.n_t, 4);
  w.p = random_vec(sys.J.n_p, 5);
  for (auto _ : state) benchmark::DoNotOptimize(apply_tup(M, sys.J, w));
}
BENCHMARK(BM_apply_tup);

void BM_gmres_amg_poisson(benchmark::State& state) {
  CsrMatrix A = poisson3d(16);
  AmgHierarchy h = amg_setup(A, {}, AmgConfig{});
  CsrOperator op(A);
  FunctionOperator pre(A.n_rows, [&](std::span<const double> r) { return amg_apply(h, r); });
  std::vector<double> b = random_vec(A.n_rows, 6);
  for (auto _ : state) {
    auto [x, stats] = gmres(op, &pre, b, 1e-8, 200);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_gmres_amg_poisson);

}  // namespace

BENCHMARK_MAIN();
