// Copyright 2026 The sgdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "sgdlab/dln.h"
#include "sgdlab/linalg.h"
#include "sgdlab/lsq.h"
#include "sgdlab/mirror.h"
#include "sgdlab/problems.h"
#include "sgdlab/rng.h"

namespace sgdlab {
namespace {

Dataset SparseInstance(int n, int d) {
  RngStream rng = RngStream::For(3, 0, StreamRole::kData);
  return GenSparseRegression(n, d, 5, rng);
}

void BM_RngNormal(benchmark::State& state) {
  RngStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.Normal());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RngNormal);

void BM_SolveLyapunov(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream rng(2, 0);
  Mat g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.Normal();
  }
  const Mat b = g * g.transpose() + d * Mat::Identity(d, d);
  const Mat c = 0.5 * (g + g.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(SolveLyapunov(b, c));
}
BENCHMARK(BM_SolveLyapunov)->Arg(5)->Arg(20)->Arg(100);

void BM_MinNormSolve(benchmark::State& state) {
  const Dataset ds = SparseInstance(40, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(MinNormSolve(ds.x, ds.y));
}
BENCHMARK(BM_MinNormSolve)->Arg(100)->Arg(400);

void BM_LsqNoisySgdStep(benchmark::State& state) {
  const Dataset ds = SparseInstance(40, 100);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kNoisySGD;
  cfg.gamma = 1e-3;
  cfg.sigma = 0.5;
  cfg.batch = static_cast<int>(state.range(0));
  RngStream rng(4, 0);
  LsqState s{Vec::Zero(ds.d())};
  for (auto _ : state) {
    s = LsqDiscreteStep(s, ds, cfg, rng);
    benchmark::DoNotOptimize(s.theta.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LsqNoisySgdStep)->Arg(1)->Arg(8)->Arg(40);

void BM_DlnDiscreteStep(benchmark::State& state) {
  const Dataset ds = SparseInstance(40, 100);
  const DlnContext ctx(ds);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind(state.range(0));
  cfg.gamma = 0.5 * DefaultStepSize(ds);
  const auto sched = NoiseSchedule::LossScaled(0.5);
  DlnStreams streams = DlnStreams::For(5, 0);
  DlnState s = DlnState::Init(Vec::Constant(ds.d(), 0.1));
  for (auto _ : state) {
    DlnDiscreteStep(s, ctx, cfg, sched, streams);
    benchmark::DoNotOptimize(s.w_plus.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DlnDiscreteStep)
    ->Arg(static_cast<int>(OptimizerKind::kGD))
    ->Arg(static_cast<int>(OptimizerKind::kSGD))
    ->Arg(static_cast<int>(OptimizerKind::kNoisySGD));

void BM_DlnSde(benchmark::State& state) {
  const Dataset ds = SparseInstance(40, 100);
  const DlnContext ctx(ds);
  const double gamma = DefaultStepSize(ds);
  DlnSdeOptions opt;
  opt.run.max_steps = 1000;
  opt.run.stop_when_converged = false;
  opt.scheme = SdeScheme(state.range(0));
  const Vec alpha = Vec::Constant(ds.d(), 0.1);
  const auto sched = NoiseSchedule::LossScaled(0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SimulateDlnSde(ctx, alpha, sched, gamma, gamma, 6, 0, opt));
  }
  state.SetItemsProcessed(state.iterations() * opt.run.max_steps);
}
BENCHMARK(BM_DlnSde)
    ->Arg(static_cast<int>(SdeScheme::kLogEuler))
    ->Arg(static_cast<int>(SdeScheme::kEulerMaruyama))
    ->Unit(benchmark::kMillisecond);

void BM_SolveTilted(benchmark::State& state) {
  const Dataset ds = SparseInstance(40, 100);
  const Vec alpha = Vec::Constant(ds.d(), 0.1);
  const Vec tilt = Vec::Zero(ds.d());
  for (auto _ : state) benchmark::DoNotOptimize(SolveTilted(ds, alpha, tilt));
}
BENCHMARK(BM_SolveTilted)->Unit(benchmark::kMillisecond);

void BM_CoupledOver(benchmark::State& state) {
  RngStream rng = RngStream::For(3, 0, StreamRole::kData);
  const Dataset ds = GenSparseRegression(10, 20, 5, rng);
  const double gamma = 1.0 / ds.xbar.squaredNorm();
  CoupledOptions opt;
  opt.steps = 2000;
  opt.n_traj = static_cast<int>(state.range(0));
  opt.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SimulateCoupledOver(ds, gamma, 0.5, 1, opt));
  }
}
BENCHMARK(BM_CoupledOver)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sgdlab

BENCHMARK_MAIN();
