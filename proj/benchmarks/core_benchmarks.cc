// Copyright 2026 The selfid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "selfid/gp_regression.h"
#include "selfid/mpc_controller.h"
#include "selfid/plant_sim.h"
#include "selfid/self_identification.h"

namespace selfid {
namespace {

void RandomProblem(int n, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  x.resize(n, 2);
  y.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    x.row(i) << u(rng), u(rng);
    y.row(i) << u(rng), u(rng), 0.0;
  }
}

void BM_GpFit(benchmark::State& state) {
  Eigen::MatrixXd x, y;
  RandomProblem(static_cast<int>(state.range(0)), x, y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(GpModel::Fit(x, y, {0.5, 1e-2}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_GpPredict(benchmark::State& state) {
  Eigen::MatrixXd x, y;
  RandomProblem(static_cast<int>(state.range(0)), x, y);
  GpModel gp = GpModel::Fit(x, y, {0.5, 1e-2});
  Eigen::VectorXd q(2);
  q << 0.1, -0.2;
  for (auto _ : state) benchmark::DoNotOptimize(gp.PredictMean(q));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpPredict)->RangeMultiplier(2)->Range(8, 256)->Complexity();

Dataset Identified(int seed) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), seed);
  Dataset d(2);
  std::mt19937_64 rng(seed);
  SelfIdentify(plant, ExplorationConfig{}, d, IdentifyMode::kInitial, rng);
  return d;
}

void BM_SelectPair(benchmark::State& state) {
  Dataset d(2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < state.range(0); ++i) {
    Control c(2);
    c << u(rng), u(rng);
    d.Add(c, Vec3(u(rng), u(rng), 0.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(SelectPair(d));
}
BENCHMARK(BM_SelectPair)->Arg(20)->Arg(50)->Arg(100);

void BM_MpcStep(benchmark::State& state) {
  Dataset d = Identified(3);
  ManipulationModels models = ManipulationModels::Fit(d, ExplorationConfig{});
  MpcConfig config;  // K = 5, Q = 50
  const Vec3 from = Vec3::Zero();
  const Vec3 to(16, 0, 0);
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(MpcStep(models, Vec3(0.3, 0.2, 0), from, to, config, ++seed));
  }
}
BENCHMARK(BM_MpcStep)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace selfid

BENCHMARK_MAIN();
