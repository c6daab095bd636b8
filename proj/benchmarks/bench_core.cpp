#include <benchmark/benchmark.h>

#include "dictsel/datagen.hpp"
#include "dictsel/library.hpp"
#include "dictsel/regressors.hpp"
#include "dictsel/rng.hpp"
#include "dictsel/scoring.hpp"
#include "dictsel/weakform.hpp"

using namespace dictsel;

namespace {

EvaluatedLibrary random_library(int rows, int cols, std::uint64_t seed) {
  GaussianRng rng(seed);
  EvaluatedLibrary lib;
  lib.matrix.resize(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) lib.matrix(i, j) = rng.gaussian();
    lib.labels.push_back("c" + std::to_string(j));
  }
  return lib;
}

Vector random_target(int rows, std::uint64_t seed) {
  GaussianRng rng(seed);
  Vector y(rows);
  for (int i = 0; i < rows; ++i) y[i] = rng.gaussian();
  return y;
}

}  // namespace

static void BM_ScoreSubset(benchmark::State& state) {
  const EvaluatedLibrary lib = random_library(64, 32, 1);
  const Vector y = random_target(64, 2);
  const std::vector<int> removed{1, 5, 9, 17, 23};
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_subset(removed, lib, y).value);
  }
}
BENCHMARK(BM_ScoreSubset);

static void BM_Gbsr32(benchmark::State& state) {
  const EvaluatedLibrary lib = random_library(64, 32, 3);
  const std::vector<Vector> targets{random_target(64, 4), random_target(64, 5),
                                    random_target(64, 6)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gbsr(lib, targets).levels.size());
  }
}
BENCHMARK(BM_Gbsr32)->Unit(benchmark::kMillisecond);

static void BM_ExhaustiveKept3(benchmark::State& state) {
  const EvaluatedLibrary lib = random_library(128, 32, 7);
  const Vector y = random_target(128, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(best_removed_of_size(lib, {y}, 29).removed.size());
  }
}
BENCHMARK(BM_ExhaustiveKept3)->Unit(benchmark::kMillisecond);

static void BM_WeakAssembly(benchmark::State& state) {
  const TrajectoryDataset data =
      integrate_rk4(LorenzSystem{}, (Vector(3) << -8, 8, 27).finished(), 0.0, 10.0, 0.01);
  const EvaluatedLibrary lib = evaluate(build_lorenz_paper_library(), data);
  const TestFunctionBank bank = build_test_bank(data.times, 64, 7, 7, 2.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(weak_transform_ode(lib, data, bank).rows());
  }
}
BENCHMARK(BM_WeakAssembly)->Unit(benchmark::kMillisecond);

static void BM_Stls(benchmark::State& state) {
  const EvaluatedLibrary lib = random_library(1000, 20, 11);
  const Vector y = lib.matrix.col(0) - 2.0 * lib.matrix.col(7) + random_target(1000, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stls(lib, y, 0.5).model.coordinates.size());
  }
}
BENCHMARK(BM_Stls)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
