#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "cube_transport/concentration.hpp"
#include "cube_transport/density.hpp"
#include "cube_transport/functionals.hpp"
#include "cube_transport/knothe.hpp"
#include "cube_transport/sampler.hpp"
#include "cube_transport/transport1d.hpp"

using namespace cube_transport;

namespace {

GridDensity gaussian(int n, int m) {
  const auto un = static_cast<std::size_t>(n);
  RestrictedGaussian spec;
  spec.center.assign(un, 0.4);
  spec.inverse_covariance.assign(un, std::vector<double>(un, 0.0));
  for (std::size_t a = 0; a < un; ++a) spec.inverse_covariance[a][a] = 2.0;
  return build_density(spec, Grid::unit_cube(n, m));
}

GridDensity tilt(int n, int m) {
  return build_density(ExponentialTilt{std::vector<double>(static_cast<std::size_t>(n), 1.5)}, Grid::unit_cube(n, m));
}

void BM_MonotoneMap(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto f = gaussian(1, m);
  const auto g = tilt(1, m);
  for (auto _ : state) benchmark::DoNotOptimize(monotone_map(f, g));
  state.SetComplexityN(m);
}
BENCHMARK(BM_MonotoneMap)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_KnotheMap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto f = gaussian(n, m);
  const auto g = tilt(n, m);
  for (auto _ : state) benchmark::DoNotOptimize(knothe_map(f, g));
}
BENCHMARK(BM_KnotheMap)->Args({2, 64})->Args({2, 256})->Args({3, 32})->Unit(benchmark::kMillisecond);

void BM_TireBracket(benchmark::State& state) {
  const auto f = gaussian(2, 128);
  const auto g = tilt(2, 128);
  const auto map = knothe_map(f, g);
  for (auto _ : state) benchmark::DoNotOptimize(tire_bracket(f, g, map));
}
BENCHMARK(BM_TireBracket)->Unit(benchmark::kMillisecond);

void BM_SampleGrid(benchmark::State& state) {
  const auto d = gaussian(4, 32);
  const GridSampler sampler(d);
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(count, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleGrid)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_HalfspaceProfile(benchmark::State& state) {
  const auto batch = sample_grid(gaussian(4, 32), 200000, 3);
  const std::vector<double> u(4, 0.5);
  std::vector<double> ts;
  for (int k = 1; k <= 20; ++k) ts.push_back(0.05 * k);
  for (auto _ : state) benchmark::DoNotOptimize(halfspace_profile(batch, u, ts, 3.0));
}
BENCHMARK(BM_HalfspaceProfile)->Unit(benchmark::kMillisecond);

void BM_ExactW2(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const auto f = gaussian(2, m);
  const auto g = tilt(2, m);
  for (auto _ : state) benchmark::DoNotOptimize(exact_w2_small(f, g, k));
}
BENCHMARK(BM_ExactW2)->Args({6, 1})->Args({8, 1})->Args({8, 2})->Unit(benchmark::kMillisecond);

void BM_DiscreteKnotheCost(benchmark::State& state) {
  const auto f = gaussian(2, 8);
  const auto g = tilt(2, 8);
  for (auto _ : state) benchmark::DoNotOptimize(discrete_knothe_cost(f, g, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_DiscreteKnotheCost)->Arg(2)->Arg(8);

void BM_CounterexampleScaling(benchmark::State& state) {
  const std::vector<int> ns{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(counterexample_scaling(ns, 20000, 5));
}
BENCHMARK(BM_CounterexampleScaling)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
