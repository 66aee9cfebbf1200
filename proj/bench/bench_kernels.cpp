#include <benchmark/benchmark.h>

#include <random>

#include "pseudoforge/bpm.hpp"
#include "pseudoforge/mask_ops.hpp"
#include "pseudoforge/noiselab.hpp"
#include "pseudoforge/parallel.hpp"
#include "pseudoforge/reference.hpp"

using namespace pseudoforge;

namespace {

RealGrid random_grid(int side, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealGrid g(side, side);
  for (auto& v : g.values()) v = u(eng);
  return g;
}

BitMask blob(int side) {
  return noiselab::rasterize(noiselab::Ellipse{side / 2.0, side / 2.0, side / 3.0, side / 4.0, 0.4}, side, side);
}

// range(0): side, range(1): threads (0 selects the serial reference)
void Args(benchmark::internal::Benchmark* b) {
  for (int side : {128, 512}) {
    for (int threads : {0, 1, 2, 4}) b->Args({side, threads});
  }
}

bool setup(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(1));
  set_num_threads(threads == 0 ? 1 : threads);
  return threads == 0;
}

void BM_Laplacian(benchmark::State& state) {
  const bool ref = setup(state);
  const RealGrid p = random_grid(static_cast<int>(state.range(0)), 0, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ref ? reference::laplacian(p) : laplacian(p));
}

void BM_WeightedBce(benchmark::State& state) {
  const bool ref = setup(state);
  const int side = static_cast<int>(state.range(0));
  const RealGrid z = random_grid(side, -5, 5, 2), w = random_grid(side, 0.05, 3, 3);
  const BitMask y = blob(side);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ref ? reference::weighted_bce(z, y, w) : weighted_bce(z, y, w));
  }
}

void BM_DistanceTransform(benchmark::State& state) {
  const bool ref = setup(state);
  const BitMask m = blob(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ref ? reference::distance_to_boundary(m) : distance_to_boundary(m));
  }
}

void BM_BoxSmooth(benchmark::State& state) {
  const bool ref = setup(state);
  const BitMask m = blob(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ref ? reference::box_smooth(m, 3) : box_smooth(m, 3));
}

void BM_Downsample(benchmark::State& state) {
  const bool ref = setup(state);
  const BitMask m = blob(static_cast<int>(state.range(0)) / 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ref ? reference::downsample_mask(m, 28) : downsample_mask(m, 28));
  }
}

}  // namespace

BENCHMARK(BM_Laplacian)->Apply(Args);
BENCHMARK(BM_WeightedBce)->Apply(Args);
BENCHMARK(BM_DistanceTransform)->Apply(Args);
BENCHMARK(BM_BoxSmooth)->Apply(Args);
BENCHMARK(BM_Downsample)->Apply(Args);

BENCHMARK_MAIN();
