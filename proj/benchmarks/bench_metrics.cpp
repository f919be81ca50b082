#include <benchmark/benchmark.h>

#include <random>

#include "cellseg/metrics.hpp"

using namespace cellseg;

namespace {

/// Cubic cells of side `cell` tiling side^3; `shift` offsets the tiling.
LabelVolume tiled(int side, int cell, int shift) {
  LabelVolume v(Dims::cube(side));
  const int per = side / cell + 1;
  for (int z = 0; z < side; ++z) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const int i = (x + shift) / cell, j = (y + shift) / cell, k = (z + shift) / cell;
        v.grid.at(x, y, z) = static_cast<std::uint32_t>(1 + i + per * (j + per * k));
      }
    }
  }
  return v;
}

void BM_MatchInstances(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto gt = tiled(side, 12, 0);
  const auto pred = tiled(side, 12, 2);
  for (auto _ : state) benchmark::DoNotOptimize(match_instances(pred, gt));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(gt.grid.size()));
}
BENCHMARK(BM_MatchInstances)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Curves(benchmark::State& state) {
  const auto m = match_instances(tiled(64, 8, 1), tiled(64, 8, 0));
  const std::vector<MatchResult> all(16, m);
  const auto grid = default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(curves(all, grid));
}
BENCHMARK(BM_Curves);

}  // namespace
