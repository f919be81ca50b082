#include <benchmark/benchmark.h>

#include "cellseg/imgproc.hpp"
#include "cellseg/synth.hpp"

using namespace cellseg;

namespace {

GenConfig lattice_config(int side, int cells) {
  GenConfig c;
  c.lattice_dims = Dims::cube(side);
  c.crop_dims = Dims::cube(side);
  c.cell_count = cells;
  c.mc_sweeps = 1;
  return c;
}

/// One Monte Carlo sweep (one proposal per lattice site) on a seeded lattice.
void BM_CpmSweep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GenConfig config = lattice_config(side, side * side * side / 4000);
  Rng rng(1);
  CpmLattice lattice = seed_cells(config, rng);
  for (auto _ : state) {
    lattice = cpm_relax(std::move(lattice), config, rng);
    benchmark::DoNotOptimize(lattice.owner.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(lattice.owner.size()));
}
BENCHMARK(BM_CpmSweep)->Arg(48)->Arg(84)->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Grid<float> g(Dims::cube(side), 0.0f);
  for (std::size_t i = 0; i < g.size(); i += 7) g[i] = 1.0f;
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(g, 1.0, 1.0, 2.5));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(g.size()));
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
  GenConfig config = lattice_config(40, 16);
  config.crop_dims = Dims::cube(32);
  Rng rng(2);
  const auto lattice = crop_lattice(seed_cells(config, rng), config.crop_dims);
  for (auto _ : state) benchmark::DoNotOptimize(render_for_config(lattice, config));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

}  // namespace
