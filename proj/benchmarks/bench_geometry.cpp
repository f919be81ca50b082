#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cellseg/geometry.hpp"

using namespace cellseg;

namespace {

std::vector<Box3D> random_boxes(std::size_t n, int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, side - 1);
  std::vector<Box3D> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<int, 6> v{};
    for (int k = 0; k < 3; ++k) {
      int lo = c(rng), hi = c(rng);
      if (lo > hi) std::swap(lo, hi);
      v[static_cast<std::size_t>(k)] = lo;
      v[static_cast<std::size_t>(k + 3)] = hi + 1;
    }
    out.push_back(Box3D::from_coords(v));
  }
  return out;
}

void BM_Box3DIoU(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 64, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(box3d_iou(boxes[i % 1024], boxes[(i + 7) % 1024]));
    ++i;
  }
}
BENCHMARK(BM_Box3DIoU);

void BM_MaskIoU(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  LabelVolume a(Dims::cube(side)), b(Dims::cube(side));
  for (int z = 0; z < side; ++z) {
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        if (x < 2 * side / 3) a.grid.at(x, y, z) = 1;
        if (x >= side / 3) b.grid.at(x, y, z) = 1;
      }
    }
  }
  const auto va = instance_voxels(a, 1), vb = instance_voxels(b, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mask_iou(va, vb));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(va.size() + vb.size()));
}
BENCHMARK(BM_MaskIoU)->Arg(32)->Arg(64);

void BM_TightBoxes(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  LabelVolume v(Dims::cube(side));
  for (std::size_t i = 0; i < v.grid.size(); ++i) v.grid[i] = static_cast<std::uint32_t>(i % 97);
  for (auto _ : state) benchmark::DoNotOptimize(tight_boxes(v));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(v.grid.size()));
}
BENCHMARK(BM_TightBoxes)->Arg(64)->Arg(128);

}  // namespace
