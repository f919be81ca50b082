#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "cellseg/detect.hpp"
#include "cellseg/fusion.hpp"

using namespace cellseg;

namespace {

/// Label volume of `count` balls on a jittered grid inside side^3.
LabelVolume ball_labels(int side, int per_axis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  LabelVolume v(Dims::cube(side));
  const double step = static_cast<double>(side) / per_axis;
  const double r = step * 0.35;
  std::uint32_t id = 0;
  for (int k = 0; k < per_axis; ++k) {
    for (int j = 0; j < per_axis; ++j) {
      for (int i = 0; i < per_axis; ++i) {
        ++id;
        const double cx = (i + 0.5) * step + jitter(rng), cy = (j + 0.5) * step + jitter(rng),
                     cz = (k + 0.5) * step + jitter(rng);
        for (int z = 0; z < side; ++z) {
          for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
              if (std::hypot(x - cx, y - cy, z - cz) <= r) v.grid.at(x, y, z) = id;
            }
          }
        }
      }
    }
  }
  return v;
}

void BM_Nms2D(benchmark::State& state) {
  auto dets = oracle_boxes_2d(ball_labels(64, 4, 1));
  // Duplicate every box with a shifted copy so that suppression has work to do.
  const auto n = dets.boxes.size();
  for (std::size_t i = 0; i < n; ++i) {
    Box2D b = dets.boxes[i];
    b.a_min += 1;
    b.a_max += 1;
    b.confidence = 0.8;
    dets.boxes.push_back(b);
  }
  for (auto _ : state) benchmark::DoNotOptimize(nms_2d(dets, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(dets.size()));
}
BENCHMARK(BM_Nms2D);

void BM_Fuse(benchmark::State& state) {
  const auto dets = oracle_boxes_2d(ball_labels(static_cast<int>(state.range(0)), 4, 2));
  const FusionConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(fuse(dets, config));
  state.SetLabel(std::to_string(dets.size()) + " detections");
}
BENCHMARK(BM_Fuse)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FuseWithoutStacking(benchmark::State& state) {
  const auto dets = oracle_boxes_2d(ball_labels(64, 3, 3));
  FusionConfig config;
  config.stack_slices = false;
  for (auto _ : state) benchmark::DoNotOptimize(fuse(dets, config));
}
BENCHMARK(BM_FuseWithoutStacking)->Unit(benchmark::kMillisecond);

void BM_Nms3D(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> c(0, 100);
  std::vector<Box3D> boxes;
  for (int i = 0; i < state.range(0); ++i) {
    const int x = c(rng), y = c(rng), z = c(rng);
    boxes.push_back(Box3D::from_coords({x, y, z, x + 10, y + 10, z + 10}, c(rng) / 100.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(nms_3d(boxes, 0.5));
}
BENCHMARK(BM_Nms3D)->Arg(256)->Arg(2048);

}  // namespace
