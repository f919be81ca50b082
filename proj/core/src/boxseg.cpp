#include "cellseg/boxseg.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "cellseg/fileutil.hpp"
#include "cellseg/imgproc.hpp"
#include "cellseg/volume_io.hpp"
#include "parallel.hpp"

namespace cellseg {
namespace {

namespace fs = std::filesystem;

/// Source coordinate of output sample `i` for a half-voxel-centered mapping.
double source_coord(int i, int in_extent, int out_extent) noexcept {
  const double scale = static_cast<double>(in_extent) / out_extent;
  return (i + 0.5) * scale - 0.5;
}

int nearest_index(int i, int in_extent, int out_extent) noexcept {
  const double s = (i + 0.5) * static_cast<double>(in_extent) / out_extent;
  return std::clamp(static_cast<int>(std::floor(s)), 0, in_extent - 1);
}

struct LinearTap {
  int lo = 0;
  int hi = 0;
  double w = 0.0;  // weight of `hi`
};

std::vector<LinearTap> linear_taps(int in_extent, int out_extent) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(out_extent));
  for (int i = 0; i < out_extent; ++i) {
    const double s = std::clamp(source_coord(i, in_extent, out_extent), 0.0,
                                static_cast<double>(in_extent - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, in_extent - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, s - lo};
  }
  return taps;
}

template <typename T>
Grid<T> resize_nearest_impl(const Grid<T>& in, const Dims& target) {
  const Dims d = in.dims();
  Grid<T> out(target);
  std::vector<int> xs(static_cast<std::size_t>(target.nx));
  std::vector<int> ys(static_cast<std::size_t>(target.ny));
  std::vector<int> zs(static_cast<std::size_t>(target.nz));
  for (int i = 0; i < target.nx; ++i) xs[static_cast<std::size_t>(i)] = nearest_index(i, d.nx, target.nx);
  for (int i = 0; i < target.ny; ++i) ys[static_cast<std::size_t>(i)] = nearest_index(i, d.ny, target.ny);
  for (int i = 0; i < target.nz; ++i) zs[static_cast<std::size_t>(i)] = nearest_index(i, d.nz, target.nz);
  for (int z = 0; z < target.nz; ++z) {
    for (int y = 0; y < target.ny; ++y) {
      for (int x = 0; x < target.nx; ++x) {
        out.at(x, y, z) = in.at(xs[static_cast<std::size_t>(x)], ys[static_cast<std::size_t>(y)],
                                zs[static_cast<std::size_t>(z)]);
      }
    }
  }
  return out;
}

Grid<float> resize_trilinear(const Grid<float>& in, const Dims& target) {
  const Dims d = in.dims();
  const auto tx = linear_taps(d.nx, target.nx);
  const auto ty = linear_taps(d.ny, target.ny);
  const auto tz = linear_taps(d.nz, target.nz);
  Grid<float> out(target, 0.0f);
  for (int z = 0; z < target.nz; ++z) {
    const auto& cz = tz[static_cast<std::size_t>(z)];
    for (int y = 0; y < target.ny; ++y) {
      const auto& cy = ty[static_cast<std::size_t>(y)];
      for (int x = 0; x < target.nx; ++x) {
        const auto& cx = tx[static_cast<std::size_t>(x)];
        auto lerp_x = [&](int yy, int zz) {
          return (1.0 - cx.w) * in.at(cx.lo, yy, zz) + cx.w * in.at(cx.hi, yy, zz);
        };
        const double c0 = (1.0 - cy.w) * lerp_x(cy.lo, cz.lo) + cy.w * lerp_x(cy.hi, cz.lo);
        const double c1 = (1.0 - cy.w) * lerp_x(cy.lo, cz.hi) + cy.w * lerp_x(cy.hi, cz.hi);
        out.at(x, y, z) = static_cast<float>((1.0 - cz.w) * c0 + cz.w * c1);
      }
    }
  }
  return out;
}

/// Forward chain for any grid: crop by the record's clipped box, pad, resize.
template <typename T>
Grid<T> forward_chain(const Grid<T>& vol, const BoxPipelineRecord& rec) {
  auto padded = pad_to_cube(crop_box(vol, rec.clipped));
  const Dims target = Dims::cube(rec.target_side);
  if constexpr (std::is_same_v<T, float>) {
    return resize(padded.cube, target, ResizeMode::Trilinear);
  } else {
    return resize_nearest_impl(padded.cube, target);
  }
}

SegmentOutcome empty_outcome(int side, ErrorCode code, std::string message) {
  return {SoftMask(Dims::cube(side), 0.0f), code, std::move(message)};
}

SegmentOutcome segment_oracle(const OracleBackend& b, const BoxPipelineRecord& rec) {
  if (!b.truth) fail(ErrorCode::ConfigError, "oracle backend has no ground truth");
  const LabelVolume& gt = *b.truth;
  // Primary instance: the instance the box was generated for when the box is
  // tagged and that instance is inside it; otherwise maximal voxel overlap
  // with the clipped box, ties -> lower id.
  std::vector<long long> counts(static_cast<std::size_t>(gt.max_id()) + 1, 0);
  const Box3D& c = rec.clipped;
  for (int z = c.z_min; z < c.z_max; ++z) {
    for (int y = c.y_min; y < c.y_max; ++y) {
      for (int x = c.x_min; x < c.x_max; ++x) ++counts[gt.at(x, y, z)];
    }
  }
  std::uint32_t primary = 0;
  long long best = 0;
  const std::uint32_t tag = rec.source.label;
  const bool tagged = tag != 0 && tag < counts.size() && counts[tag] > 0;
  if (tagged) primary = tag;
  for (std::size_t id = 1; !tagged && id < counts.size(); ++id) {
    if (counts[id] > best) {
      best = counts[id];
      primary = static_cast<std::uint32_t>(id);
    }
  }
  if (primary == 0) {
    return empty_outcome(rec.target_side, ErrorCode::EmptyForeground,
                         "no ground-truth instance inside the box");
  }
  const auto ids = forward_chain(gt.grid, rec);
  SoftMask mask(ids.dims(), 0.0f);
  for (std::size_t i = 0; i < ids.size(); ++i) mask[i] = ids[i] == primary ? 1.0f : 0.0f;
  return {std::move(mask), std::nullopt, {}};
}

SegmentOutcome segment_classical(const Grid<float>& cube, const ClassicalBackend& b) {
  const Dims d = cube.dims();
  float threshold = 0.0f;
  if (b.threshold) {
    threshold = static_cast<float>(*b.threshold);
  } else {
    const auto t = otsu_threshold(cube.data());
    if (!t) return empty_outcome(d.nx, ErrorCode::EmptyForeground, "constant cube");
    threshold = *t;
  }
  Grid<std::uint8_t> fg(d, 0);
  bool any = false;
  for (std::size_t i = 0; i < cube.size(); ++i) {
    fg[i] = cube[i] >= threshold ? 1 : 0;
    any = any || fg[i] != 0;
  }
  if (!any) return empty_outcome(d.nx, ErrorCode::EmptyForeground, "nothing above threshold");

  const auto comps = label_components_3d(fg);
  std::vector<long long> core_overlap(comps.count + 1, 0);
  std::vector<long long> sizes(comps.count + 1, 0);
  const int core = std::clamp(b.core_side, 1, std::min({d.nx, d.ny, d.nz}));
  const std::array<int, 3> lo{(d.nx - core) / 2, (d.ny - core) / 2, (d.nz - core) / 2};
  for (std::size_t i = 0; i < comps.labels.size(); ++i) {
    const auto l = comps.labels[i];
    if (l == 0) continue;
    ++sizes[l];
    const auto p = cube.coords(i);
    bool inside = true;
    for (int k = 0; k < 3; ++k) inside = inside && p[k] >= lo[k] && p[k] < lo[k] + core;
    if (inside) ++core_overlap[l];
  }
  // Most core overlap wins; without any core overlap fall back to the largest.
  // Ties go to the lower (raster-first) component.
  const auto& key = *std::max_element(core_overlap.begin(), core_overlap.end()) > 0 ? core_overlap : sizes;
  const auto chosen = static_cast<std::uint32_t>(
      std::distance(key.begin(), std::max_element(key.begin() + 1, key.end())));
  SoftMask mask(d, 0.0f);
  for (std::size_t i = 0; i < comps.labels.size(); ++i) {
    mask[i] = comps.labels[i] == chosen ? 1.0f : 0.0f;
  }
  return {std::move(mask), std::nullopt, {}};
}

fs::path external_mask_path(const fs::path& dir, std::size_t index) {
  return dir / ("box_" + std::to_string(index) + ".raw");
}

SegmentOutcome segment_external(const ExternalBackend& b, const BoxPipelineRecord& rec) {
  const auto path = external_mask_path(b.mask_dir, rec.index);
  if (!fs::exists(path)) {
    return empty_outcome(rec.target_side, ErrorCode::MissingMaskFile,
                         "missing mask file " + path.string());
  }
  SoftMask mask = decode_f32(path, Dims::cube(rec.target_side));
  for (float v : mask.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      return empty_outcome(rec.target_side, ErrorCode::InvariantViolation,
                           "mask value outside [0,1] in " + path.string());
    }
  }
  return {std::move(mask), std::nullopt, {}};
}

bool wins(float p, const BoxPipelineRecord& a, float q, const BoxPipelineRecord& b) noexcept {
  if (p != q) return p > q;
  if (a.source.score != b.source.score) return a.source.score > b.source.score;
  if (a.clipped.volume() != b.clipped.volume()) return a.clipped.volume() < b.clipped.volume();
  return a.index < b.index;
}

}  // namespace

Grid<float> resize(const Grid<float>& in, const Dims& target, ResizeMode mode) {
  if (!in.dims().positive() || !target.positive()) {
    fail(ErrorCode::EmptyOperands, "resize needs positive dims");
  }
  if (in.dims() == target) return in;
  return mode == ResizeMode::Trilinear ? resize_trilinear(in, target)
                                       : resize_nearest_impl(in, target);
}

Grid<std::uint32_t> resize_nearest(const Grid<std::uint32_t>& in, const Dims& target) {
  if (!in.dims().positive() || !target.positive()) {
    fail(ErrorCode::EmptyOperands, "resize needs positive dims");
  }
  return resize_nearest_impl(in, target);
}

Grid<float> resize_cube(const Grid<float>& cube, int target_side, ResizeMode mode) {
  return resize(cube, Dims::cube(target_side), mode);
}

std::pair<BoxPipelineRecord, Grid<float>> prepare_box(const Grid<float>& vol, const Box3D& box,
                                                      std::size_t index, int target_side) {
  BoxPipelineRecord rec;
  rec.index = index;
  rec.source = box;
  rec.clipped = clip_to(box, vol.dims());
  rec.target_side = target_side;
  auto padded = pad_to_cube(crop_box(vol, box));
  rec.crop_dims = rec.clipped.dims();
  rec.padded_side = padded.cube.dims().nx;
  rec.pad_offsets = padded.offsets;
  auto cube = resize_cube(padded.cube, target_side, ResizeMode::Trilinear);
  return {std::move(rec), std::move(cube)};
}

std::string backend_name(const SegBackend& backend) {
  struct Visitor {
    std::string operator()(const OracleBackend&) const { return "oracle"; }
    std::string operator()(const ClassicalBackend&) const { return "classical"; }
    std::string operator()(const ExternalBackend&) const { return "external"; }
  };
  return std::visit(Visitor{}, backend);
}

SegmentOutcome segment_primary(const Grid<float>& cube, const SegBackend& backend,
                               const BoxPipelineRecord& record) {
  if (cube.dims() != Dims::cube(record.target_side)) {
    fail(ErrorCode::DimsMismatch, "segmenter input must be a cube of the target side");
  }
  struct Visitor {
    const Grid<float>& cube;
    const BoxPipelineRecord& rec;
    SegmentOutcome operator()(const OracleBackend& b) const { return segment_oracle(b, rec); }
    SegmentOutcome operator()(const ClassicalBackend& b) const { return segment_classical(cube, b); }
    SegmentOutcome operator()(const ExternalBackend& b) const { return segment_external(b, rec); }
  };
  return std::visit(Visitor{cube, record}, backend);
}

SoftMask restore_mask(const SoftMask& mask, const BoxPipelineRecord& record) {
  const auto padded = resize(mask, Dims::cube(record.padded_side), ResizeMode::Trilinear);
  const Dims& d = record.crop_dims;
  const auto& o = record.pad_offsets;
  SoftMask out(d, 0.0f);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) out.at(x, y, z) = padded.at(x + o[0], y + o[1], z + o[2]);
    }
  }
  return out;
}

LabelVolume assemble(std::span<const BoxPipelineRecord> records, const Dims& dims,
                     double threshold) {
  LabelVolume labels(dims);
  std::vector<float> best_p(dims.count(), 0.0f);
  std::vector<const BoxPipelineRecord*> best(dims.count(), nullptr);
  const auto bg = static_cast<float>(threshold);
  for (const auto& rec : records) {
    if (rec.restored.dims() != rec.crop_dims || rec.crop_dims != rec.clipped.dims()) {
      fail(ErrorCode::DimsMismatch, "restored mask does not match its box");
    }
    const Box3D& c = rec.clipped;
    if (c.x_min < 0 || c.y_min < 0 || c.z_min < 0 || c.x_max > dims.nx || c.y_max > dims.ny ||
        c.z_max > dims.nz) {
      fail(ErrorCode::BoxOutsideVolume, "record box exceeds the volume");
    }
    for (int z = c.z_min; z < c.z_max; ++z) {
      for (int y = c.y_min; y < c.y_max; ++y) {
        for (int x = c.x_min; x < c.x_max; ++x) {
          const float p = rec.restored.at(x - c.x_min, y - c.y_min, z - c.z_min);
          if (!(p > bg)) continue;
          const auto i = labels.grid.index(x, y, z);
          if (best[i] == nullptr || wins(p, rec, best_p[i], *best[i])) {
            best[i] = &rec;
            best_p[i] = p;
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (best[i] != nullptr) labels.grid[i] = static_cast<std::uint32_t>(best[i]->index + 1);
  }
  return labels;
}

SegmentResult segment_volume(const IntensityVolume& vol, std::span<const Box3D> boxes,
                             const SegBackend& backend, const SegmentOptions& options) {
  SegmentResult result;
  result.records.resize(boxes.size());
  const auto name = backend_name(backend);
  detail::parallel_for(boxes.size(), options.workers, [&](std::size_t i) {
    BoxPipelineRecord& rec = result.records[i];
    try {
      auto [prepared, cube] = prepare_box(vol.grid, boxes[i], i, options.target_side);
      rec = std::move(prepared);
      rec.backend = name;
      auto outcome = segment_primary(cube, backend, rec);
      rec.failure = outcome.failure;
      rec.failure_message = std::move(outcome.message);
      rec.mask = std::move(outcome.mask);
      rec.restored = restore_mask(rec.mask, rec);
    } catch (const Error& e) {
      // Per-box failures never abort the volume: the box contributes nothing.
      rec.index = i;
      rec.source = boxes[i];
      rec.clipped = Box3D{};
      rec.crop_dims = Dims{};
      rec.restored = SoftMask{};
      rec.backend = name;
      rec.failure = e.code();
      rec.failure_message = e.what();
    }
  });
  result.labels = assemble(result.records, vol.dims(), options.threshold);
  return result;
}

void export_cubes(const IntensityVolume& vol, std::span<const Box3D> boxes, const fs::path& dir,
                  int target_side) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    auto [rec, cube] = prepare_box(vol.grid, boxes[i], i, target_side);
    const auto file = external_mask_path(dir, i);
    write_file_atomic(file, encode_f32(cube));
    entries.push_back({{"index", i},
                       {"file", file.filename().string()},
                       {"min", {rec.clipped.x_min, rec.clipped.y_min, rec.clipped.z_min}},
                       {"max", {rec.clipped.x_max, rec.clipped.y_max, rec.clipped.z_max}},
                       {"padded_side", rec.padded_side},
                       {"pad_offsets", rec.pad_offsets}});
  }
  write_json_atomic(dir / "index.json", {{"dims", {target_side, target_side, target_side}},
                                         {"dtype", "f32"},
                                         {"order", "x-fastest"},
                                         {"boxes", std::move(entries)}});
}

}  // namespace cellseg
