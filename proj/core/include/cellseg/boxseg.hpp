#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cellseg/box.hpp"
#include "cellseg/error.hpp"
#include "cellseg/volume.hpp"

namespace cellseg {

inline constexpr int kSegmenterSide = 48;

/// Copies the part of `vol` covered by `box` after clipping it to the volume.
/// Throws BoxOutsideVolume when nothing remains.
template <typename T>
Grid<T> crop_box(const Grid<T>& vol, const Box3D& box) {
  const Box3D c = clip_to(box, vol.dims());
  if (c.x_min >= c.x_max || c.y_min >= c.y_max || c.z_min >= c.z_max) {
    fail(ErrorCode::BoxOutsideVolume, "box does not intersect the volume");
  }
  Grid<T> out(c.dims());
  for (int z = c.z_min; z < c.z_max; ++z) {
    for (int y = c.y_min; y < c.y_max; ++y) {
      for (int x = c.x_min; x < c.x_max; ++x) {
        out.at(x - c.x_min, y - c.y_min, z - c.z_min) = vol.at(x, y, z);
      }
    }
  }
  return out;
}

template <typename T>
struct PaddedCube {
  Grid<T> cube;
  std::array<int, 3> offsets{};  // low-side padding per axis
};

/// Zero-pads to a cube of side max(dims); content centered, an odd surplus
/// voxel goes to the high side.
template <typename T>
PaddedCube<T> pad_to_cube(const Grid<T>& sub) {
  const Dims d = sub.dims();
  const int side = std::max({d.nx, d.ny, d.nz});
  PaddedCube<T> out{Grid<T>(Dims::cube(side), T{}),
                    {(side - d.nx) / 2, (side - d.ny) / 2, (side - d.nz) / 2}};
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        out.cube.at(x + out.offsets[0], y + out.offsets[1], z + out.offsets[2]) = sub.at(x, y, z);
      }
    }
  }
  return out;
}

enum class ResizeMode { Trilinear, Nearest };

/// Resamples to `target` dims using half-voxel-centered sample positions with
/// clamp-to-edge.
Grid<float> resize(const Grid<float>& in, const Dims& target, ResizeMode mode);
Grid<std::uint32_t> resize_nearest(const Grid<std::uint32_t>& in, const Dims& target);
Grid<float> resize_cube(const Grid<float>& cube, int target_side = kSegmenterSide,
                        ResizeMode mode = ResizeMode::Trilinear);

/// Everything needed to map a segmenter cube back into the volume.
struct BoxPipelineRecord {
  std::size_t index = 0;
  Box3D source;                   // box as given
  Box3D clipped;                  // box clipped to the volume
  Dims crop_dims{};
  int padded_side = 0;
  std::array<int, 3> pad_offsets{};
  int target_side = kSegmenterSide;
  std::string backend;
  SoftMask mask;                  // segmenter output at target_side^3
  SoftMask restored;              // mask at crop_dims
  std::optional<ErrorCode> failure;
  std::string failure_message;
};

/// Crop, pad and resize one box. Returns the record and the segmenter input cube.
std::pair<BoxPipelineRecord, Grid<float>> prepare_box(const Grid<float>& vol, const Box3D& box,
                                                      std::size_t index,
                                                      int target_side = kSegmenterSide);

struct OracleBackend {
  std::shared_ptr<const LabelVolume> truth;
};

struct ClassicalBackend {
  std::optional<double> threshold;  // nullopt selects Otsu on the cube
  int core_side = 16;
};

/// Directory of `box_<index>.raw` f32 masks at target_side^3 plus `index.json`.
struct ExternalBackend {
  std::filesystem::path mask_dir;
};

using SegBackend = std::variant<OracleBackend, ClassicalBackend, ExternalBackend>;

std::string backend_name(const SegBackend& backend);

struct SegmentOutcome {
  SoftMask mask;
  std::optional<ErrorCode> failure;
  std::string message;
};

/// Foreground probability of the box's primary cell at the cube resolution.
/// Failures (EmptyForeground, MissingMaskFile, ...) yield an all-zero mask
/// and a failure code instead of throwing.
SegmentOutcome segment_primary(const Grid<float>& cube, const SegBackend& backend,
                               const BoxPipelineRecord& record);

/// Inverse resize (trilinear) to the padded cube, then crop by the pad offsets.
SoftMask restore_mask(const SoftMask& mask, const BoxPipelineRecord& record);

/// Per-voxel argmax over a background channel fixed at `threshold` and one
/// channel per box (restored probability inside its clipped box, 0 outside).
/// A box wins a voxel only with probability strictly above the background;
/// among boxes, equal probabilities go to the higher box score, then the
/// smaller clipped volume, then the lower index.
/// Output ids are record index + 1.
LabelVolume assemble(std::span<const BoxPipelineRecord> records, const Dims& dims,
                     double threshold = 0.5);

struct SegmentOptions {
  int target_side = kSegmenterSide;
  double threshold = 0.5;
  int workers = 1;
};

struct SegmentResult {
  LabelVolume labels;
  std::vector<BoxPipelineRecord> records;
};

/// crop -> pad -> resize -> segment -> restore for every box, then assemble.
/// Per-box failures leave that box's mask empty.
SegmentResult segment_volume(const IntensityVolume& vol, std::span<const Box3D> boxes,
                             const SegBackend& backend, const SegmentOptions& options = {});

/// Writes each box's segmenter input cube as `box_<index>.raw` (f32) plus an
/// `index.json`, the inputs an external segmenter consumes.
void export_cubes(const IntensityVolume& vol, std::span<const Box3D> boxes,
                  const std::filesystem::path& dir, int target_side = kSegmenterSide);

}  // namespace cellseg
