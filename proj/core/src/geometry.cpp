#include "cellseg/geometry.hpp"

#include <algorithm>
#include <string>

#include "cellseg/error.hpp"

namespace cellseg {

// ---- box.hpp ---------------------------------------------------------------

std::string_view to_string(View v) noexcept {
  switch (v) {
    case View::XY: return "xy";
    case View::XZ: return "xz";
    case View::YZ: return "yz";
  }
  return "?";
}

View parse_view(std::string_view s) {
  if (s == "xy") return View::XY;
  if (s == "xz") return View::XZ;
  if (s == "yz") return View::YZ;
  fail(ErrorCode::ParseError, "unknown view '" + std::string(s) + "'");
}

Axis normal_axis(View v) noexcept {
  switch (v) {
    case View::XY: return Axis::Z;
    case View::XZ: return Axis::Y;
    case View::YZ: return Axis::X;
  }
  return Axis::Z;
}

Axis first_axis(View v) noexcept { return v == View::YZ ? Axis::Y : Axis::X; }

Axis second_axis(View v) noexcept { return v == View::XY ? Axis::Y : Axis::Z; }

bool is_well_formed(const Box2D& b) noexcept {
  return b.a_min < b.a_max && b.b_min < b.b_max && b.slice >= 0 &&
         b.confidence >= 0.0 && b.confidence <= 1.0;
}

bool fits_within(const Box2D& b, const Dims& dims) noexcept {
  return is_well_formed(b) && b.a_min >= 0 && b.b_min >= 0 &&
         b.slice < dims.extent(normal_axis(b.view)) &&
         b.a_max <= dims.extent(first_axis(b.view)) &&
         b.b_max <= dims.extent(second_axis(b.view));
}

void Box3D::set(Axis a, int lo_v, int hi_v) noexcept {
  switch (a) {
    case Axis::X: x_min = lo_v; x_max = hi_v; break;
    case Axis::Y: y_min = lo_v; y_max = hi_v; break;
    case Axis::Z: z_min = lo_v; z_max = hi_v; break;
  }
}

Box3D Box3D::from_coords(const std::array<int, 6>& c, double score) {
  Box3D b;
  b.x_min = c[0]; b.y_min = c[1]; b.z_min = c[2];
  b.x_max = c[3]; b.y_max = c[4]; b.z_max = c[5];
  b.score = score;
  return b;
}

bool is_well_formed(const Box3D& b) noexcept {
  return b.x_min < b.x_max && b.y_min < b.y_max && b.z_min < b.z_max &&
         b.score >= 0.0 && b.score <= 1.0;
}

Box3D clip_to(const Box3D& b, const Dims& dims) noexcept {
  Box3D c = b;
  c.x_min = std::max(b.x_min, 0); c.x_max = std::min(b.x_max, dims.nx);
  c.y_min = std::max(b.y_min, 0); c.y_max = std::min(b.y_max, dims.ny);
  c.z_min = std::max(b.z_min, 0); c.z_max = std::min(b.z_max, dims.nz);
  return c;
}

// ---- geometry --------------------------------------------------------------

namespace {

long long overlap_1d(int a0, int a1, int b0, int b1) noexcept {
  return std::max(0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

long long intersection_volume(const Box3D& a, const Box3D& b) noexcept {
  return overlap_1d(a.x_min, a.x_max, b.x_min, b.x_max) *
         overlap_1d(a.y_min, a.y_max, b.y_min, b.y_max) *
         overlap_1d(a.z_min, a.z_max, b.z_min, b.z_max);
}

long long intersection_area(const Box2D& a, const Box2D& b) noexcept {
  return overlap_1d(a.a_min, a.a_max, b.a_min, b.a_max) *
         overlap_1d(a.b_min, a.b_max, b.b_min, b.b_max);
}

double box3d_iou(const Box3D& a, const Box3D& b) noexcept {
  const long long inter = intersection_volume(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) /
         static_cast<double>(a.volume() + b.volume() - inter);
}

double box3d_intersection_over_min(const Box3D& a, const Box3D& b) noexcept {
  const long long inter = intersection_volume(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(std::min(a.volume(), b.volume()));
}

namespace {

void require_same_view(const Box2D& a, const Box2D& b) {
  if (a.view != b.view) {
    fail(ErrorCode::ViewMismatch, "cannot compare a " + std::string(to_string(a.view)) +
                                      " box with a " + std::string(to_string(b.view)) +
                                      " box");
  }
}

}  // namespace

double box2d_iou(const Box2D& a, const Box2D& b) {
  require_same_view(a, b);
  const long long inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

double box2d_intersection_over_min(const Box2D& a, const Box2D& b) {
  require_same_view(a, b);
  const long long inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(std::min(a.area(), b.area()));
}

VoxelSet instance_voxels(const LabelVolume& labels, std::uint32_t id) {
  VoxelSet s{labels.dims(), {}};
  const auto d = labels.grid.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == id) s.indices.push_back(i);
  }
  return s;
}

double mask_iou(const VoxelSet& a, const VoxelSet& b) {
  if (a.dims != b.dims) fail(ErrorCode::DimsMismatch, "voxel sets come from volumes of different dims");
  if (a.empty() && b.empty()) fail(ErrorCode::EmptyOperands, "both voxel sets are empty");
  if (a.empty() || b.empty()) return 0.0;
  // Both index lists are sorted; count the common elements with a merge.
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (b.indices[j] < a.indices[i]) {
      ++j;
    } else {
      ++inter; ++i; ++j;
    }
  }
  return static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size() - inter);
}

std::vector<std::optional<Box3D>> tight_boxes(const LabelVolume& labels) {
  std::vector<std::optional<Box3D>> boxes(static_cast<std::size_t>(labels.max_id()) + 1);
  const Dims d = labels.dims();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const auto id = labels.at(x, y, z);
        if (id == 0) continue;
        auto& slot = boxes[id];
        if (!slot) {
          Box3D b;
          b.x_min = x; b.x_max = x + 1;
          b.y_min = y; b.y_max = y + 1;
          b.z_min = z; b.z_max = z + 1;
          b.score = 1.0;
          b.label = id;
          slot = b;
        } else {
          slot->x_min = std::min(slot->x_min, x); slot->x_max = std::max(slot->x_max, x + 1);
          slot->y_min = std::min(slot->y_min, y); slot->y_max = std::max(slot->y_max, y + 1);
          slot->z_min = std::min(slot->z_min, z); slot->z_max = std::max(slot->z_max, z + 1);
        }
      }
    }
  }
  return boxes;
}

std::optional<Box3D> tight_box(const LabelVolume& labels, std::uint32_t id) {
  auto all = tight_boxes(labels);
  if (id == 0 || id >= all.size()) return std::nullopt;
  return all[id];
}

}  // namespace cellseg
