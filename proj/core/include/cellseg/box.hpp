#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "cellseg/volume.hpp"

namespace cellseg {

/// Orthogonal slicing plane. In-plane axes are in ascending axis order:
/// XY -> (x, y), XZ -> (x, z), YZ -> (y, z).
enum class View : int { XY = 0, XZ = 1, YZ = 2 };

inline constexpr std::array<View, 3> kAllViews{View::XY, View::XZ, View::YZ};

std::string_view to_string(View v) noexcept;
View parse_view(std::string_view s);  // accepts "xy"/"xz"/"yz", throws ParseError

Axis normal_axis(View v) noexcept;
Axis first_axis(View v) noexcept;   // the "a" axis
Axis second_axis(View v) noexcept;  // the "b" axis

/// Half-open in-plane rectangle [a_min,a_max) x [b_min,b_max) on one slice.
struct Box2D {
  View view = View::XY;
  int slice = 0;
  int a_min = 0, a_max = 0;
  int b_min = 0, b_max = 0;
  double confidence = 1.0;

  long long area() const noexcept {
    return static_cast<long long>(a_max - a_min) * (b_max - b_min);
  }

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

/// Shape-only checks: a_min < a_max, b_min < b_max, slice >= 0, 0 <= confidence <= 1.
bool is_well_formed(const Box2D& b) noexcept;
/// is_well_formed plus extent checks against the volume.
bool fits_within(const Box2D& b, const Dims& dims) noexcept;

/// Half-open cuboid. `label` optionally tags the instance a box was derived from
/// (0 when unknown).
struct Box3D {
  int x_min = 0, x_max = 0;
  int y_min = 0, y_max = 0;
  int z_min = 0, z_max = 0;
  double score = 1.0;
  std::uint32_t label = 0;

  int lo(Axis a) const noexcept {
    return a == Axis::X ? x_min : (a == Axis::Y ? y_min : z_min);
  }
  int hi(Axis a) const noexcept {
    return a == Axis::X ? x_max : (a == Axis::Y ? y_max : z_max);
  }
  void set(Axis a, int lo_v, int hi_v) noexcept;

  int extent(Axis a) const noexcept { return hi(a) - lo(a); }
  Dims dims() const noexcept { return {x_max - x_min, y_max - y_min, z_max - z_min}; }
  long long volume() const noexcept {
    return static_cast<long long>(x_max - x_min) * (y_max - y_min) * (z_max - z_min);
  }
  /// Coordinates as (x_min, y_min, z_min, x_max, y_max, z_max).
  std::array<int, 6> coords() const noexcept {
    return {x_min, y_min, z_min, x_max, y_max, z_max};
  }
  static Box3D from_coords(const std::array<int, 6>& c, double score = 1.0);

  bool same_geometry(const Box3D& o) const noexcept { return coords() == o.coords(); }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

bool is_well_formed(const Box3D& b) noexcept;

/// Intersection of the box with [0,dims). May be degenerate (non-positive extent).
Box3D clip_to(const Box3D& b, const Dims& dims) noexcept;

}  // namespace cellseg
