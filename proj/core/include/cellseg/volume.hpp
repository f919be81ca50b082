#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cellseg {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  int extent(Axis a) const noexcept {
    return a == Axis::X ? nx : (a == Axis::Y ? ny : nz);
  }
  bool positive() const noexcept { return nx > 0 && ny > 0 && nz > 0; }
  bool contains(int x, int y, int z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }

  static Dims cube(int side) { return {side, side, side}; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Stored sample type of a volume payload.
enum class Dtype { U8, U16, F32 };

std::string_view to_string(Dtype d) noexcept;
Dtype parse_dtype(std::string_view s);  // throws UnknownDtype
std::size_t dtype_size(Dtype d) noexcept;

/// Dense x-fastest 3D grid. Linear index = x + nx * (y + ny * z).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Dims dims, T fill = T{}) : dims_(dims), data_(dims.count(), fill) {}
  Grid(Dims dims, std::vector<T> data);  // throws DimsMismatch on size mismatch

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  std::array<int, 3> coords(std::size_t idx) const noexcept {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }

  T& at(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }
  const T& at(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Dims dims_{};
  std::vector<T> data_;
};

extern template class Grid<float>;
extern template class Grid<std::uint32_t>;
extern template class Grid<std::uint8_t>;

/// Microscopy image. Intensities live in [0,1] regardless of the stored dtype.
struct IntensityVolume {
  Grid<float> grid;
  Dtype dtype = Dtype::U8;

  IntensityVolume() = default;
  explicit IntensityVolume(Dims dims, Dtype stored = Dtype::U8)
      : grid(dims, 0.0f), dtype(stored) {}
  IntensityVolume(Grid<float> g, Dtype stored) : grid(std::move(g)), dtype(stored) {}

  const Dims& dims() const noexcept { return grid.dims(); }
  float at(int x, int y, int z) const noexcept { return grid.at(x, y, z); }

  /// Throws InvariantViolation when any value is outside [0,1] or NaN.
  void validate() const;

  friend bool operator==(const IntensityVolume&, const IntensityVolume&) = default;
};

/// Instance labels; 0 is background.
struct LabelVolume {
  Grid<std::uint32_t> grid;
  Dtype dtype = Dtype::U16;

  LabelVolume() = default;
  explicit LabelVolume(Dims dims, Dtype stored = Dtype::U16) : grid(dims, 0u), dtype(stored) {}
  LabelVolume(Grid<std::uint32_t> g, Dtype stored = Dtype::U16)
      : grid(std::move(g)), dtype(stored) {}

  const Dims& dims() const noexcept { return grid.dims(); }
  std::uint32_t at(int x, int y, int z) const noexcept { return grid.at(x, y, z); }

  /// Sorted nonzero ids present in the volume.
  std::vector<std::uint32_t> instance_ids() const;
  std::uint32_t max_id() const;

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;
};

/// Per-voxel foreground probability in [0,1].
using SoftMask = Grid<float>;

/// Rewrites ids to 1..n in ascending order of the original id.
LabelVolume relabel_sequential(const LabelVolume& labels);

}  // namespace cellseg
