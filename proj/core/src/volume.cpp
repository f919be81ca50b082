#include "cellseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellseg/error.hpp"

namespace cellseg {

std::string_view to_string(Dtype d) noexcept {
  switch (d) {
    case Dtype::U8: return "u8";
    case Dtype::U16: return "u16";
    case Dtype::F32: return "f32";
  }
  return "?";
}

Dtype parse_dtype(std::string_view s) {
  if (s == "u8") return Dtype::U8;
  if (s == "u16") return Dtype::U16;
  if (s == "f32") return Dtype::F32;
  fail(ErrorCode::UnknownDtype, "unsupported dtype '" + std::string(s) + "'");
}

std::size_t dtype_size(Dtype d) noexcept {
  switch (d) {
    case Dtype::U8: return 1;
    case Dtype::U16: return 2;
    case Dtype::F32: return 4;
  }
  return 0;
}

template <typename T>
Grid<T>::Grid(Dims dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.count()) {
    fail(ErrorCode::DimsMismatch, "grid data length " + std::to_string(data_.size()) +
                                      " does not match dims product " +
                                      std::to_string(dims_.count()));
  }
}

template class Grid<float>;
template class Grid<std::uint32_t>;
template class Grid<std::uint8_t>;

void IntensityVolume::validate() const {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const float v = grid[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      fail(ErrorCode::InvariantViolation,
           "intensity " + std::to_string(v) + " at index " + std::to_string(i) +
               " is outside [0,1]");
    }
  }
}

std::vector<std::uint32_t> LabelVolume::instance_ids() const {
  std::vector<std::uint32_t> ids;
  const std::uint32_t top = max_id();
  if (top == 0) return ids;
  std::vector<bool> seen(static_cast<std::size_t>(top) + 1, false);
  for (const auto v : grid.data()) seen[v] = true;
  for (std::uint32_t id = 1; id <= top; ++id) {
    if (seen[id]) ids.push_back(id);
  }
  return ids;
}

std::uint32_t LabelVolume::max_id() const {
  const auto d = grid.data();
  if (d.empty()) return 0;
  return *std::max_element(d.begin(), d.end());
}

LabelVolume relabel_sequential(const LabelVolume& labels) {
  const auto ids = labels.instance_ids();
  std::vector<std::uint32_t> remap(static_cast<std::size_t>(labels.max_id()) + 1, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) remap[ids[i]] = static_cast<std::uint32_t>(i + 1);
  LabelVolume out(labels.dims(), labels.dtype);
  for (std::size_t i = 0; i < labels.grid.size(); ++i) out.grid[i] = remap[labels.grid[i]];
  return out;
}

}  // namespace cellseg
