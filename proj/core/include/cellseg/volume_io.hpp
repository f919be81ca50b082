#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "cellseg/volume.hpp"

namespace cellseg {

enum class VolumeKind { Intensity, Label };

using AnyVolume = std::variant<IntensityVolume, LabelVolume>;

/// `<base>.json` sidecar plus `<base>.raw` little-endian x-fastest payload.
/// `path` may name either file or the common base.
struct VolumePaths {
  std::filesystem::path header;
  std::filesystem::path payload;
};
VolumePaths volume_paths(const std::filesystem::path& path);

struct VolumeHeader {
  Dims dims;
  Dtype dtype = Dtype::U8;
  VolumeKind kind = VolumeKind::Intensity;
};

nlohmann::json header_to_json(const VolumeHeader& h);
VolumeHeader header_from_json(const nlohmann::json& j);  // throws HeaderMalformed / UnknownDtype

AnyVolume read_volume(const std::filesystem::path& path);
IntensityVolume read_intensity(const std::filesystem::path& path);
LabelVolume read_labels(const std::filesystem::path& path);

/// Deterministic: identical volumes produce identical bytes. Throws IoFailure,
/// or InvariantViolation when a label id does not fit the stored dtype.
void write_volume(const IntensityVolume& vol, const std::filesystem::path& path);
void write_volume(const LabelVolume& vol, const std::filesystem::path& path);

/// Raw f32 payload helpers (used for per-box mask exchange).
std::string encode_f32(const Grid<float>& g);
Grid<float> decode_f32(const std::filesystem::path& raw, const Dims& dims);

}  // namespace cellseg
