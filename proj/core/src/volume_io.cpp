#include "cellseg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <utility>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"

namespace cellseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return v;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::string& out, std::size_t i, T v) {
  v = to_little(v);
  std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
}

template <typename T>
T get(const std::vector<std::byte>& in, std::size_t i) {
  T v;
  std::memcpy(&v, in.data() + i * sizeof(T), sizeof(T));
  return to_little(v);  // byte swap is its own inverse
}

std::vector<std::byte> read_payload(const fs::path& raw, const VolumeHeader& h) {
  auto bytes = read_binary(raw);
  const std::size_t expected = h.dims.count() * dtype_size(h.dtype);
  if (bytes.size() != expected) {
    fail(ErrorCode::PayloadSizeMismatch, raw.string() + " holds " + std::to_string(bytes.size()) +
                                             " bytes, header implies " + std::to_string(expected));
  }
  return bytes;
}

VolumeHeader read_header(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::HeaderMalformed, path.string() + ": " + e.what());
  }
  return header_from_json(j);
}

void write_pair(const fs::path& path, const VolumeHeader& h, const std::string& payload) {
  const auto p = volume_paths(path);
  write_file_atomic(p.payload, payload);
  write_json_atomic(p.header, header_to_json(h));
}

}  // namespace

VolumePaths volume_paths(const fs::path& path) {
  fs::path base = path;
  if (base.extension() == ".json" || base.extension() == ".raw") base.replace_extension();
  fs::path header = base, payload = base;
  header += ".json";
  payload += ".raw";
  return {header, payload};
}

json header_to_json(const VolumeHeader& h) {
  return json{{"dims", {h.dims.nx, h.dims.ny, h.dims.nz}},
              {"dtype", std::string(to_string(h.dtype))},
              {"order", "x-fastest"},
              {"kind", h.kind == VolumeKind::Intensity ? "intensity" : "label"}};
}

VolumeHeader header_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::HeaderMalformed, "header is not a JSON object");
  for (const char* key : {"dims", "dtype", "order", "kind"}) {
    if (!j.contains(key)) fail(ErrorCode::HeaderMalformed, std::string("missing key '") + key + "'");
  }
  const auto& d = j.at("dims");
  if (!d.is_array() || d.size() != 3) fail(ErrorCode::HeaderMalformed, "dims must be [nx,ny,nz]");
  VolumeHeader h;
  int dims[3];
  for (int i = 0; i < 3; ++i) {
    if (!d[i].is_number_integer() || d[i].get<long long>() <= 0 || d[i].get<long long>() > (1 << 20)) {
      fail(ErrorCode::HeaderMalformed, "dims entries must be positive integers");
    }
    dims[i] = d[i].get<int>();
  }
  h.dims = {dims[0], dims[1], dims[2]};
  if (!j.at("dtype").is_string()) fail(ErrorCode::HeaderMalformed, "dtype must be a string");
  h.dtype = parse_dtype(j.at("dtype").get<std::string>());
  if (j.at("order") != "x-fastest") fail(ErrorCode::HeaderMalformed, "order must be \"x-fastest\"");
  const auto& kind = j.at("kind");
  if (kind == "intensity") {
    h.kind = VolumeKind::Intensity;
  } else if (kind == "label") {
    h.kind = VolumeKind::Label;
  } else {
    fail(ErrorCode::HeaderMalformed, "kind must be \"intensity\" or \"label\"");
  }
  return h;
}

AnyVolume read_volume(const fs::path& path) {
  const auto p = volume_paths(path);
  const VolumeHeader h = read_header(p.header);
  const auto bytes = read_payload(p.payload, h);
  const std::size_t n = h.dims.count();

  if (h.kind == VolumeKind::Intensity) {
    Grid<float> g(h.dims, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
      switch (h.dtype) {
        case Dtype::U8: g[i] = static_cast<float>(get<std::uint8_t>(bytes, i)) / 255.0f; break;
        case Dtype::U16: g[i] = static_cast<float>(get<std::uint16_t>(bytes, i)) / 65535.0f; break;
        case Dtype::F32: g[i] = get<float>(bytes, i); break;
      }
    }
    IntensityVolume v(std::move(g), h.dtype);
    v.validate();
    return v;
  }

  Grid<std::uint32_t> g(h.dims, 0u);
  for (std::size_t i = 0; i < n; ++i) {
    switch (h.dtype) {
      case Dtype::U8: g[i] = get<std::uint8_t>(bytes, i); break;
      case Dtype::U16: g[i] = get<std::uint16_t>(bytes, i); break;
      case Dtype::F32: {
        const float f = get<float>(bytes, i);
        if (!(f >= 0.0f && f < 16777216.0f) || std::floor(f) != f) {
          fail(ErrorCode::InvariantViolation, "label payload holds non-integer value at index " + std::to_string(i));
        }
        g[i] = static_cast<std::uint32_t>(f);
        break;
      }
    }
  }
  return LabelVolume(std::move(g), h.dtype);
}

IntensityVolume read_intensity(const fs::path& path) {
  auto v = read_volume(path);
  if (auto* iv = std::get_if<IntensityVolume>(&v)) return std::move(*iv);
  fail(ErrorCode::HeaderMalformed, path.string() + " is a label volume, expected intensity");
}

LabelVolume read_labels(const fs::path& path) {
  auto v = read_volume(path);
  if (auto* lv = std::get_if<LabelVolume>(&v)) return std::move(*lv);
  fail(ErrorCode::HeaderMalformed, path.string() + " is an intensity volume, expected labels");
}

void write_volume(const IntensityVolume& vol, const fs::path& path) {
  const std::size_t n = vol.grid.size();
  std::string payload(n * dtype_size(vol.dtype), '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const float v = std::clamp(vol.grid[i], 0.0f, 1.0f);
    switch (vol.dtype) {
      case Dtype::U8: put(payload, i, static_cast<std::uint8_t>(std::lround(v * 255.0f))); break;
      case Dtype::U16: put(payload, i, static_cast<std::uint16_t>(std::lround(v * 65535.0f))); break;
      case Dtype::F32: put(payload, i, vol.grid[i]); break;
    }
  }
  write_pair(path, {vol.dims(), vol.dtype, VolumeKind::Intensity}, payload);
}

void write_volume(const LabelVolume& vol, const fs::path& path) {
  const std::size_t n = vol.grid.size();
  const std::uint32_t limit = vol.dtype == Dtype::U8 ? 0xFFu : vol.dtype == Dtype::U16 ? 0xFFFFu : (1u << 24);
  std::string payload(n * dtype_size(vol.dtype), '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t id = vol.grid[i];
    if (id > limit) {
      fail(ErrorCode::InvariantViolation, "label id " + std::to_string(id) + " does not fit dtype " +
                                              std::string(to_string(vol.dtype)));
    }
    switch (vol.dtype) {
      case Dtype::U8: put(payload, i, static_cast<std::uint8_t>(id)); break;
      case Dtype::U16: put(payload, i, static_cast<std::uint16_t>(id)); break;
      case Dtype::F32: put(payload, i, static_cast<float>(id)); break;
    }
  }
  write_pair(path, {vol.dims(), vol.dtype, VolumeKind::Label}, payload);
}

std::string encode_f32(const Grid<float>& g) {
  std::string payload(g.size() * 4, '\0');
  for (std::size_t i = 0; i < g.size(); ++i) put(payload, i, g[i]);
  return payload;
}

Grid<float> decode_f32(const fs::path& raw, const Dims& dims) {
  const auto bytes = read_payload(raw, {dims, Dtype::F32, VolumeKind::Intensity});
  Grid<float> g(dims, 0.0f);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = get<float>(bytes, i);
  return g;
}

}  // namespace cellseg
