#include "cellseg/detect.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "cellseg/geometry.hpp"

namespace cellseg {

using nlohmann::json;

bool canonical_less(const Box2D& l, const Box2D& r) noexcept {
  return std::make_tuple(static_cast<int>(l.view), l.slice, l.a_min, l.b_min, l.a_max, l.b_max,
                         -l.confidence) <
         std::make_tuple(static_cast<int>(r.view), r.slice, r.a_min, r.b_min, r.a_max, r.b_max,
                         -r.confidence);
}

void DetectionSet::sort() { std::stable_sort(boxes.begin(), boxes.end(), canonical_less); }

Image2D slice_view(const Grid<float>& vol, View view, int slice) {
  const Dims d = vol.dims();
  const int depth = d.extent(normal_axis(view));
  if (slice < 0 || slice >= depth) {
    fail(ErrorCode::SliceOutOfRange, "slice " + std::to_string(slice) + " outside [0," +
                                         std::to_string(depth) + ") for view " +
                                         std::string(to_string(view)));
  }
  Image2D img;
  img.width = d.extent(first_axis(view));
  img.height = d.extent(second_axis(view));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int b = 0; b < img.height; ++b) {
    for (int a = 0; a < img.width; ++a) {
      float v = 0.0f;
      switch (view) {
        case View::XY: v = vol.at(a, b, slice); break;
        case View::XZ: v = vol.at(a, slice, b); break;
        case View::YZ: v = vol.at(slice, a, b); break;
      }
      img.at(a, b) = v;
    }
  }
  return img;
}

std::vector<Box2D> detect_blobs(const Image2D& image, View view, int slice,
                                const BlobParams& params) {
  std::vector<Box2D> out;
  if (image.pixels.empty()) return out;
  float threshold = 0.0f;
  if (params.threshold) {
    threshold = static_cast<float>(*params.threshold);
  } else {
    const auto t = otsu_threshold(image.pixels);
    if (!t) return out;
    threshold = *t;
  }

  std::vector<std::uint8_t> mask(image.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = image.pixels[i] >= threshold ? 1 : 0;
  const auto comps = label_components_2d(mask, image.width, image.height);
  if (comps.count == 0) return out;

  struct Acc {
    int a_min, a_max, b_min, b_max;
    long long n = 0;
    double sum = 0.0;
  };
  std::vector<Acc> acc(comps.count + 1, Acc{image.width, -1, image.height, -1});
  for (int b = 0; b < image.height; ++b) {
    for (int a = 0; a < image.width; ++a) {
      const std::size_t i = static_cast<std::size_t>(a) + static_cast<std::size_t>(image.width) * b;
      const auto id = comps.labels[i];
      if (id == 0) continue;
      auto& c = acc[id];
      c.a_min = std::min(c.a_min, a); c.a_max = std::max(c.a_max, a + 1);
      c.b_min = std::min(c.b_min, b); c.b_max = std::max(c.b_max, b + 1);
      c.n += 1;
      c.sum += image.pixels[i];
    }
  }
  for (std::uint32_t id = 1; id <= comps.count; ++id) {
    const auto& c = acc[id];
    if (c.n < params.min_area) continue;
    Box2D box;
    box.view = view;
    box.slice = slice;
    box.a_min = c.a_min; box.a_max = c.a_max;
    box.b_min = c.b_min; box.b_max = c.b_max;
    box.confidence = std::clamp(c.sum / static_cast<double>(c.n), 0.0, 1.0);
    out.push_back(box);
  }
  return out;
}

DetectionSet detect_volume_blobs(const IntensityVolume& vol, const BlobParams& params) {
  DetectionSet set;
  set.dims = vol.dims();
  set.backend = "blob";
  set.provenance["threshold"] = params.threshold ? std::to_string(*params.threshold) : "otsu";
  set.provenance["min_area"] = std::to_string(params.min_area);
  for (const View v : kAllViews) {
    const int depth = vol.dims().extent(normal_axis(v));
    for (int s = 0; s < depth; ++s) {
      auto boxes = detect_blobs(slice_view(vol.grid, v, s), v, s, params);
      set.boxes.insert(set.boxes.end(), boxes.begin(), boxes.end());
    }
  }
  set.sort();
  return set;
}

DetectionSet oracle_boxes_2d(const LabelVolume& gt) {
  DetectionSet set;
  set.dims = gt.dims();
  set.backend = "oracle2d";
  const Dims d = gt.dims();
  const std::size_t ids = static_cast<std::size_t>(gt.max_id()) + 1;
  if (ids == 1) return set;

  struct Rect {
    int a_min = 1 << 30, a_max = -1, b_min = 1 << 30, b_max = -1;
    void add(int a, int b) {
      a_min = std::min(a_min, a); a_max = std::max(a_max, a + 1);
      b_min = std::min(b_min, b); b_max = std::max(b_max, b + 1);
    }
  };
  // rects[view][slice * ids + id]
  std::array<std::vector<Rect>, 3> rects;
  for (const View v : kAllViews) {
    rects[static_cast<int>(v)].resize(static_cast<std::size_t>(d.extent(normal_axis(v))) * ids);
  }
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t id = gt.at(x, y, z);
        if (id == 0) continue;
        rects[0][static_cast<std::size_t>(z) * ids + id].add(x, y);
        rects[1][static_cast<std::size_t>(y) * ids + id].add(x, z);
        rects[2][static_cast<std::size_t>(x) * ids + id].add(y, z);
      }
    }
  }
  for (const View v : kAllViews) {
    const auto& r = rects[static_cast<int>(v)];
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (r[k].a_max < 0) continue;
      Box2D b;
      b.view = v;
      b.slice = static_cast<int>(k / ids);
      b.a_min = r[k].a_min; b.a_max = r[k].a_max;
      b.b_min = r[k].b_min; b.b_max = r[k].b_max;
      b.confidence = 1.0;
      set.boxes.push_back(b);
    }
  }
  set.sort();
  return set;
}

std::vector<Box3D> oracle_boxes_3d(const LabelVolume& gt) {
  std::vector<Box3D> out;
  for (const auto& b : tight_boxes(gt)) {
    if (b) out.push_back(*b);
  }
  return out;
}

std::string detections_to_jsonl(const DetectionSet& set) {
  std::string out;
  for (const auto& b : set.boxes) {
    json j;
    j["view"] = std::string(to_string(b.view));
    j["slice"] = b.slice;
    j["min"] = {b.a_min, b.b_min};
    j["max"] = {b.a_max, b.b_max};
    j["confidence"] = b.confidence;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void line_error(ErrorCode code, int line, const std::string& what) {
  fail(code, "line " + std::to_string(line) + ": " + what);
}

int int_field(const json& arr, std::size_t i, int line) {
  if (!arr[i].is_number_integer()) line_error(ErrorCode::ParseError, line, "coordinates must be integers");
  return arr[i].get<int>();
}

}  // namespace

DetectionSet detections_from_jsonl(const std::string& text, std::optional<Dims> dims) {
  DetectionSet set;
  if (dims) set.dims = *dims;
  set.backend = "file";
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(ErrorCode::ParseError, lineno, e.what());
    }
    if (!j.is_object()) line_error(ErrorCode::ParseError, lineno, "expected a JSON object");
    for (const char* key : {"view", "slice", "min", "max", "confidence"}) {
      if (!j.contains(key)) line_error(ErrorCode::ParseError, lineno, std::string("missing key '") + key + "'");
    }
    Box2D b;
    if (!j["view"].is_string()) line_error(ErrorCode::ParseError, lineno, "view must be a string");
    try {
      b.view = parse_view(j["view"].get<std::string>());
    } catch (const Error& e) {
      line_error(ErrorCode::ParseError, lineno, e.what());
    }
    if (!j["slice"].is_number_integer()) line_error(ErrorCode::ParseError, lineno, "slice must be an integer");
    b.slice = j["slice"].get<int>();
    const auto& mn = j["min"];
    const auto& mx = j["max"];
    if (!mn.is_array() || mn.size() != 2 || !mx.is_array() || mx.size() != 2) {
      line_error(ErrorCode::ParseError, lineno, "min/max must be [a,b]");
    }
    b.a_min = int_field(mn, 0, lineno); b.b_min = int_field(mn, 1, lineno);
    b.a_max = int_field(mx, 0, lineno); b.b_max = int_field(mx, 1, lineno);
    if (!j["confidence"].is_number()) line_error(ErrorCode::ParseError, lineno, "confidence must be a number");
    b.confidence = j["confidence"].get<double>();

    if (b.a_min >= b.a_max || b.b_min >= b.b_max) {
      line_error(ErrorCode::InvariantViolation, lineno, "empty rectangle (min >= max)");
    }
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
      line_error(ErrorCode::InvariantViolation, lineno, "confidence outside [0,1]");
    }
    if (b.slice < 0) line_error(ErrorCode::InvariantViolation, lineno, "negative slice");
    if (dims && !fits_within(b, *dims)) {
      line_error(ErrorCode::InvariantViolation, lineno, "box extends outside the volume");
    }
    set.boxes.push_back(b);
  }
  return set;
}

void save_detections(const DetectionSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, detections_to_jsonl(set));
}

DetectionSet load_detections(const std::filesystem::path& path, std::optional<Dims> dims) {
  return detections_from_jsonl(read_text(path), dims);
}

}  // namespace cellseg
