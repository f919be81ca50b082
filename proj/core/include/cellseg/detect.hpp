#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cellseg/box.hpp"
#include "cellseg/imgproc.hpp"
#include "cellseg/volume.hpp"

namespace cellseg {

/// Per-slice 2D detections over the three orthogonal views.
struct DetectionSet {
  Dims dims{};  // all zero when unknown (e.g. loaded without a reference volume)
  std::vector<Box2D> boxes;
  std::string backend;
  std::map<std::string, std::string> provenance;

  /// Canonical order: (view, slice, a_min, b_min, a_max, b_max, confidence desc).
  void sort();
  std::size_t size() const noexcept { return boxes.size(); }
  bool empty() const noexcept { return boxes.empty(); }
};

bool canonical_less(const Box2D& l, const Box2D& r) noexcept;

/// Cross-section: XY at fixed z, XZ at fixed y, YZ at fixed x. Throws SliceOutOfRange.
Image2D slice_view(const Grid<float>& vol, View view, int slice);

struct BlobParams {
  std::optional<double> threshold;  // nullopt selects Otsu on the slice histogram
  int min_area = 1;
};

/// Binarize (v >= threshold), 8-connected components, one tight box per
/// component with area >= min_area; confidence is the mean component intensity.
std::vector<Box2D> detect_blobs(const Image2D& image, View view, int slice,
                                const BlobParams& params);

/// detect_blobs over every slice of every view.
DetectionSet detect_volume_blobs(const IntensityVolume& vol, const BlobParams& params);

/// Tight in-plane box of every instance on every slice of every view, confidence 1.
DetectionSet oracle_boxes_2d(const LabelVolume& gt);

/// Tight 3D box per instance, score 1, tagged with the instance id.
std::vector<Box3D> oracle_boxes_3d(const LabelVolume& gt);

/// JSON Lines, one box per line:
/// {"view":"xy","slice":4,"min":[a,b],"max":[a,b],"confidence":0.9}
std::string detections_to_jsonl(const DetectionSet& set);
/// Throws ParseError / InvariantViolation naming the 1-based line. When `dims`
/// is given, extents are validated against it as well.
DetectionSet detections_from_jsonl(const std::string& text, std::optional<Dims> dims = std::nullopt);

void save_detections(const DetectionSet& set, const std::filesystem::path& path);
DetectionSet load_detections(const std::filesystem::path& path,
                             std::optional<Dims> dims = std::nullopt);

}  // namespace cellseg
