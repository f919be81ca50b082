#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellseg/box.hpp"
#include "cellseg/detect.hpp"

namespace cellseg {

enum class OverlapMeasure { IoU, IntersectionOverMin };
enum class JoinRule { Intersection, Union };

std::string_view to_string(OverlapMeasure m) noexcept;
std::string_view to_string(JoinRule r) noexcept;
OverlapMeasure parse_overlap_measure(std::string_view s);  // throws ConfigError
JoinRule parse_join_rule(std::string_view s);              // throws ConfigError

struct FusionConfig {
  double confidence_min = 0.5;
  double nms2d_iou = 0.5;
  double cluster_overlap = 0.05;
  double nms3d_iou = 0.5;
  OverlapMeasure overlap_measure = OverlapMeasure::IoU;
  /// How the axis measured by both views of a pair is combined.
  JoinRule join_rule = JoinRule::Intersection;
  /// Link same-view boxes on adjacent slices into stacks before cross-view
  /// pairing. When false every 2D box is paired on its own slice.
  bool stack_slices = true;
  /// Minimum IoU for linking boxes on adjacent slices (links are one-to-one).
  double stack_link_overlap = 0.3;
  /// A linked box whose area is at most this fraction of the peak area on
  /// both sides splits the stack (one object ends, the next begins).
  double stack_valley_ratio = 0.5;
  /// Minimum 1D IoU between the two measurements of each axis when pairing
  /// stacks. Ignored without stacking (a single slice measures no extent).
  double pair_axis_iou = 0.5;

  void validate() const;  // throws ConfigError

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

nlohmann::json to_json(const FusionConfig& c);

/// A same-view detection covering the slice range [slice_min, slice_max) along
/// the view normal. A single 2D box is a stack of one slice.
struct SliceStack {
  View view = View::XY;
  int slice_min = 0, slice_max = 1;
  int a_min = 0, a_max = 0;
  int b_min = 0, b_max = 0;
  double confidence = 1.0;
  int members = 1;

  static SliceStack from_box(const Box2D& b) noexcept;
  friend bool operator==(const SliceStack&, const SliceStack&) = default;
};

/// Keeps boxes with confidence >= confidence_min, order preserved.
DetectionSet filter_confidence(const DetectionSet& dets, double confidence_min);

/// Greedy per-(view, slice) NMS: descending confidence, ties by larger area
/// then lexicographic coordinates; a box is dropped when its IoU with a kept
/// box exceeds `iou_threshold`. Output is in canonical order.
DetectionSet nms_2d(const DetectionSet& dets, double iou_threshold);

/// Links boxes on adjacent slices of the same view one-to-one (highest IoU
/// first, IoU >= `link_overlap`), splits the resulting chains at area valleys
/// (see FusionConfig::stack_valley_ratio) and turns each part into one stack
/// spanning the union of its rectangles and slices with mean confidence.
std::vector<SliceStack> stack_slices(const DetectionSet& dets, double link_overlap,
                                     double valley_ratio = 0.5);

/// Cross-view pairing into 3D proposals. For views V1, V2 with shared in-plane
/// axis s: compatible iff the s-intervals overlap, V2's slice range meets V1's
/// interval on V2's normal, and V1's slice range meets V2's interval on V1's
/// normal. With `axis_iou` > 0 each of the three axis comparisons must also
/// reach that 1D IoU (stacks measure every axis twice). Proposal: s from the
/// join rule, the other axes from the view that measures them in-plane;
/// score = min confidence.
std::vector<Box3D> pair_proposals(std::span<const SliceStack> items,
                                  JoinRule join = JoinRule::Intersection,
                                  double axis_iou = 0.0);
std::vector<Box3D> pair_proposals(const DetectionSet& dets,
                                  JoinRule join = JoinRule::Intersection);

double overlap(const Box3D& a, const Box3D& b, OverlapMeasure measure) noexcept;

struct ProposalCluster {
  std::vector<Box3D> members;
  Box3D representative;
  int support = 0;
};

/// Single-linkage components of the graph with an edge where overlap > threshold.
/// Clusters are ordered by their first member's position in `proposals`; the
/// representative is filled in with support-normalized score.
std::vector<ProposalCluster> cluster_proposals(std::span<const Box3D> proposals,
                                               double cluster_overlap,
                                               OverlapMeasure measure = OverlapMeasure::IoU);

/// Componentwise lower median of member coordinates; score = support / max_support
/// clamped to (0,1]. Throws EmptyCluster.
Box3D median_box(const ProposalCluster& cluster, int max_support);
Box3D median_box(std::span<const Box3D> members, int max_support);

/// Greedy 3D NMS by descending score, ties by larger volume then lexicographic
/// coordinates; drops boxes whose IoU with a kept box exceeds the threshold.
std::vector<Box3D> nms_3d(std::span<const Box3D> boxes, double iou_threshold);

struct FuseStats {
  std::size_t input = 0;
  std::size_t after_confidence = 0;
  std::size_t after_nms2d = 0;
  std::size_t stacks = 0;
  std::size_t proposals = 0;
  std::size_t clusters = 0;
  std::size_t output = 0;
};

/// filter_confidence -> nms_2d -> (stack_slices) -> pair_proposals ->
/// cluster_proposals -> median_box -> nms_3d.
std::vector<Box3D> fuse(const DetectionSet& dets, const FusionConfig& config,
                        FuseStats* stats = nullptr);

/// JSON array of {"min":[x,y,z],"max":[x,y,z],"score":s}; boxes tagged with a
/// source instance also carry "label".
nlohmann::json boxes_to_json(std::span<const Box3D> boxes);
std::vector<Box3D> boxes_from_json(const nlohmann::json& j);  // throws ParseError / InvariantViolation
void save_boxes(std::span<const Box3D> boxes, const std::filesystem::path& path);
std::vector<Box3D> load_boxes(const std::filesystem::path& path);

}  // namespace cellseg
