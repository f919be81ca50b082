#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellseg/volume.hpp"

namespace cellseg {

struct InstanceMatch {
  std::uint32_t pred_id = 0;
  std::uint32_t gt_id = 0;
  double iou = 0.0;
  long long intersection = 0;  // voxels

  friend bool operator==(const InstanceMatch&, const InstanceMatch&) = default;
};

struct MatchResult {
  std::vector<InstanceMatch> matches;  // in greedy selection order
  std::vector<std::uint32_t> unmatched_pred;
  std::vector<std::uint32_t> unmatched_gt;
  std::size_t pred_count = 0;
  std::size_t gt_count = 0;
  long long pred_foreground = 0;  // voxels
  long long gt_foreground = 0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// One-to-one greedy matching by descending IoU (ties: lower gt id, then lower
/// pred id) over the joint id histogram. Zero-IoU pairs never match.
/// Throws DimsMismatch.
MatchResult match_instances(const LabelVolume& pred, const LabelVolume& gt);

enum class CountingMode { Instance, Voxel };

std::string_view to_string(CountingMode m) noexcept;
CountingMode parse_counting_mode(std::string_view s);  // throws ConfigError

struct Prj {
  double precision = 0.0;
  double recall = 0.0;
  double jaccard = 0.0;

  friend bool operator==(const Prj&, const Prj&) = default;
};

/// P = TP/(TP+FP), R = TP/(TP+FN), J = TP/(TP+FP+FN) counting matches with
/// iou >= th. A zero denominator scores 1 only when both sides are empty.
Prj prj_at(const MatchResult& match, double th, CountingMode mode = CountingMode::Instance);

/// {0.50, 0.55, ..., 0.95}.
std::vector<double> default_grid();

/// Throws ConfigError unless strictly ascending within [0,1].
void validate_grid(std::span<const double> grid);

struct ScoreCurve {
  std::vector<double> grid;
  std::vector<std::vector<Prj>> per_volume;  // [volume][threshold]
  std::vector<double> ap, ar, aj;            // per threshold, mean over volumes
};

/// Per-threshold unweighted means over volumes. Throws EmptyInput.
ScoreCurve curves(std::span<const MatchResult> matches, std::span<const double> grid,
                  CountingMode mode = CountingMode::Instance);

struct MeanScores {
  double map = 0.0;
  double mar = 0.0;
  double maj = 0.0;
};

MeanScores mean_scores(const ScoreCurve& curve);

struct MetricsReport {
  ScoreCurve curve;
  MeanScores means;
  CountingMode mode = CountingMode::Instance;
  std::vector<std::string> volume_names;
  nlohmann::json config = nlohmann::json::object();
};

MetricsReport make_report(std::span<const MatchResult> matches, std::span<const double> grid,
                          CountingMode mode, std::vector<std::string> volume_names = {},
                          nlohmann::json config = nlohmann::json::object());

nlohmann::json to_json(const MetricsReport& report);
/// "th,AP,AR,AJ" rows, one per grid threshold.
std::string to_csv(const MetricsReport& report);

}  // namespace cellseg
