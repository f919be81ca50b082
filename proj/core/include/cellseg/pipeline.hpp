#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellseg/boxseg.hpp"
#include "cellseg/config.hpp"
#include "cellseg/detect.hpp"
#include "cellseg/fusion.hpp"
#include "cellseg/metrics.hpp"

namespace cellseg {

// Single-artifact commands (detect, fuse, segment) take the output file path;
// multi-artifact commands (gen, eval, ablate, pipeline) take an output directory.
// Every write is atomic.

/// Generates `count` volumes with seeds config.seed + i into `out_dir`.
nlohmann::json cmd_gen(const PipelineConfig& config, int count, const std::filesystem::path& out_dir);

/// Runs the configured detector; the oracle backend needs `gt`.
DetectionSet run_detector(const IntensityVolume& vol, const DetectorSpec& spec, const LabelVolume* gt);

DetectionSet cmd_detect(const std::filesystem::path& volume, const DetectorSpec& spec,
                        const std::optional<std::filesystem::path>& labels,
                        const std::filesystem::path& out);

std::vector<Box3D> cmd_fuse(const std::filesystem::path& detections, const FusionConfig& config,
                            const std::filesystem::path& out, FuseStats* stats = nullptr);

/// The oracle backend needs `gt`; throws UsageError when it is missing.
SegBackend make_backend(const SegmenterSpec& spec, std::shared_ptr<const LabelVolume> gt);

/// Writes the label volume at `out` plus `<out>_records.json` describing every box.
SegmentResult cmd_segment(const std::filesystem::path& volume, const std::filesystem::path& boxes,
                          const SegmenterSpec& spec,
                          const std::optional<std::filesystem::path>& labels,
                          const std::filesystem::path& out, int workers = 1);

nlohmann::json records_to_json(std::span<const BoxPipelineRecord> records);

/// Pairs predictions[i] with truths[i]; writes `metrics.json` and `curve.csv`.
MetricsReport cmd_eval(std::span<const std::filesystem::path> predictions,
                       std::span<const std::filesystem::path> truths, const MetricsSpec& spec,
                       const std::filesystem::path& out_dir,
                       const nlohmann::json& config_echo = nlohmann::json::object());

struct ArmOutcome {
  int profile = 0;
  Arm arm = Arm::Full;
  bool failed = false;
  std::string error;
  MetricsReport report;
};

struct AblationReport {
  std::vector<int> profiles;
  std::vector<Arm> arms;
  std::vector<ArmOutcome> outcomes;  // profile-major, arms in spec order

  const ArmOutcome* find(int profile, Arm arm) const noexcept;
};

/// Labels predicted by one arm on one volume.
LabelVolume run_arm(Arm arm, const IntensityVolume& image, const LabelVolume& gt,
                    const PipelineConfig& config);

/// Evaluates every profile x arm on `ablate.volumes` generated volumes; one
/// simulated lattice per volume seed is rendered under every profile.
AblationReport run_ablation(const PipelineConfig& config);

/// mAJ table (rows = profiles, columns in the fixed arm order).
nlohmann::json ablation_table(const AblationReport& report);

/// Writes `ablation.json`, `table.json`, `curves.csv` and one
/// `report_p<profile>_<arm>.json` per arm.
AblationReport cmd_ablate(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// gen -> detect -> fuse -> segment -> eval through the on-disk formats.
/// Layout: data/, detections/, boxes/, segmentation/, metrics/, pipeline.json.
nlohmann::json cmd_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace cellseg
