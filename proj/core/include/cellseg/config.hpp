#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellseg/boxseg.hpp"
#include "cellseg/detect.hpp"
#include "cellseg/fusion.hpp"
#include "cellseg/metrics.hpp"
#include "cellseg/synth.hpp"

namespace cellseg {

enum class DetectorKind { Blob, Oracle, External };
enum class SegmenterKind { Oracle, Classical, External };

std::string_view to_string(DetectorKind k) noexcept;
std::string_view to_string(SegmenterKind k) noexcept;
DetectorKind parse_detector_kind(std::string_view s);    // throws UsageError
SegmenterKind parse_segmenter_kind(std::string_view s);  // throws UsageError

struct DetectorSpec {
  DetectorKind kind = DetectorKind::Blob;
  BlobParams blob{};
  std::filesystem::path external;  // JSON-lines file for the external backend
};

struct SegmenterSpec {
  SegmenterKind kind = SegmenterKind::Classical;
  ClassicalBackend classical{};
  std::filesystem::path mask_dir;  // for the external backend
  double threshold = 0.5;          // background channel of the assembly
  int target_side = kSegmenterSide;
};

struct MetricsSpec {
  std::vector<double> grid = default_grid();
  CountingMode mode = CountingMode::Instance;
};

/// Ablation arms in report order.
enum class Arm { Baseline1, Baseline2, Full };

inline constexpr std::array<Arm, 3> kAllArms{Arm::Baseline1, Arm::Baseline2, Arm::Full};

std::string_view to_string(Arm a) noexcept;  // baseline1_3dgtbbs / baseline2_2dgtbbs / full
Arm parse_arm(std::string_view s);           // throws UsageError

struct AblationSpec {
  std::vector<int> profiles{1, 2, 3};
  std::vector<Arm> arms{kAllArms.begin(), kAllArms.end()};
  int volumes = 10;

  void validate() const;  // throws UsageError
};

/// Everything a command needs. Every field has a default.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  int volumes = 1;  // volumes generated by `pipeline`
  GenConfig gen{};
  FusionConfig fusion{};
  DetectorSpec detect{};
  SegmenterSpec segment{};
  MetricsSpec metrics{};
  AblationSpec ablate{};

  /// Throws ConfigError / UsageError.
  void validate() const;
};

/// Sets one `section.key` (or top-level `key`) from its text form.
/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// INI text: top-level `seed`, `workers`, `volumes`, then sections
/// [gen] [fusion] [detect] [segment] [metrics] [ablate]. Missing keys keep
/// their defaults; unknown sections or keys are rejected.
PipelineConfig parse_config(std::string_view ini_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Full echo of the effective configuration.
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace cellseg
