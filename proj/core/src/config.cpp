#include "cellseg/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"

namespace cellseg {
namespace {

using json = nlohmann::json;
using Setter = std::function<void(PipelineConfig&, std::string_view)>;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  fail(ErrorCode::ConfigError, "invalid value '" + std::string(value) + "' for " +
                                   std::string(key) + " (expected " + std::string(want) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    bad_value(key, text, std::is_integral_v<T> ? "an integer" : "a number");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, text, "a boolean");
}

Dims parse_dims(std::string_view key, std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) return Dims::cube(parse_number<int>(key, parts[0]));
  if (parts.size() != 3) bad_value(key, text, "N or NX,NY,NZ");
  return {parse_number<int>(key, parts[0]), parse_number<int>(key, parts[1]),
          parse_number<int>(key, parts[2])};
}

/// "otsu" or a number.
std::optional<double> parse_threshold(std::string_view key, std::string_view text) {
  if (trim(text) == "otsu") return std::nullopt;
  return parse_number<double>(key, text);
}

template <typename T, typename Fn>
std::vector<T> parse_list(std::string_view text, Fn&& item) {
  std::vector<T> out;
  for (auto part : split(text, ',')) {
    if (!part.empty()) out.push_back(item(part));
  }
  return out;
}

#define CELLSEG_INT(name, expr) \
  {name, [](PipelineConfig& c, std::string_view v) { expr = parse_number<int>(name, v); }}
#define CELLSEG_DOUBLE(name, expr) \
  {name, [](PipelineConfig& c, std::string_view v) { expr = parse_number<double>(name, v); }}

const std::map<std::string, Setter, std::less<>>& settings() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"seed", [](PipelineConfig& c, std::string_view v) {
         c.seed = parse_number<std::uint64_t>("seed", v);
       }},
      CELLSEG_INT("workers", c.workers),
      CELLSEG_INT("volumes", c.volumes),

      CELLSEG_INT("gen.cell_count", c.gen.cell_count),
      {"gen.lattice_dims",
       [](PipelineConfig& c, std::string_view v) { c.gen.lattice_dims = parse_dims("gen.lattice_dims", v); }},
      {"gen.crop_dims",
       [](PipelineConfig& c, std::string_view v) { c.gen.crop_dims = parse_dims("gen.crop_dims", v); }},
      CELLSEG_INT("gen.upscale_factor", c.gen.upscale_factor),
      CELLSEG_INT("gen.mc_sweeps", c.gen.mc_sweeps),
      CELLSEG_DOUBLE("gen.temperature", c.gen.temperature),
      CELLSEG_DOUBLE("gen.volume_stiffness", c.gen.volume_stiffness),
      CELLSEG_DOUBLE("gen.contact_cell_medium_eu", c.gen.contact.cell_medium_eu),
      CELLSEG_DOUBLE("gen.contact_cell_medium_het", c.gen.contact.cell_medium_het),
      CELLSEG_DOUBLE("gen.contact_cell_cell", c.gen.contact.cell_cell),
      CELLSEG_DOUBLE("gen.contact_eu_eu", c.gen.contact.eu_eu),
      CELLSEG_DOUBLE("gen.contact_eu_het", c.gen.contact.eu_het),
      CELLSEG_DOUBLE("gen.contact_het_het", c.gen.contact.het_het),
      CELLSEG_INT("gen.seed_radius", c.gen.seed_radius),
      CELLSEG_INT("gen.cell_target_volume", c.gen.cell_target_volume),
      CELLSEG_INT("gen.min_heterochromatin", c.gen.min_heterochromatin),
      CELLSEG_INT("gen.max_heterochromatin", c.gen.max_heterochromatin),
      CELLSEG_DOUBLE("gen.heterochromatin_fraction", c.gen.heterochromatin_fraction),
      CELLSEG_INT("gen.placement_attempts", c.gen.placement_attempts),
      CELLSEG_DOUBLE("gen.euchromatin_level", c.gen.euchromatin_level),
      CELLSEG_DOUBLE("gen.heterochromatin_level", c.gen.heterochromatin_level),
      CELLSEG_DOUBLE("gen.mask_smoothing_sigma", c.gen.mask_smoothing_sigma),
      CELLSEG_DOUBLE("gen.blur_sigma_iso", c.gen.blur_sigma_iso),
      CELLSEG_DOUBLE("gen.blur_sigma_xy", c.gen.blur_sigma_xy),
      CELLSEG_DOUBLE("gen.blur_sigma_z", c.gen.blur_sigma_z),
      CELLSEG_DOUBLE("gen.noise_sigma", c.gen.noise_sigma),
      CELLSEG_INT("gen.profile", c.gen.profile),
      {"gen.output_dtype",
       [](PipelineConfig& c, std::string_view v) {
         try {
           c.gen.output_dtype = parse_dtype(trim(v));
         } catch (const Error&) {
           bad_value("gen.output_dtype", v, "u8, u16 or f32");
         }
       }},

      CELLSEG_DOUBLE("fusion.confidence_min", c.fusion.confidence_min),
      CELLSEG_DOUBLE("fusion.nms2d_iou", c.fusion.nms2d_iou),
      CELLSEG_DOUBLE("fusion.cluster_overlap", c.fusion.cluster_overlap),
      CELLSEG_DOUBLE("fusion.nms3d_iou", c.fusion.nms3d_iou),
      {"fusion.overlap_measure",
       [](PipelineConfig& c, std::string_view v) { c.fusion.overlap_measure = parse_overlap_measure(trim(v)); }},
      {"fusion.join_rule",
       [](PipelineConfig& c, std::string_view v) { c.fusion.join_rule = parse_join_rule(trim(v)); }},
      {"fusion.stack_slices",
       [](PipelineConfig& c, std::string_view v) { c.fusion.stack_slices = parse_bool("fusion.stack_slices", v); }},
      CELLSEG_DOUBLE("fusion.stack_link_overlap", c.fusion.stack_link_overlap),
      CELLSEG_DOUBLE("fusion.stack_valley_ratio", c.fusion.stack_valley_ratio),
      CELLSEG_DOUBLE("fusion.pair_axis_iou", c.fusion.pair_axis_iou),

      {"detect.backend",
       [](PipelineConfig& c, std::string_view v) { c.detect.kind = parse_detector_kind(trim(v)); }},
      {"detect.threshold",
       [](PipelineConfig& c, std::string_view v) { c.detect.blob.threshold = parse_threshold("detect.threshold", v); }},
      CELLSEG_INT("detect.min_area", c.detect.blob.min_area),
      {"detect.external",
       [](PipelineConfig& c, std::string_view v) { c.detect.external = std::string(trim(v)); }},

      {"segment.backend",
       [](PipelineConfig& c, std::string_view v) { c.segment.kind = parse_segmenter_kind(trim(v)); }},
      CELLSEG_DOUBLE("segment.threshold", c.segment.threshold),
      {"segment.classical_threshold",
       [](PipelineConfig& c, std::string_view v) {
         c.segment.classical.threshold = parse_threshold("segment.classical_threshold", v);
       }},
      CELLSEG_INT("segment.core_side", c.segment.classical.core_side),
      {"segment.mask_dir",
       [](PipelineConfig& c, std::string_view v) { c.segment.mask_dir = std::string(trim(v)); }},
      CELLSEG_INT("segment.target_side", c.segment.target_side),

      {"metrics.grid",
       [](PipelineConfig& c, std::string_view v) {
         c.metrics.grid = parse_list<double>(v, [](std::string_view s) { return parse_number<double>("metrics.grid", s); });
       }},
      {"metrics.mode",
       [](PipelineConfig& c, std::string_view v) { c.metrics.mode = parse_counting_mode(trim(v)); }},

      {"ablate.profiles",
       [](PipelineConfig& c, std::string_view v) {
         c.ablate.profiles = parse_list<int>(v, [](std::string_view s) { return parse_number<int>("ablate.profiles", s); });
       }},
      {"ablate.arms",
       [](PipelineConfig& c, std::string_view v) {
         c.ablate.arms = parse_list<Arm>(v, [](std::string_view s) { return parse_arm(s); });
       }},
      CELLSEG_INT("ablate.volumes", c.ablate.volumes),
  };
  return table;
}

#undef CELLSEG_INT
#undef CELLSEG_DOUBLE

std::string threshold_text(const std::optional<double>& t) {
  return t ? std::to_string(*t) : "otsu";
}

}  // namespace

std::string_view to_string(DetectorKind k) noexcept {
  switch (k) {
    case DetectorKind::Blob: return "blob";
    case DetectorKind::Oracle: return "oracle";
    case DetectorKind::External: return "external";
  }
  return "blob";
}

std::string_view to_string(SegmenterKind k) noexcept {
  switch (k) {
    case SegmenterKind::Oracle: return "oracle";
    case SegmenterKind::Classical: return "classical";
    case SegmenterKind::External: return "external";
  }
  return "classical";
}

DetectorKind parse_detector_kind(std::string_view s) {
  if (s == "blob") return DetectorKind::Blob;
  if (s == "oracle") return DetectorKind::Oracle;
  if (s == "external") return DetectorKind::External;
  fail(ErrorCode::UsageError, "unknown detector backend '" + std::string(s) + "'");
}

SegmenterKind parse_segmenter_kind(std::string_view s) {
  if (s == "oracle") return SegmenterKind::Oracle;
  if (s == "classical") return SegmenterKind::Classical;
  if (s == "external") return SegmenterKind::External;
  fail(ErrorCode::UsageError, "unknown segmentation backend '" + std::string(s) + "'");
}

std::string_view to_string(Arm a) noexcept {
  switch (a) {
    case Arm::Baseline1: return "baseline1_3dgtbbs";
    case Arm::Baseline2: return "baseline2_2dgtbbs";
    case Arm::Full: return "full";
  }
  return "full";
}

Arm parse_arm(std::string_view s) {
  for (Arm a : kAllArms) {
    if (s == to_string(a)) return a;
  }
  fail(ErrorCode::UsageError, "unknown ablation arm '" + std::string(s) + "'");
}

void AblationSpec::validate() const {
  if (arms.empty()) fail(ErrorCode::UsageError, "ablation needs at least one arm");
  if (profiles.empty()) fail(ErrorCode::UsageError, "ablation needs at least one profile");
  for (int p : profiles) {
    if (p < 1 || p > 3) fail(ErrorCode::UsageError, "ablation profiles must be 1, 2 or 3");
  }
  if (volumes < 1) fail(ErrorCode::UsageError, "ablation needs at least one volume");
}

void PipelineConfig::validate() const {
  if (workers < 1) fail(ErrorCode::ConfigError, "workers must be >= 1");
  if (volumes < 1) fail(ErrorCode::ConfigError, "volumes must be >= 1");
  gen.validate();
  fusion.validate();
  if (detect.blob.min_area < 1) fail(ErrorCode::ConfigError, "detect.min_area must be >= 1");
  if (segment.target_side < 1) fail(ErrorCode::ConfigError, "segment.target_side must be >= 1");
  if (segment.classical.core_side < 1) fail(ErrorCode::ConfigError, "segment.core_side must be >= 1");
  if (!(segment.threshold >= 0.0 && segment.threshold <= 1.0)) {
    fail(ErrorCode::ConfigError, "segment.threshold must lie in [0,1]");
  }
  validate_grid(metrics.grid);
  ablate.validate();
}

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value) {
  const auto& table = settings();
  const auto it = table.find(key);
  if (it == table.end()) fail(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
  it->second(config, value);
}

PipelineConfig parse_config(std::string_view ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }
  PipelineConfig config;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply_setting(config, name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) apply_setting(config, name + "." + key, leaf.data());
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path));
}

nlohmann::json to_json(const PipelineConfig& c) {
  json gen = to_json(c.gen);
  gen.erase("seed");
  json arms = json::array();
  for (Arm a : c.ablate.arms) arms.push_back(std::string(to_string(a)));
  return json{
      {"seed", c.seed},
      {"workers", c.workers},
      {"volumes", c.volumes},
      {"gen", std::move(gen)},
      {"fusion", to_json(c.fusion)},
      {"detect",
       {{"backend", std::string(to_string(c.detect.kind))},
        {"threshold", threshold_text(c.detect.blob.threshold)},
        {"min_area", c.detect.blob.min_area},
        {"external", c.detect.external.string()}}},
      {"segment",
       {{"backend", std::string(to_string(c.segment.kind))},
        {"threshold", c.segment.threshold},
        {"classical_threshold", threshold_text(c.segment.classical.threshold)},
        {"core_side", c.segment.classical.core_side},
        {"mask_dir", c.segment.mask_dir.string()},
        {"target_side", c.segment.target_side}}},
      {"metrics", {{"grid", c.metrics.grid}, {"mode", std::string(to_string(c.metrics.mode))}}},
      {"ablate", {{"profiles", c.ablate.profiles}, {"arms", arms}, {"volumes", c.ablate.volumes}}},
  };
}

}  // namespace cellseg
