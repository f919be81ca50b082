#include "cellseg/pipeline.hpp"

#include <cstdio>
#include <map>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "cellseg/synth.hpp"
#include "cellseg/volume_io.hpp"
#include "parallel.hpp"

namespace cellseg {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string volume_base(int index) {
  char base[32];
  std::snprintf(base, sizeof base, "vol_%04d", index);
  return base;
}

GenConfig seeded_gen(const PipelineConfig& config) {
  GenConfig gen = config.gen;
  gen.seed = config.seed;
  return gen;
}

std::vector<std::uint32_t> ids_in(const LabelVolume& labels) { return labels.instance_ids(); }

}  // namespace

json cmd_gen(const PipelineConfig& config, int count, const fs::path& out_dir) {
  if (count < 1) fail(ErrorCode::UsageError, "count must be >= 1");
  return gen_dataset(seeded_gen(config), count, out_dir, config.workers);
}

DetectionSet run_detector(const IntensityVolume& vol, const DetectorSpec& spec, const LabelVolume* gt) {
  switch (spec.kind) {
    case DetectorKind::Blob:
      return detect_volume_blobs(vol, spec.blob);
    case DetectorKind::Oracle:
      if (gt == nullptr) fail(ErrorCode::UsageError, "the oracle detector needs ground-truth labels");
      if (gt->dims() != vol.dims()) fail(ErrorCode::DimsMismatch, "labels and volume dims differ");
      return oracle_boxes_2d(*gt);
    case DetectorKind::External:
      if (spec.external.empty()) fail(ErrorCode::UsageError, "the external detector needs a detections file");
      return load_detections(spec.external, vol.dims());
  }
  fail(ErrorCode::InvariantViolation, "unhandled detector kind");
}

DetectionSet cmd_detect(const fs::path& volume, const DetectorSpec& spec,
                        const std::optional<fs::path>& labels, const fs::path& out) {
  const IntensityVolume vol = read_intensity(volume);
  std::optional<LabelVolume> gt;
  if (labels) gt = read_labels(*labels);
  DetectionSet dets = run_detector(vol, spec, gt ? &*gt : nullptr);
  save_detections(dets, out);
  return dets;
}

std::vector<Box3D> cmd_fuse(const fs::path& detections, const FusionConfig& config, const fs::path& out,
                            FuseStats* stats) {
  const DetectionSet dets = load_detections(detections);
  auto boxes = fuse(dets, config, stats);
  save_boxes(boxes, out);
  return boxes;
}

SegBackend make_backend(const SegmenterSpec& spec, std::shared_ptr<const LabelVolume> gt) {
  switch (spec.kind) {
    case SegmenterKind::Oracle:
      if (!gt) fail(ErrorCode::UsageError, "the oracle segmenter needs ground-truth labels");
      return OracleBackend{std::move(gt)};
    case SegmenterKind::Classical:
      return spec.classical;
    case SegmenterKind::External:
      if (spec.mask_dir.empty()) fail(ErrorCode::UsageError, "the external segmenter needs a mask directory");
      return ExternalBackend{spec.mask_dir};
  }
  fail(ErrorCode::InvariantViolation, "unhandled segmenter kind");
}

json records_to_json(std::span<const BoxPipelineRecord> records) {
  json arr = json::array();
  for (const auto& r : records) {
    json j{{"index", r.index},
           {"id", r.index + 1},
           {"min", {r.source.x_min, r.source.y_min, r.source.z_min}},
           {"max", {r.source.x_max, r.source.y_max, r.source.z_max}},
           {"score", r.source.score},
           {"crop_dims", {r.crop_dims.nx, r.crop_dims.ny, r.crop_dims.nz}},
           {"padded_side", r.padded_side},
           {"pad_offsets", r.pad_offsets},
           {"backend", r.backend}};
    if (r.failure) {
      j["failure"] = std::string(to_string(*r.failure));
      j["message"] = r.failure_message;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

SegmentResult cmd_segment(const fs::path& volume, const fs::path& boxes, const SegmenterSpec& spec,
                          const std::optional<fs::path>& labels, const fs::path& out, int workers) {
  const IntensityVolume vol = read_intensity(volume);
  const auto box_list = load_boxes(boxes);
  std::shared_ptr<const LabelVolume> gt;
  if (labels) gt = std::make_shared<const LabelVolume>(read_labels(*labels));
  if (gt && gt->dims() != vol.dims()) fail(ErrorCode::DimsMismatch, "labels and volume dims differ");
  const auto backend = make_backend(spec, gt);
  SegmentResult result = segment_volume(vol, box_list, backend,
                                        {spec.target_side, spec.threshold, workers});
  write_volume(result.labels, out);
  const auto paths = volume_paths(out);
  auto records_path = paths.header;
  records_path.replace_filename(paths.header.stem().string() + "_records.json");
  write_json_atomic(records_path, records_to_json(result.records));
  return result;
}

MetricsReport cmd_eval(std::span<const fs::path> predictions, std::span<const fs::path> truths,
                       const MetricsSpec& spec, const fs::path& out_dir, const json& config_echo) {
  if (predictions.size() != truths.size()) {
    fail(ErrorCode::UsageError, "prediction and ground-truth lists differ in length");
  }
  if (predictions.empty()) fail(ErrorCode::EmptyInput, "no volumes to evaluate");
  std::vector<MatchResult> matches;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const LabelVolume pred = read_labels(predictions[i]);
    const LabelVolume gt = read_labels(truths[i]);
    matches.push_back(match_instances(pred, gt));
    names.push_back(volume_paths(predictions[i]).header.stem().string());
  }
  json echo = config_echo;
  if (echo.is_object() && !echo.contains("metrics")) {
    echo["metrics"] = {{"grid", spec.grid}, {"mode", std::string(to_string(spec.mode))}};
  }
  MetricsReport report = make_report(matches, spec.grid, spec.mode, std::move(names), std::move(echo));
  write_json_atomic(out_dir / "metrics.json", to_json(report));
  write_file_atomic(out_dir / "curve.csv", to_csv(report));
  return report;
}

const ArmOutcome* AblationReport::find(int profile, Arm arm) const noexcept {
  for (const auto& o : outcomes) {
    if (o.profile == profile && o.arm == arm) return &o;
  }
  return nullptr;
}

LabelVolume run_arm(Arm arm, const IntensityVolume& image, const LabelVolume& gt,
                    const PipelineConfig& config) {
  std::vector<Box3D> boxes;
  switch (arm) {
    case Arm::Baseline1:
      boxes = oracle_boxes_3d(gt);
      break;
    case Arm::Baseline2:
      boxes = fuse(oracle_boxes_2d(gt), config.fusion);
      break;
    case Arm::Full:
      boxes = fuse(run_detector(image, config.detect, &gt), config.fusion);
      break;
  }
  const auto truth = std::make_shared<const LabelVolume>(gt);
  const auto backend = make_backend(config.segment, truth);
  return segment_volume(image, boxes, backend,
                        {config.segment.target_side, config.segment.threshold, 1})
      .labels;
}

AblationReport run_ablation(const PipelineConfig& config) {
  config.validate();
  const auto& spec = config.ablate;
  AblationReport report;
  report.profiles = spec.profiles;
  report.arms = spec.arms;

  const std::size_t n_vol = static_cast<std::size_t>(spec.volumes);
  const std::size_t n_prof = spec.profiles.size();
  const std::size_t n_arm = spec.arms.size();
  // matches[vol][profile][arm]; errors recorded per cell, first one kept per arm.
  std::vector<std::optional<MatchResult>> matches(n_vol * n_prof * n_arm);
  std::vector<std::string> errors(n_vol * n_prof * n_arm);
  auto cell = [&](std::size_t v, std::size_t p, std::size_t a) { return (v * n_prof + p) * n_arm + a; };

  detail::parallel_for(n_vol, config.workers, [&](std::size_t v) {
    GenConfig gen = seeded_gen(config);
    gen.seed += v;
    const CpmLattice lattice = simulate_lattice(gen);
    for (std::size_t p = 0; p < n_prof; ++p) {
      gen.profile = spec.profiles[p];
      const RenderedVolume rendered = render_for_config(lattice, gen);
      for (std::size_t a = 0; a < n_arm; ++a) {
        try {
          const LabelVolume pred = run_arm(spec.arms[a], rendered.image, rendered.labels, config);
          matches[cell(v, p, a)] = match_instances(pred, rendered.labels);
        } catch (const Error& e) {
          errors[cell(v, p, a)] = e.what();
        }
      }
    }
  });

  std::vector<std::string> names;
  for (std::size_t v = 0; v < n_vol; ++v) names.push_back(volume_base(static_cast<int>(v)));
  for (std::size_t p = 0; p < n_prof; ++p) {
    for (std::size_t a = 0; a < n_arm; ++a) {
      ArmOutcome outcome;
      outcome.profile = spec.profiles[p];
      outcome.arm = spec.arms[a];
      std::vector<MatchResult> arm_matches;
      for (std::size_t v = 0; v < n_vol; ++v) {
        if (!errors[cell(v, p, a)].empty() && outcome.error.empty()) {
          outcome.error = names[v] + ": " + errors[cell(v, p, a)];
        }
        if (matches[cell(v, p, a)]) arm_matches.push_back(*matches[cell(v, p, a)]);
      }
      outcome.failed = !outcome.error.empty();
      if (!outcome.failed) {
        json echo = to_json(config);
        echo["ablation"] = {{"profile", outcome.profile}, {"arm", std::string(to_string(outcome.arm))}};
        outcome.report = make_report(arm_matches, config.metrics.grid, config.metrics.mode, names, echo);
      }
      report.outcomes.push_back(std::move(outcome));
    }
  }
  return report;
}

json ablation_table(const AblationReport& report) {
  json arms = json::array();
  for (Arm a : kAllArms) {
    if (std::find(report.arms.begin(), report.arms.end(), a) != report.arms.end()) {
      arms.push_back(std::string(to_string(a)));
    }
  }
  json rows = json::array();
  for (int p : report.profiles) {
    json maj = json::object();
    for (Arm a : kAllArms) {
      const ArmOutcome* o = report.find(p, a);
      if (o == nullptr) continue;
      maj[std::string(to_string(a))] = o->failed ? json(nullptr) : json(o->report.means.maj);
    }
    rows.push_back({{"profile", p}, {"mAJ", std::move(maj)}});
  }
  return {{"arms", std::move(arms)}, {"rows", std::move(rows)}};
}

AblationReport cmd_ablate(const PipelineConfig& config, const fs::path& out_dir) {
  AblationReport report = run_ablation(config);
  json outcomes = json::array();
  std::string csv = "profile,arm,th,AP,AR,AJ\n";
  for (const auto& o : report.outcomes) {
    const std::string arm(to_string(o.arm));
    json entry{{"profile", o.profile}, {"arm", arm}, {"failed", o.failed}};
    if (o.failed) {
      entry["error"] = o.error;
    } else {
      entry["mAP"] = o.report.means.map;
      entry["mAR"] = o.report.means.mar;
      entry["mAJ"] = o.report.means.maj;
      const auto file = "report_p" + std::to_string(o.profile) + "_" + arm + ".json";
      entry["report"] = file;
      write_json_atomic(out_dir / file, to_json(o.report));
      const auto rows = to_csv(o.report);
      std::size_t pos = rows.find('\n') + 1;  // skip the header
      while (pos < rows.size()) {
        const auto end = rows.find('\n', pos);
        csv += std::to_string(o.profile) + "," + arm + "," + rows.substr(pos, end - pos) + "\n";
        pos = end + 1;
      }
    }
    outcomes.push_back(std::move(entry));
  }
  const json table = ablation_table(report);
  write_json_atomic(out_dir / "table.json", table);
  write_file_atomic(out_dir / "curves.csv", csv);
  write_json_atomic(out_dir / "ablation.json",
                    {{"table", table}, {"outcomes", std::move(outcomes)}, {"config", to_json(config)}});
  return report;
}

json cmd_pipeline(const PipelineConfig& config, const fs::path& out_dir) {
  config.validate();
  const fs::path data = out_dir / "data";
  const json manifest = cmd_gen(config, config.volumes, data);

  std::vector<fs::path> preds;
  std::vector<fs::path> truths;
  json volumes = json::array();
  for (const auto& entry : manifest.at("volumes")) {
    const std::string base = entry.at("image").get<std::string>();
    const fs::path image = data / base;
    const fs::path labels = data / entry.at("labels").get<std::string>();
    const fs::path dets = out_dir / "detections" / (base + ".jsonl");
    const fs::path boxes = out_dir / "boxes" / (base + ".json");
    const fs::path seg = out_dir / "segmentation" / (base + "_pred");

    const auto detections = cmd_detect(image, config.detect, labels, dets);
    FuseStats stats;
    const auto fused = cmd_fuse(dets, config.fusion, boxes, &stats);
    const auto result = cmd_segment(image, boxes, config.segment, labels, seg, config.workers);
    std::size_t failures = 0;
    for (const auto& r : result.records) failures += r.failure ? 1 : 0;

    preds.push_back(seg);
    truths.push_back(labels);
    volumes.push_back({{"name", base},
                       {"detections", detections.size()},
                       {"fused_boxes", fused.size()},
                       {"failed_boxes", failures},
                       {"predicted_instances", ids_in(result.labels).size()}});
  }
  const json echo = to_json(config);
  const MetricsReport report = cmd_eval(preds, truths, config.metrics, out_dir / "metrics", echo);
  json summary{{"volumes", std::move(volumes)},
               {"mAP", report.means.map},
               {"mAR", report.means.mar},
               {"mAJ", report.means.maj},
               {"config", echo}};
  write_json_atomic(out_dir / "pipeline.json", summary);
  return summary;
}

}  // namespace cellseg
