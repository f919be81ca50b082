// cellseg: command-line front end for generation, detection, fusion,
// per-box segmentation, evaluation and ablation runs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellseg/config.hpp"
#include "cellseg/error.hpp"
#include "cellseg/pipeline.hpp"
#include "cellseg/volume_io.hpp"

namespace fs = std::filesystem;
using namespace cellseg;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::vector<std::string> settings;
};

PipelineConfig resolve_config(const GlobalFlags& g) {
  PipelineConfig config = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  for (const auto& kv : g.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::UsageError, "--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) config.seed = *g.seed;
  if (g.workers) config.workers = *g.workers;
  config.validate();
  return config;
}

fs::path require_out(const GlobalFlags& g) {
  if (g.out.empty()) fail(ErrorCode::UsageError, "--out is required");
  return g.out;
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D cell instance segmentation: synthesis, 2.5D box fusion, per-box segmentation, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base random seed (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads (overrides the config)");
  app.add_option("--out", g.out, "Output path: a file for detect/fuse/segment, a directory otherwise");
  app.add_option("--set", g.settings, "Override a config key, e.g. --set fusion.nms3d_iou=0.4");

  // gen
  int gen_count = 1;
  auto* gen = app.add_subcommand("gen", "Generate synthetic volumes with ground truth");
  gen->add_option("--count", gen_count, "Number of volumes")->check(CLI::PositiveNumber);

  // detect
  std::string det_volume, det_labels, det_backend, det_input, det_threshold;
  int det_min_area = 0;
  auto* detect = app.add_subcommand("detect", "Per-slice 2D detections in the three views");
  detect->add_option("--volume", det_volume, "Intensity volume")->required();
  detect->add_option("--backend", det_backend, "blob | oracle | external");
  detect->add_option("--labels", det_labels, "Ground-truth labels (oracle backend)");
  detect->add_option("--input", det_input, "JSON-lines detections (external backend)");
  detect->add_option("--threshold", det_threshold, "Blob threshold: number or 'otsu'");
  detect->add_option("--min-area", det_min_area, "Minimum blob area in pixels");

  // fuse
  std::string fuse_input;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse 2D detections into 3D boxes");
  fuse_cmd->add_option("--detections", fuse_input, "JSON-lines detections")->required()->check(CLI::ExistingFile);

  // segment
  std::string seg_volume, seg_boxes, seg_labels, seg_backend, seg_mask_dir;
  auto* segment = app.add_subcommand("segment", "Segment the primary cell of every box and assemble labels");
  segment->add_option("--volume", seg_volume, "Intensity volume")->required();
  segment->add_option("--boxes", seg_boxes, "3D boxes JSON")->required()->check(CLI::ExistingFile);
  segment->add_option("--backend", seg_backend, "oracle | classical | external");
  segment->add_option("--labels", seg_labels, "Ground-truth labels (oracle backend)");
  segment->add_option("--mask-dir", seg_mask_dir, "Directory of box_<i>.raw masks (external backend)");

  // export-cubes
  std::string exp_volume, exp_boxes;
  auto* export_cmd = app.add_subcommand("export-cubes", "Write the 48^3 segmenter inputs for external models");
  export_cmd->add_option("--volume", exp_volume, "Intensity volume")->required();
  export_cmd->add_option("--boxes", exp_boxes, "3D boxes JSON")->required()->check(CLI::ExistingFile);

  // eval
  std::vector<std::string> eval_pred, eval_gt;
  std::string eval_mode;
  auto* eval = app.add_subcommand("eval", "Score predicted label volumes against ground truth");
  eval->add_option("--pred", eval_pred, "Predicted label volumes")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth label volumes, same order")->required();
  eval->add_option("--mode", eval_mode, "instance | voxel");

  // ablate
  std::string abl_profiles, abl_arms;
  int abl_volumes = 0;
  auto* ablate = app.add_subcommand("ablate", "Baseline 1 / Baseline 2 / full pipeline comparison");
  ablate->add_option("--profiles", abl_profiles, "Comma-separated profiles, e.g. 1,2,3");
  ablate->add_option("--arms", abl_arms, "Comma-separated arms: baseline1_3dgtbbs,baseline2_2dgtbbs,full");
  ablate->add_option("--volumes", abl_volumes, "Volumes per profile");

  // pipeline
  int pipe_volumes = 0;
  auto* pipeline = app.add_subcommand("pipeline", "gen -> detect -> fuse -> segment -> eval");
  pipeline->add_option("--volumes", pipe_volumes, "Number of volumes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    PipelineConfig config = resolve_config(g);
    if (*gen) {
      print(cmd_gen(config, gen_count, require_out(g)));
    } else if (*detect) {
      if (!det_backend.empty()) config.detect.kind = parse_detector_kind(det_backend);
      if (!det_input.empty()) config.detect.external = det_input;
      if (!det_threshold.empty()) apply_setting(config, "detect.threshold", det_threshold);
      if (det_min_area > 0) config.detect.blob.min_area = det_min_area;
      const auto dets = cmd_detect(det_volume, config.detect, optional_path(det_labels), require_out(g));
      print({{"detections", dets.size()}, {"backend", dets.backend}});
    } else if (*fuse_cmd) {
      FuseStats s;
      const auto boxes = cmd_fuse(fuse_input, config.fusion, require_out(g), &s);
      print({{"input", s.input},
             {"after_confidence", s.after_confidence},
             {"after_nms2d", s.after_nms2d},
             {"stacks", s.stacks},
             {"proposals", s.proposals},
             {"clusters", s.clusters},
             {"boxes", boxes.size()}});
    } else if (*segment) {
      if (!seg_backend.empty()) config.segment.kind = parse_segmenter_kind(seg_backend);
      if (!seg_mask_dir.empty()) config.segment.mask_dir = seg_mask_dir;
      const auto result = cmd_segment(seg_volume, seg_boxes, config.segment, optional_path(seg_labels),
                                      require_out(g), config.workers);
      std::size_t failures = 0;
      for (const auto& r : result.records) failures += r.failure ? 1 : 0;
      print({{"boxes", result.records.size()},
             {"failed_boxes", failures},
             {"instances", result.labels.instance_ids().size()}});
    } else if (*export_cmd) {
      const auto boxes = load_boxes(exp_boxes);
      export_cubes(read_intensity(exp_volume), boxes, require_out(g), config.segment.target_side);
      print({{"cubes", boxes.size()}});
    } else if (*eval) {
      if (!eval_mode.empty()) config.metrics.mode = parse_counting_mode(eval_mode);
      const std::vector<fs::path> preds(eval_pred.begin(), eval_pred.end());
      const std::vector<fs::path> gts(eval_gt.begin(), eval_gt.end());
      const auto report = cmd_eval(preds, gts, config.metrics, require_out(g), to_json(config));
      print({{"mAP", report.means.map}, {"mAR", report.means.mar}, {"mAJ", report.means.maj}});
    } else if (*ablate) {
      if (!abl_profiles.empty()) apply_setting(config, "ablate.profiles", abl_profiles);
      if (!abl_arms.empty()) apply_setting(config, "ablate.arms", abl_arms);
      if (abl_volumes != 0) config.ablate.volumes = abl_volumes;
      config.ablate.validate();
      print(ablation_table(cmd_ablate(config, require_out(g))));
    } else if (*pipeline) {
      if (pipe_volumes != 0) config.volumes = pipe_volumes;
      const auto summary = cmd_pipeline(config, require_out(g));
      print({{"mAP", summary.at("mAP")}, {"mAR", summary.at("mAR")}, {"mAJ", summary.at("mAJ")}});
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
