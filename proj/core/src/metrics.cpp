#include "cellseg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "cellseg/error.hpp"

namespace cellseg {
namespace {

double ratio(long long num, long long den, bool both_empty) noexcept {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

MatchResult match_instances(const LabelVolume& pred, const LabelVolume& gt) {
  if (pred.dims() != gt.dims()) fail(ErrorCode::DimsMismatch, "prediction and ground truth dims differ");

  std::map<std::uint32_t, long long> pred_sizes;
  std::map<std::uint32_t, long long> gt_sizes;
  std::unordered_map<std::uint64_t, long long> joint;
  const auto p = pred.grid.data();
  const auto g = gt.grid.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0) ++pred_sizes[p[i]];
    if (g[i] != 0) ++gt_sizes[g[i]];
    if (p[i] != 0 && g[i] != 0) ++joint[(static_cast<std::uint64_t>(p[i]) << 32) | g[i]];
  }

  std::vector<InstanceMatch> candidates;
  candidates.reserve(joint.size());
  for (const auto& [key, inter] : joint) {
    const auto pid = static_cast<std::uint32_t>(key >> 32);
    const auto gid = static_cast<std::uint32_t>(key & 0xffffffffu);
    const long long uni = pred_sizes[pid] + gt_sizes[gid] - inter;
    candidates.push_back({pid, gid, static_cast<double>(inter) / static_cast<double>(uni), inter});
  }
  std::sort(candidates.begin(), candidates.end(), [](const InstanceMatch& a, const InstanceMatch& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
    return a.pred_id < b.pred_id;
  });

  MatchResult r;
  std::map<std::uint32_t, bool> pred_used;
  std::map<std::uint32_t, bool> gt_used;
  for (const auto& c : candidates) {
    if (pred_used[c.pred_id] || gt_used[c.gt_id]) continue;
    pred_used[c.pred_id] = gt_used[c.gt_id] = true;
    r.matches.push_back(c);
  }
  for (const auto& [id, n] : pred_sizes) {
    r.pred_foreground += n;
    if (!pred_used[id]) r.unmatched_pred.push_back(id);
  }
  for (const auto& [id, n] : gt_sizes) {
    r.gt_foreground += n;
    if (!gt_used[id]) r.unmatched_gt.push_back(id);
  }
  r.pred_count = pred_sizes.size();
  r.gt_count = gt_sizes.size();
  return r;
}

std::string_view to_string(CountingMode m) noexcept {
  return m == CountingMode::Instance ? "instance" : "voxel";
}

CountingMode parse_counting_mode(std::string_view s) {
  if (s == "instance") return CountingMode::Instance;
  if (s == "voxel") return CountingMode::Voxel;
  fail(ErrorCode::ConfigError, "unknown counting mode '" + std::string(s) + "'");
}

Prj prj_at(const MatchResult& match, double th, CountingMode mode) {
  long long tp = 0;
  long long pred_total = 0;
  long long gt_total = 0;
  if (mode == CountingMode::Instance) {
    for (const auto& m : match.matches) tp += m.iou >= th ? 1 : 0;
    pred_total = static_cast<long long>(match.pred_count);
    gt_total = static_cast<long long>(match.gt_count);
  } else {
    for (const auto& m : match.matches) tp += m.iou >= th ? m.intersection : 0;
    pred_total = match.pred_foreground;
    gt_total = match.gt_foreground;
  }
  const long long fp = pred_total - tp;
  const long long fn = gt_total - tp;
  const bool both_empty = pred_total == 0 && gt_total == 0;
  return {ratio(tp, tp + fp, both_empty), ratio(tp, tp + fn, both_empty),
          ratio(tp, tp + fp + fn, both_empty)};
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) grid.push_back((50.0 + 5.0 * k) / 100.0);
  return grid;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) fail(ErrorCode::ConfigError, "threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) fail(ErrorCode::ConfigError, "threshold outside [0,1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      fail(ErrorCode::ConfigError, "threshold grid must be strictly ascending");
    }
  }
}

ScoreCurve curves(std::span<const MatchResult> matches, std::span<const double> grid,
                  CountingMode mode) {
  if (matches.empty()) fail(ErrorCode::EmptyInput, "no volumes to score");
  validate_grid(grid);
  ScoreCurve c;
  c.grid.assign(grid.begin(), grid.end());
  for (const auto& m : matches) {
    auto& row = c.per_volume.emplace_back();
    for (double th : grid) row.push_back(prj_at(m, th, mode));
  }
  const auto n = static_cast<double>(matches.size());
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double p = 0.0, r = 0.0, j = 0.0;
    for (const auto& row : c.per_volume) {
      p += row[t].precision;
      r += row[t].recall;
      j += row[t].jaccard;
    }
    c.ap.push_back(p / n);
    c.ar.push_back(r / n);
    c.aj.push_back(j / n);
  }
  return c;
}

MeanScores mean_scores(const ScoreCurve& curve) {
  return {mean(curve.ap), mean(curve.ar), mean(curve.aj)};
}

MetricsReport make_report(std::span<const MatchResult> matches, std::span<const double> grid,
                          CountingMode mode, std::vector<std::string> volume_names,
                          nlohmann::json config) {
  MetricsReport r;
  r.curve = curves(matches, grid, mode);
  r.means = mean_scores(r.curve);
  r.mode = mode;
  r.volume_names = std::move(volume_names);
  r.config = std::move(config);
  return r;
}

nlohmann::json to_json(const MetricsReport& report) {
  const auto& c = report.curve;
  nlohmann::json volumes = nlohmann::json::array();
  for (std::size_t v = 0; v < c.per_volume.size(); ++v) {
    nlohmann::json p = nlohmann::json::array(), r = nlohmann::json::array(),
                   j = nlohmann::json::array();
    for (const auto& s : c.per_volume[v]) {
      p.push_back(s.precision);
      r.push_back(s.recall);
      j.push_back(s.jaccard);
    }
    const std::string name =
        v < report.volume_names.size() ? report.volume_names[v] : std::to_string(v);
    volumes.push_back({{"name", name}, {"P", p}, {"R", r}, {"J", j}});
  }
  return {{"mode", to_string(report.mode)},
          {"grid", c.grid},
          {"AP", c.ap},
          {"AR", c.ar},
          {"AJ", c.aj},
          {"mAP", report.means.map},
          {"mAR", report.means.mar},
          {"mAJ", report.means.maj},
          {"volumes", std::move(volumes)},
          {"config", report.config}};
}

std::string to_csv(const MetricsReport& report) {
  const auto& c = report.curve;
  std::string out = "th,AP,AR,AJ\n";
  for (std::size_t t = 0; t < c.grid.size(); ++t) {
    out += format_number(c.grid[t]) + "," + format_number(c.ap[t]) + "," +
           format_number(c.ar[t]) + "," + format_number(c.aj[t]) + "\n";
  }
  return out;
}

}  // namespace cellseg
