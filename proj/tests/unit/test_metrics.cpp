#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cellseg/error.hpp"
#include "cellseg/metrics.hpp"
#include "test_support.hpp"

using namespace cellseg;

namespace {

void paint(LabelVolume& v, std::array<int, 6> c, std::uint32_t id) {
  for (int z = c[2]; z < c[5]; ++z) {
    for (int y = c[1]; y < c[4]; ++y) {
      for (int x = c[0]; x < c[3]; ++x) v.grid.at(x, y, z) = id;
    }
  }
}

/// `n` disjoint 2x2x2 cubes along a diagonal of a 40^3 volume, ids first..first+n-1.
void paint_cubes(LabelVolume& v, int start_slot, int n, std::uint32_t first_id) {
  for (int i = 0; i < n; ++i) {
    const int o = 3 * (start_slot + i);
    paint(v, {o, o, o, o + 2, o + 2, o + 2}, first_id + static_cast<std::uint32_t>(i));
  }
}

bool distinct_nonzero_ious(const LabelVolume& pred, const LabelVolume& gt) {
  std::set<double> seen;
  for (const auto& [pair, iou] : support::brute_iou_table(pred, gt)) {
    if (!seen.insert(iou).second) return false;
  }
  return true;
}

LabelVolume permute_ids(const LabelVolume& v, std::mt19937_64& rng) {
  const auto max = v.max_id();
  std::vector<std::uint32_t> perm(max + 1);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  LabelVolume out = v;
  for (auto& id : out.grid.storage()) id = perm[id];
  return out;
}

}  // namespace

TEST(Prj, SevenOfEightPredictionsAndTenTruths) {
  LabelVolume gt(Dims::cube(40)), pred(Dims::cube(40));
  paint_cubes(gt, 0, 10, 1);
  paint_cubes(pred, 0, 7, 1);   // seven exact matches
  paint_cubes(pred, 11, 1, 8);  // one false positive in empty space
  const auto p = prj_at(match_instances(pred, gt), 0.5);
  EXPECT_DOUBLE_EQ(p.precision, 7.0 / 8.0);
  EXPECT_DOUBLE_EQ(p.recall, 7.0 / 10.0);
  EXPECT_DOUBLE_EQ(p.jaccard, 7.0 / 11.0);
}

TEST(Prj, IdenticalVolumesScoreOne) {
  std::mt19937_64 rng(1);
  const auto v = support::random_box_labels(rng, Dims::cube(16), 5);
  for (double th : default_grid()) {
    const auto p = prj_at(match_instances(v, v), th);
    EXPECT_EQ(p, (Prj{1.0, 1.0, 1.0}));
  }
}

TEST(Prj, EmptyVolumes) {
  LabelVolume empty(Dims::cube(4)), one(Dims::cube(4));
  paint(one, {0, 0, 0, 2, 2, 2}, 1);
  EXPECT_EQ(prj_at(match_instances(empty, empty), 0.5), (Prj{1.0, 1.0, 1.0}));
  EXPECT_EQ(prj_at(match_instances(empty, one), 0.5), (Prj{0.0, 0.0, 0.0}));
  EXPECT_EQ(prj_at(match_instances(one, empty), 0.5), (Prj{0.0, 0.0, 0.0}));
  EXPECT_EQ(prj_at(match_instances(empty, empty), 0.5, CountingMode::Voxel), (Prj{1.0, 1.0, 1.0}));
}

TEST(Prj, BackgroundIsNeverAnInstance) {
  LabelVolume gt(Dims::cube(6)), pred(Dims::cube(6));
  paint(gt, {0, 0, 0, 3, 3, 3}, 4);
  paint(pred, {0, 0, 0, 3, 3, 3}, 9);
  const auto m = match_instances(pred, gt);
  EXPECT_EQ(m.pred_count, 1u);
  EXPECT_EQ(m.gt_count, 1u);
  ASSERT_EQ(m.matches.size(), 1u);
  EXPECT_EQ(m.matches[0].pred_id, 9u);
  EXPECT_EQ(m.matches[0].gt_id, 4u);
  EXPECT_EQ(m.matches[0].iou, 1.0);
}

TEST(Prj, DimsMismatchThrows) {
  EXPECT_THROW(match_instances(LabelVolume(Dims::cube(3)), LabelVolume(Dims::cube(4))), Error);
}

TEST(Prj, MatchesExhaustiveSearchOnThreeByThree) {
  // Three truths side by side; three predictions shifted by different amounts.
  LabelVolume gt(Dims{30, 4, 4}), pred(Dims{30, 4, 4});
  paint(gt, {0, 0, 0, 8, 4, 4}, 1);
  paint(gt, {10, 0, 0, 18, 4, 4}, 2);
  paint(gt, {20, 0, 0, 28, 4, 4}, 3);
  paint(pred, {1, 0, 0, 9, 4, 4}, 1);    // IoU 7/9
  paint(pred, {13, 0, 0, 21, 4, 4}, 2);  // IoU 5/11 with gt 2
  paint(pred, {23, 0, 0, 30, 4, 4}, 3);  // IoU 5/10 with gt 3
  const auto m = match_instances(pred, gt);
  for (double th : {0.3, 0.45, 0.5, 0.55, 0.7, 0.8}) {
    const auto got = prj_at(m, th);
    const auto ref = support::brute_prj(pred, gt, th);
    EXPECT_NEAR(got.precision, ref.precision, 1e-12) << th;
    EXPECT_NEAR(got.recall, ref.recall, 1e-12) << th;
    EXPECT_NEAR(got.jaccard, ref.jaccard, 1e-12) << th;
  }
}

TEST(Prj, RandomVolumesMatchExhaustiveSearch) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 60; ++t) {
    const auto gt = support::random_box_labels(rng, Dims::cube(12), 4);
    const auto pred = support::random_box_labels(rng, Dims::cube(12), 4);
    const auto m = match_instances(pred, gt);
    for (double th : default_grid()) {
      const auto got = prj_at(m, th);
      const auto ref = support::brute_prj(pred, gt, th);
      EXPECT_NEAR(got.jaccard, ref.jaccard, 1e-12);
      EXPECT_NEAR(got.precision, ref.precision, 1e-12);
      EXPECT_NEAR(got.recall, ref.recall, 1e-12);
    }
  }
}

TEST(Matching, GreedyEqualsTheLexicographicallyBestAssignment) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 60; ++t) {
    const auto gt = support::random_box_labels(rng, Dims::cube(10), 4);
    const auto pred = support::random_box_labels(rng, Dims::cube(10), 4);
    if (!distinct_nonzero_ious(pred, gt)) continue;
    ++checked;
    std::set<std::pair<std::uint32_t, std::uint32_t>> got;
    for (const auto& m : match_instances(pred, gt).matches) got.insert({m.pred_id, m.gt_id});
    const auto ref = support::lexicographic_best_assignment(pred, gt);
    EXPECT_EQ(got, (std::set<std::pair<std::uint32_t, std::uint32_t>>(ref.begin(), ref.end())));
  }
  EXPECT_GE(checked, 30);
}

TEST(Matching, IsOneToOneWithPositiveIoUs) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto gt = support::random_box_labels(rng, Dims::cube(10), 5);
    const auto pred = support::random_box_labels(rng, Dims::cube(10), 5);
    const auto m = match_instances(pred, gt);
    std::set<std::uint32_t> ps, gs;
    const auto table = support::brute_iou_table(pred, gt);
    for (const auto& x : m.matches) {
      EXPECT_TRUE(ps.insert(x.pred_id).second);
      EXPECT_TRUE(gs.insert(x.gt_id).second);
      EXPECT_GT(x.iou, 0.0);
      EXPECT_DOUBLE_EQ(x.iou, table.at({x.pred_id, x.gt_id}));
    }
    EXPECT_EQ(m.matches.size() + m.unmatched_pred.size(), m.pred_count);
    EXPECT_EQ(m.matches.size() + m.unmatched_gt.size(), m.gt_count);
  }
}

TEST(Prj, ScoresAreMonotoneBoundedAndRelabelInvariant) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 40; ++t) {
    const auto gt = support::random_box_labels(rng, Dims::cube(12), 5);
    const auto pred = support::random_box_labels(rng, Dims::cube(12), 5);
    const auto m = match_instances(pred, gt);
    const auto m2 = match_instances(permute_ids(pred, rng), permute_ids(gt, rng));
    for (auto mode : {CountingMode::Instance, CountingMode::Voxel}) {
      Prj prev{1.0, 1.0, 1.0};
      for (double th = 0.0; th <= 1.0; th += 0.05) {
        const auto p = prj_at(m, th, mode);
        EXPECT_LE(p.precision, prev.precision + 1e-15);
        EXPECT_LE(p.recall, prev.recall + 1e-15);
        EXPECT_LE(p.jaccard, prev.jaccard + 1e-15);
        EXPECT_LE(p.jaccard, std::min(p.precision, p.recall) + 1e-15);
        for (double s : {p.precision, p.recall, p.jaccard}) {
          EXPECT_GE(s, 0.0);
          EXPECT_LE(s, 1.0);
        }
        const auto q = prj_at(m2, th, mode);
        EXPECT_NEAR(q.jaccard, p.jaccard, 1e-12);
        EXPECT_NEAR(q.precision, p.precision, 1e-12);
        prev = p;
      }
    }
  }
}

TEST(Prj, VoxelModeCountsMatchedIntersections) {
  LabelVolume gt(Dims{8, 2, 2}), pred(Dims{8, 2, 2});
  paint(gt, {0, 0, 0, 4, 2, 2}, 1);    // 16 voxels
  paint(pred, {2, 0, 0, 6, 2, 2}, 1);  // 16 voxels, 8 shared: IoU 1/3
  const auto m = match_instances(pred, gt);
  EXPECT_EQ(m.pred_foreground, 16);
  EXPECT_EQ(m.gt_foreground, 16);
  const auto p = prj_at(m, 0.3, CountingMode::Voxel);
  EXPECT_DOUBLE_EQ(p.precision, 0.5);
  EXPECT_DOUBLE_EQ(p.recall, 0.5);
  EXPECT_DOUBLE_EQ(p.jaccard, 8.0 / 24.0);
  EXPECT_EQ(prj_at(m, 0.5, CountingMode::Voxel), (Prj{0.0, 0.0, 0.0}));
}

TEST(Curves, DefaultGridHasTenThresholds) {
  const auto g = default_grid();
  ASSERT_EQ(g.size(), 10u);
  EXPECT_DOUBLE_EQ(g.front(), 0.5);
  EXPECT_DOUBLE_EQ(g.back(), 0.95);
  EXPECT_NO_THROW(validate_grid(g));
  EXPECT_THROW(validate_grid(std::vector<double>{}), Error);
  EXPECT_THROW(validate_grid(std::vector<double>{0.5, 0.5}), Error);
  EXPECT_THROW(validate_grid(std::vector<double>{0.5, 1.5}), Error);
}

TEST(Curves, StepAtThreeQuartersGivesMeanOfSixTenths) {
  // One instance matched with IoU exactly 0.75: TP for th in {0.50..0.75}.
  LabelVolume gt(Dims{4, 1, 1}), pred(Dims{4, 1, 1});
  paint(gt, {0, 0, 0, 4, 1, 1}, 1);
  paint(pred, {0, 0, 0, 3, 1, 1}, 1);
  const std::vector<MatchResult> m{match_instances(pred, gt)};
  const auto c = curves(m, default_grid());
  for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(c.ap[t], t <= 5 ? 1.0 : 0.0) << t;
  EXPECT_NEAR(mean_scores(c).map, 0.6, 1e-12);
}

TEST(Curves, AveragesVolumesWithEqualWeight) {
  // Volume A scores 1 everywhere; volume B has one truth and no prediction.
  LabelVolume a(Dims::cube(4)), b_gt(Dims::cube(4)), b_pred(Dims::cube(4));
  paint(a, {0, 0, 0, 2, 2, 2}, 1);
  paint(b_gt, {0, 0, 0, 2, 2, 2}, 1);
  const std::vector<MatchResult> m{match_instances(a, a), match_instances(b_pred, b_gt)};
  const auto c = curves(m, default_grid());
  for (double v : c.ap) EXPECT_DOUBLE_EQ(v, 0.5);
  const auto s = mean_scores(c);
  EXPECT_DOUBLE_EQ(s.map, 0.5);
  EXPECT_DOUBLE_EQ(s.mar, 0.5);
  EXPECT_DOUBLE_EQ(s.maj, 0.5);
}

TEST(Curves, LinearlyDecreasingScoresAverageToTheirMidpoint) {
  // Ten volumes, volume k matched with IoU 0.5 + 0.05 k: AP at grid index t is (10 - t) / 10.
  std::vector<MatchResult> ms;
  for (int k = 0; k < 10; ++k) {
    // IoU = n / 20 with n = 10 + k, exact in binary after division.
    LabelVolume gt(Dims{20, 1, 1}), pred(Dims{20, 1, 1});
    paint(gt, {0, 0, 0, 20, 1, 1}, 1);
    paint(pred, {0, 0, 0, 10 + k, 1, 1}, 1);
    ms.push_back(match_instances(pred, gt));
  }
  const auto c = curves(ms, default_grid());
  for (std::size_t t = 0; t < 10; ++t) EXPECT_NEAR(c.ap[t], (10.0 - static_cast<double>(t)) / 10.0, 1e-12);
  EXPECT_NEAR(mean_scores(c).map, 0.55, 1e-12);
}

TEST(Curves, EmptyInputThrows) {
  try {
    curves(std::vector<MatchResult>{}, default_grid());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Report, JsonAndCsvLayout) {
  LabelVolume v(Dims::cube(4));
  paint(v, {0, 0, 0, 2, 2, 2}, 1);
  const std::vector<MatchResult> m{match_instances(v, v)};
  const auto r = make_report(m, default_grid(), CountingMode::Instance, {"vol_0000"});
  const auto j = to_json(r);
  EXPECT_EQ(j.at("mode"), "instance");
  EXPECT_EQ(j.at("grid").size(), 10u);
  EXPECT_EQ(j.at("mAJ"), 1.0);
  EXPECT_EQ(j.at("volumes")[0].at("name"), "vol_0000");
  EXPECT_EQ(j.at("volumes")[0].at("J").size(), 10u);
  const auto csv = to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "th,AP,AR,AJ");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 3), "0.5");
}

TEST(Report, CountingModeNames) {
  EXPECT_EQ(parse_counting_mode("voxel"), CountingMode::Voxel);
  EXPECT_EQ(parse_counting_mode("instance"), CountingMode::Instance);
  EXPECT_THROW(parse_counting_mode("pixel"), Error);
}
