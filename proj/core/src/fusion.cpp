#include "cellseg/fusion.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <tuple>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "cellseg/geometry.hpp"

namespace cellseg {

using nlohmann::json;

std::string_view to_string(OverlapMeasure m) noexcept {
  return m == OverlapMeasure::IoU ? "iou" : "intersection_over_min";
}

std::string_view to_string(JoinRule r) noexcept {
  return r == JoinRule::Intersection ? "intersection" : "union";
}

OverlapMeasure parse_overlap_measure(std::string_view s) {
  if (s == "iou") return OverlapMeasure::IoU;
  if (s == "intersection_over_min") return OverlapMeasure::IntersectionOverMin;
  fail(ErrorCode::ConfigError, "unknown overlap measure '" + std::string(s) + "'");
}

JoinRule parse_join_rule(std::string_view s) {
  if (s == "intersection") return JoinRule::Intersection;
  if (s == "union") return JoinRule::Union;
  fail(ErrorCode::ConfigError, "unknown join rule '" + std::string(s) + "'");
}

void FusionConfig::validate() const {
  const std::array<std::pair<const char*, double>, 7> fields{{
      {"confidence_min", confidence_min},
      {"nms2d_iou", nms2d_iou},
      {"cluster_overlap", cluster_overlap},
      {"nms3d_iou", nms3d_iou},
      {"stack_link_overlap", stack_link_overlap},
      {"stack_valley_ratio", stack_valley_ratio},
      {"pair_axis_iou", pair_axis_iou},
  }};
  for (const auto& [name, v] : fields) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::ConfigError, std::string("fusion.") + name + " must lie in [0,1]");
    }
  }
}

json to_json(const FusionConfig& c) {
  return json{{"confidence_min", c.confidence_min},
              {"nms2d_iou", c.nms2d_iou},
              {"cluster_overlap", c.cluster_overlap},
              {"nms3d_iou", c.nms3d_iou},
              {"overlap_measure", std::string(to_string(c.overlap_measure))},
              {"join_rule", std::string(to_string(c.join_rule))},
              {"stack_slices", c.stack_slices},
              {"stack_link_overlap", c.stack_link_overlap},
              {"stack_valley_ratio", c.stack_valley_ratio},
              {"pair_axis_iou", c.pair_axis_iou}};
}

SliceStack SliceStack::from_box(const Box2D& b) noexcept {
  SliceStack s;
  s.view = b.view;
  s.slice_min = b.slice;
  s.slice_max = b.slice + 1;
  s.a_min = b.a_min; s.a_max = b.a_max;
  s.b_min = b.b_min; s.b_max = b.b_max;
  s.confidence = b.confidence;
  s.members = 1;
  return s;
}

DetectionSet filter_confidence(const DetectionSet& dets, double confidence_min) {
  DetectionSet out = dets;
  out.boxes.clear();
  std::copy_if(dets.boxes.begin(), dets.boxes.end(), std::back_inserter(out.boxes),
               [&](const Box2D& b) { return b.confidence >= confidence_min; });
  return out;
}

namespace {

bool nms2d_before(const Box2D& l, const Box2D& r) noexcept {
  if (l.confidence != r.confidence) return l.confidence > r.confidence;
  if (l.area() != r.area()) return l.area() > r.area();
  return std::tie(l.a_min, l.b_min, l.a_max, l.b_max) < std::tie(r.a_min, r.b_min, r.a_max, r.b_max);
}

bool nms3d_before(const Box3D& l, const Box3D& r) noexcept {
  if (l.score != r.score) return l.score > r.score;
  if (l.volume() != r.volume()) return l.volume() > r.volume();
  return l.coords() < r.coords();
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

// Groups box indices of `boxes` (canonically sorted) by (view, slice).
std::vector<std::pair<std::size_t, std::size_t>> slice_groups(const std::vector<Box2D>& boxes) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= boxes.size(); ++i) {
    if (i == boxes.size() || boxes[i].view != boxes[begin].view || boxes[i].slice != boxes[begin].slice) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

struct Interval {
  int lo, hi;
};

Interval interval_on(const SliceStack& s, Axis axis) noexcept {
  if (axis == normal_axis(s.view)) return {s.slice_min, s.slice_max};
  if (axis == first_axis(s.view)) return {s.a_min, s.a_max};
  return {s.b_min, s.b_max};
}

/// Overlap that also reaches `min_iou` as a 1D IoU.
bool agrees(Interval a, Interval b, double min_iou) noexcept {
  const int inter = std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
  if (inter <= 0) return false;
  const int uni = std::max(a.hi, b.hi) - std::min(a.lo, b.lo);
  return static_cast<double>(inter) >= min_iou * static_cast<double>(uni);
}

}  // namespace

DetectionSet nms_2d(const DetectionSet& dets, double iou_threshold) {
  DetectionSet sorted = dets;
  sorted.sort();
  DetectionSet out = dets;
  out.boxes.clear();
  for (const auto& [begin, end] : slice_groups(sorted.boxes)) {
    std::vector<Box2D> group(sorted.boxes.begin() + static_cast<std::ptrdiff_t>(begin),
                             sorted.boxes.begin() + static_cast<std::ptrdiff_t>(end));
    std::stable_sort(group.begin(), group.end(), nms2d_before);
    std::vector<Box2D> kept;
    for (const auto& b : group) {
      const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Box2D& k) {
        return box2d_iou(k, b) > iou_threshold;
      });
      if (!suppressed) kept.push_back(b);
    }
    out.boxes.insert(out.boxes.end(), kept.begin(), kept.end());
  }
  out.sort();
  return out;
}

namespace {

/// Splits `chain` (box indices on consecutive slices) at area valleys: a box
/// whose area is at most `valley_ratio` times the peak area on both sides
/// marks where one object ends and the next begins. The deepest valley is cut
/// first; the valley box stays with the part before it.
void split_chain(const std::vector<Box2D>& boxes, std::span<const std::size_t> chain,
                 double valley_ratio, std::vector<std::span<const std::size_t>>& out) {
  const std::size_t n = chain.size();
  if (n < 3 || valley_ratio <= 0.0) {
    out.push_back(chain);
    return;
  }
  std::vector<long long> left_peak(n), right_peak(n);
  for (std::size_t k = 0; k < n; ++k) {
    const long long a = boxes[chain[k]].area();
    left_peak[k] = k == 0 ? a : std::max(left_peak[k - 1], a);
  }
  for (std::size_t k = n; k-- > 0;) {
    const long long a = boxes[chain[k]].area();
    right_peak[k] = k + 1 == n ? a : std::max(right_peak[k + 1], a);
  }
  std::size_t cut = 0;
  double deepest = 1.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double a = static_cast<double>(boxes[chain[k]].area());
    const double depth = a / static_cast<double>(std::min(left_peak[k - 1], right_peak[k + 1]));
    if (depth <= valley_ratio && depth < deepest) {
      deepest = depth;
      cut = k;
    }
  }
  if (cut == 0) {
    out.push_back(chain);
    return;
  }
  split_chain(boxes, chain.first(cut + 1), valley_ratio, out);
  split_chain(boxes, chain.subspan(cut + 1), valley_ratio, out);
}

}  // namespace

std::vector<SliceStack> stack_slices(const DetectionSet& dets, double link_overlap,
                                     double valley_ratio) {
  DetectionSet sorted = dets;
  sorted.sort();
  const auto& boxes = sorted.boxes;
  const auto groups = slice_groups(boxes);
  constexpr auto kNone = static_cast<std::size_t>(-1);

  // One-to-one links between adjacent slices, best IoU first.
  std::vector<std::size_t> next(boxes.size(), kNone), prev(boxes.size(), kNone);
  struct Link {
    double iou;
    std::size_t i, j;
  };
  std::vector<Link> links;
  for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
    const auto [b0, e0] = groups[g];
    const auto [b1, e1] = groups[g + 1];
    if (boxes[b0].view != boxes[b1].view || boxes[b1].slice != boxes[b0].slice + 1) continue;
    links.clear();
    for (std::size_t i = b0; i < e0; ++i) {
      for (std::size_t j = b1; j < e1; ++j) {
        const double iou = box2d_iou(boxes[i], boxes[j]);
        if (iou > 0.0 && iou >= link_overlap) links.push_back({iou, i, j});
      }
    }
    std::sort(links.begin(), links.end(), [](const Link& l, const Link& r) {
      if (l.iou != r.iou) return l.iou > r.iou;
      return std::tie(l.i, l.j) < std::tie(r.i, r.j);
    });
    for (const auto& l : links) {
      if (next[l.i] != kNone || prev[l.j] != kNone) continue;
      next[l.i] = l.j;
      prev[l.j] = l.i;
    }
  }

  std::vector<SliceStack> stacks;
  std::vector<std::size_t> chain;
  std::vector<std::span<const std::size_t>> parts;
  for (std::size_t start = 0; start < boxes.size(); ++start) {
    if (prev[start] != kNone) continue;
    chain.clear();
    for (std::size_t i = start; i != kNone; i = next[i]) chain.push_back(i);
    parts.clear();
    split_chain(boxes, chain, valley_ratio, parts);
    for (const auto part : parts) {
      SliceStack s = SliceStack::from_box(boxes[part.front()]);
      double conf_sum = s.confidence;
      for (std::size_t k = 1; k < part.size(); ++k) {
        const auto& b = boxes[part[k]];
        s.slice_min = std::min(s.slice_min, b.slice);
        s.slice_max = std::max(s.slice_max, b.slice + 1);
        s.a_min = std::min(s.a_min, b.a_min); s.a_max = std::max(s.a_max, b.a_max);
        s.b_min = std::min(s.b_min, b.b_min); s.b_max = std::max(s.b_max, b.b_max);
        conf_sum += b.confidence;
      }
      s.members = static_cast<int>(part.size());
      s.confidence = std::clamp(conf_sum / s.members, 0.0, 1.0);
      stacks.push_back(s);
    }
  }
  return stacks;
}

std::vector<Box3D> pair_proposals(std::span<const SliceStack> items, JoinRule join,
                                  double axis_iou) {
  constexpr std::array<std::pair<View, View>, 3> kPairs{
      {{View::XY, View::XZ}, {View::XY, View::YZ}, {View::XZ, View::YZ}}};

  std::array<std::vector<std::size_t>, 3> by_view;
  for (std::size_t i = 0; i < items.size(); ++i) by_view[static_cast<int>(items[i].view)].push_back(i);

  std::vector<Box3D> proposals;
  std::vector<std::size_t> stamp(items.size(), static_cast<std::size_t>(-1));
  std::vector<std::size_t> candidates;

  for (const auto& [v1, v2] : kPairs) {
    const Axis n1 = normal_axis(v1);
    const Axis n2 = normal_axis(v2);
    const auto shared = static_cast<Axis>(3 - static_cast<int>(n1) - static_cast<int>(n2));
    const auto& first = by_view[static_cast<int>(v1)];
    const auto& second = by_view[static_cast<int>(v2)];
    if (first.empty() || second.empty()) continue;

    // Bucket the second view's items by every normal coordinate they cover.
    int lo = 1 << 30, hi = -(1 << 30);
    for (const auto j : second) {
      lo = std::min(lo, items[j].slice_min);
      hi = std::max(hi, items[j].slice_max);
    }
    std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(hi - lo));
    for (const auto j : second) {
      for (int c = items[j].slice_min; c < items[j].slice_max; ++c) {
        buckets[static_cast<std::size_t>(c - lo)].push_back(j);
      }
    }

    for (const auto i : first) {
      const SliceStack& s1 = items[i];
      const Interval on_n2 = interval_on(s1, n2);
      candidates.clear();
      for (int c = std::max(on_n2.lo, lo); c < std::min(on_n2.hi, hi); ++c) {
        for (const auto j : buckets[static_cast<std::size_t>(c - lo)]) {
          if (stamp[j] != i) {
            stamp[j] = i;
            candidates.push_back(j);
          }
        }
      }
      std::sort(candidates.begin(), candidates.end());
      for (const auto j : candidates) {
        const SliceStack& s2 = items[j];
        const Interval s_1 = interval_on(s1, shared);
        const Interval s_2 = interval_on(s2, shared);
        if (!agrees(s_1, s_2, axis_iou)) continue;
        if (!agrees(interval_on(s2, n1), interval_on(s1, n1), axis_iou)) continue;
        if (axis_iou > 0.0 && !agrees(on_n2, interval_on(s2, n2), axis_iou)) continue;
        Box3D p;
        if (join == JoinRule::Intersection) {
          p.set(shared, std::max(s_1.lo, s_2.lo), std::min(s_1.hi, s_2.hi));
        } else {
          p.set(shared, std::min(s_1.lo, s_2.lo), std::max(s_1.hi, s_2.hi));
        }
        p.set(n2, on_n2.lo, on_n2.hi);
        const Interval on_n1 = interval_on(s2, n1);
        p.set(n1, on_n1.lo, on_n1.hi);
        p.score = std::min(s1.confidence, s2.confidence);
        proposals.push_back(p);
      }
    }
  }
  return proposals;
}

std::vector<Box3D> pair_proposals(const DetectionSet& dets, JoinRule join) {
  DetectionSet sorted = dets;
  sorted.sort();
  std::vector<SliceStack> items;
  items.reserve(sorted.boxes.size());
  for (const auto& b : sorted.boxes) items.push_back(SliceStack::from_box(b));
  return pair_proposals(items, join);
}

double overlap(const Box3D& a, const Box3D& b, OverlapMeasure measure) noexcept {
  return measure == OverlapMeasure::IoU ? box3d_iou(a, b) : box3d_intersection_over_min(a, b);
}

std::vector<ProposalCluster> cluster_proposals(std::span<const Box3D> proposals,
                                               double cluster_overlap, OverlapMeasure measure) {
  // Identical geometries always share a cluster; deduplicate them first.
  std::map<std::array<int, 6>, std::size_t> unique_of;
  std::vector<Box3D> unique;
  std::vector<std::size_t> member_unique(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto key = proposals[i].coords();
    auto [it, inserted] = unique_of.emplace(key, unique.size());
    if (inserted) unique.push_back(proposals[i]);
    member_unique[i] = it->second;
  }

  UnionFind uf(unique.size());
  std::vector<std::size_t> order(unique.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::tie(unique[l].x_min, l) < std::tie(unique[r].x_min, r);
  });
  for (std::size_t p = 0; p < order.size(); ++p) {
    const Box3D& a = unique[order[p]];
    for (std::size_t q = p + 1; q < order.size() && unique[order[q]].x_min < a.x_max; ++q) {
      if (uf.find(order[p]) == uf.find(order[q])) continue;
      if (overlap(a, unique[order[q]], measure) > cluster_overlap) uf.unite(order[p], order[q]);
    }
  }

  std::vector<ProposalCluster> clusters;
  std::vector<std::size_t> slot(unique.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const std::size_t root = uf.find(member_unique[i]);
    if (slot[root] == static_cast<std::size_t>(-1)) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[root]].members.push_back(proposals[i]);
  }
  int max_support = 0;
  for (auto& c : clusters) {
    c.support = static_cast<int>(c.members.size());
    max_support = std::max(max_support, c.support);
  }
  for (auto& c : clusters) c.representative = median_box(c, max_support);
  return clusters;
}

Box3D median_box(std::span<const Box3D> members, int max_support) {
  if (members.empty()) fail(ErrorCode::EmptyCluster, "cannot take the median of an empty cluster");
  std::array<int, 6> med{};
  std::vector<int> values(members.size());
  for (std::size_t c = 0; c < 6; ++c) {
    for (std::size_t i = 0; i < members.size(); ++i) values[i] = members[i].coords()[c];
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    med[c] = *mid;
  }
  const double support = static_cast<double>(members.size());
  const double denom = static_cast<double>(std::max(max_support, 1));
  return Box3D::from_coords(med, std::clamp(support / denom, 1e-12, 1.0));
}

Box3D median_box(const ProposalCluster& cluster, int max_support) {
  return median_box(std::span<const Box3D>(cluster.members), max_support);
}

std::vector<Box3D> nms_3d(std::span<const Box3D> boxes, double iou_threshold) {
  std::vector<Box3D> sorted(boxes.begin(), boxes.end());
  std::stable_sort(sorted.begin(), sorted.end(), nms3d_before);
  std::vector<Box3D> kept;
  for (const auto& b : sorted) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Box3D& k) {
      return box3d_iou(k, b) > iou_threshold;
    });
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

std::vector<Box3D> fuse(const DetectionSet& dets, const FusionConfig& config, FuseStats* stats) {
  config.validate();
  FuseStats local;
  local.input = dets.size();

  DetectionSet sorted = dets;
  sorted.sort();
  const DetectionSet confident = filter_confidence(sorted, config.confidence_min);
  local.after_confidence = confident.size();
  const DetectionSet suppressed = nms_2d(confident, config.nms2d_iou);
  local.after_nms2d = suppressed.size();

  std::vector<SliceStack> items;
  if (config.stack_slices) {
    items = stack_slices(suppressed, config.stack_link_overlap, config.stack_valley_ratio);
  } else {
    for (const auto& b : suppressed.boxes) items.push_back(SliceStack::from_box(b));
  }
  local.stacks = items.size();

  const auto proposals =
      pair_proposals(items, config.join_rule, config.stack_slices ? config.pair_axis_iou : 0.0);
  local.proposals = proposals.size();
  const auto clusters = cluster_proposals(proposals, config.cluster_overlap, config.overlap_measure);
  local.clusters = clusters.size();

  std::vector<Box3D> representatives;
  representatives.reserve(clusters.size());
  for (const auto& c : clusters) representatives.push_back(c.representative);
  auto out = nms_3d(representatives, config.nms3d_iou);
  local.output = out.size();
  if (stats) *stats = local;
  return out;
}

json boxes_to_json(std::span<const Box3D> boxes) {
  json arr = json::array();
  for (const auto& b : boxes) {
    json e{{"min", {b.x_min, b.y_min, b.z_min}},
           {"max", {b.x_max, b.y_max, b.z_max}},
           {"score", b.score}};
    if (b.label != 0) e["label"] = b.label;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<Box3D> boxes_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "3D boxes file must hold a JSON array");
  std::vector<Box3D> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    const std::string where = "box " + std::to_string(k);
    if (!e.is_object() || !e.contains("min") || !e.contains("max") || !e.contains("score")) {
      fail(ErrorCode::ParseError, where + ": expected {\"min\",\"max\",\"score\"}");
    }
    const auto& mn = e["min"];
    const auto& mx = e["max"];
    if (!mn.is_array() || mn.size() != 3 || !mx.is_array() || mx.size() != 3) {
      fail(ErrorCode::ParseError, where + ": min/max must be [x,y,z]");
    }
    std::array<int, 6> c{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!mn[i].is_number_integer() || !mx[i].is_number_integer()) {
        fail(ErrorCode::ParseError, where + ": coordinates must be integers");
      }
      c[i] = mn[i].get<int>();
      c[i + 3] = mx[i].get<int>();
    }
    if (!e["score"].is_number()) fail(ErrorCode::ParseError, where + ": score must be a number");
    Box3D b = Box3D::from_coords(c, e["score"].get<double>());
    if (e.contains("label")) {
      if (!e["label"].is_number_unsigned()) fail(ErrorCode::ParseError, where + ": label must be a non-negative integer");
      b.label = e["label"].get<std::uint32_t>();
    }
    if (!is_well_formed(b)) fail(ErrorCode::InvariantViolation, where + ": empty box or score outside [0,1]");
    out.push_back(b);
  }
  return out;
}

void save_boxes(std::span<const Box3D> boxes, const std::filesystem::path& path) {
  write_json_atomic(path, boxes_to_json(boxes));
}

std::vector<Box3D> load_boxes(const std::filesystem::path& path) {
  return boxes_from_json(read_json(path));
}

}  // namespace cellseg
