// SPDX-License-Identifier: Apache-2.0
#include "rvdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kRecallPoints = 101;

std::vector<std::size_t> score_order(std::span<const Proposal> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  return order;
}

// Affinity where larger is better, or nullopt if the criterion fails.
std::optional<double> affinity(const Cuboid& det, const Cuboid& gt, const MatchCriterion& c) {
  if (c.kind == MatchKind::kCenterDistance) {
    const double d = center_distance(det, gt);
    if (d <= c.threshold) return -d;
    return std::nullopt;
  }
  const double iou = iou_3d(det, gt);
  if (iou >= c.threshold) return iou;
  return std::nullopt;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool in_range(const Cuboid& box, double max_range) { return box.center.norm() <= max_range; }

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

EvalConfig EvalConfig::av2() { return {}; }

EvalConfig EvalConfig::waymo() {
  EvalConfig cfg;
  cfg.style = EvalStyle::kWaymoIouL1;
  cfg.min_interior_points = 5;
  cfg.max_range = 80.0;
  return cfg;
}

void EvalConfig::validate() const {
  if (style == EvalStyle::kAv2Distance) {
    if (distance_thresholds.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "eval: no distance thresholds");
    }
    for (std::size_t i = 0; i < distance_thresholds.size(); ++i) {
      if (!(distance_thresholds[i] > 0.0) ||
          (i > 0 && !(distance_thresholds[i] > distance_thresholds[i - 1]))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "eval: distance thresholds must be positive and increasing");
      }
    }
    if (!(tp_distance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eval: bad tp distance");
    if (!(translation_normalizer > 0.0) || !(scale_normalizer > 0.0) ||
        !(orientation_normalizer > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "eval: error normalizers must be positive");
    }
  }
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "eval: IoU thresholds must lie in (0, 1]");
    }
  }
  if (min_interior_points < 0) throw Error(ErrorCode::kInvalidArgument, "eval: bad min points");
  if (!(max_range > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eval: bad max range");
  if (categories.empty()) throw Error(ErrorCode::kInvalidArgument, "eval: no categories");
}

MatchResult match(std::span<const Proposal> detections, std::span<const GroundTruthCuboid> gts,
                  const MatchCriterion& criterion, std::span<const std::uint8_t> gt_ignored) {
  if (!gt_ignored.empty() && gt_ignored.size() != gts.size()) {
    throw Error(ErrorCode::kShapeMismatch, "match: ignore mask does not match ground truth");
  }
  auto ignored = [&](std::size_t g) { return !gt_ignored.empty() && gt_ignored[g] != 0; };

  MatchResult out;
  std::vector<std::uint8_t> claimed(gts.size(), 0);
  for (std::size_t d : score_order(detections)) {
    std::optional<std::size_t> best;
    double best_affinity = 0.0;
    bool hits_ignored = false;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const auto a = affinity(detections[d].box, gts[g].box, criterion);
      if (!a) continue;
      if (ignored(g)) {
        hits_ignored = true;
        continue;
      }
      if (claimed[g]) continue;
      if (!best || *a > best_affinity) {
        best = g;
        best_affinity = *a;
      }
    }
    if (best) {
      claimed[*best] = 1;
      const double reported = criterion.kind == MatchKind::kCenterDistance ? -best_affinity
                                                                           : best_affinity;
      out.true_positives.push_back({d, *best, reported});
    } else if (hits_ignored) {
      out.ignored_detections.push_back(d);
    } else {
      out.false_positives.push_back(d);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!claimed[g] && !ignored(g)) out.false_negatives.push_back(g);
  }
  return out;
}

double average_precision(std::span<const RankedDetection> detections, std::size_t num_gt) {
  if (num_gt == 0) throw Error(ErrorCode::kInvalidArgument, "average precision needs >= 1 gt");
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (detections[order[rank]].true_positive) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  // Precision envelope: best precision at any recall at or beyond this rank.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double total = 0.0;
  std::size_t rank = 0;
  for (int i = 0; i < kRecallPoints; ++i) {
    const double target = static_cast<double>(i) / (kRecallPoints - 1);
    while (rank < recall.size() && recall[rank] < target) ++rank;
    if (rank < recall.size()) total += precision[rank];
  }
  return total / kRecallPoints;
}

std::optional<TruePositiveErrors> true_positive_errors(std::span<const MatchedBoxes> matches) {
  if (matches.empty()) return std::nullopt;
  TruePositiveErrors e;
  for (const MatchedBoxes& m : matches) {
    e.ate += center_distance(m.detection, m.gt);
    e.ase += 1.0 - iou_3d_aligned(m.detection, m.gt);
    e.aoe += yaw_difference(m.detection.yaw, m.gt.yaw);
  }
  const double n = static_cast<double>(matches.size());
  e.ate /= n;
  e.ase /= n;
  e.aoe /= n;
  return e;
}

double cds(double ap, const std::optional<TruePositiveErrors>& errors, const EvalConfig& config) {
  double ate_unit = 1.0;
  double ase_unit = 1.0;
  double aoe_unit = 1.0;
  if (errors) {
    ate_unit = std::clamp(errors->ate / config.translation_normalizer, 0.0, 1.0);
    ase_unit = std::clamp(errors->ase / config.scale_normalizer, 0.0, 1.0);
    aoe_unit = std::clamp(errors->aoe / config.orientation_normalizer, 0.0, 1.0);
  }
  return ap * ((1.0 - ate_unit) + (1.0 - ase_unit) + (1.0 - aoe_unit)) / 3.0;
}

std::vector<EvalFrame> group_frames(std::span<const DetectionRecord> detections,
                                    std::span<const GroundTruthRecord> gts) {
  std::vector<EvalFrame> frames;
  std::map<std::string, std::size_t> index;
  auto frame_for = [&](const std::string& id) -> EvalFrame& {
    auto [it, inserted] = index.try_emplace(id, frames.size());
    if (inserted) frames.push_back({id, {}, {}});
    return frames[it->second];
  };
  for (const auto& g : gts) frame_for(g.frame_id).gts.push_back(g.gt);
  for (const auto& d : detections) frame_for(d.frame_id).detections.push_back(d.detection);
  return frames;
}

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalConfig& config) {
  config.validate();
  {
    std::set<std::string> offenders;
    auto check = [&](Category c) {
      if (std::find(config.categories.begin(), config.categories.end(), c) ==
          config.categories.end()) {
        offenders.emplace(category_name(c));
      }
    };
    for (const EvalFrame& f : frames) {
      for (const auto& d : f.detections) check(d.box.category);
      for (const auto& g : f.gts) check(g.box.category);
    }
    if (!offenders.empty()) {
      std::string names;
      for (const auto& n : offenders) names += (names.empty() ? "" : ", ") + n;
      throw Error(ErrorCode::kInvalidArgument, "categories not in evaluation config: " + names);
    }
  }

  const bool av2 = config.style == EvalStyle::kAv2Distance;
  EvalReport report;
  report.style = config.style;

  for (Category category : config.categories) {
    // Per-frame category slices, keeping indices into the frame lists.
    struct Slice {
      std::vector<Proposal> dets;
      std::vector<std::size_t> det_index;
      std::vector<GroundTruthCuboid> gts;
      std::vector<std::size_t> gt_index;
      std::vector<std::uint8_t> ignored;
    };
    std::vector<Slice> slices(frames.size());
    std::size_t num_gt = 0;
    std::size_t num_det = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      Slice& s = slices[f];
      for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
        const Proposal& d = frames[f].detections[i];
        if (d.box.category != category || !in_range(d.box, config.max_range)) continue;
        s.dets.push_back(d);
        s.det_index.push_back(i);
      }
      for (std::size_t i = 0; i < frames[f].gts.size(); ++i) {
        const GroundTruthCuboid& g = frames[f].gts[i];
        if (g.box.category != category) continue;
        const bool ignore = g.num_interior_points < config.min_interior_points ||
                            !in_range(g.box, config.max_range);
        s.gts.push_back(g);
        s.gt_index.push_back(i);
        s.ignored.push_back(ignore ? 1 : 0);
        if (!ignore) ++num_gt;
      }
      num_det += s.dets.size();
    }
    if (num_gt == 0) {
      report.skipped.push_back(category);
      continue;
    }

    CategoryReport cat;
    cat.category = category;
    cat.num_gt = num_gt;
    cat.num_detections = num_det;

    std::vector<MatchCriterion> criteria;
    if (av2) {
      for (double t : config.distance_thresholds) {
        criteria.push_back({MatchKind::kCenterDistance, t});
      }
    } else {
      criteria.push_back({MatchKind::kIou3d, config.iou_thresholds[index_of(category)]});
    }

    for (const MatchCriterion& criterion : criteria) {
      std::vector<RankedDetection> ranked;
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const Slice& s = slices[f];
        const MatchResult m = match(s.dets, s.gts, criterion, s.ignored);
        std::vector<std::int8_t> outcome(s.dets.size(), -1);
        for (const auto& tp : m.true_positives) outcome[tp.detection] = 1;
        for (std::size_t fp : m.false_positives) outcome[fp] = 0;
        for (std::size_t d = 0; d < s.dets.size(); ++d) {
          if (outcome[d] >= 0) ranked.push_back({s.dets[d].confidence, outcome[d] == 1});
        }
        if (!av2) {
          for (const auto& tp : m.true_positives) {
            cat.matches.push_back(
                {frames[f].frame_id, s.det_index[tp.detection], s.gt_index[tp.gt], tp.affinity});
          }
        }
      }
      cat.ap_per_threshold.push_back(average_precision(ranked, num_gt));
    }
    cat.ap = mean(cat.ap_per_threshold);

    if (av2) {
      std::vector<MatchedBoxes> pairs;
      const MatchCriterion tp_criterion{MatchKind::kCenterDistance, config.tp_distance};
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const Slice& s = slices[f];
        const MatchResult m = match(s.dets, s.gts, tp_criterion, s.ignored);
        for (const auto& tp : m.true_positives) {
          pairs.push_back({s.dets[tp.detection].box, s.gts[tp.gt].box});
          cat.matches.push_back(
              {frames[f].frame_id, s.det_index[tp.detection], s.gt_index[tp.gt], tp.affinity});
        }
      }
      cat.errors = true_positive_errors(pairs);
      cat.cds = cds(cat.ap, cat.errors, config);
    }
    report.categories.push_back(std::move(cat));
  }

  if (!report.categories.empty()) {
    std::vector<double> aps, cdss, ates, ases, aoes;
    for (const auto& c : report.categories) {
      aps.push_back(c.ap);
      cdss.push_back(c.cds);
      if (c.errors) {
        ates.push_back(c.errors->ate);
        ases.push_back(c.errors->ase);
        aoes.push_back(c.errors->aoe);
      }
    }
    report.mean_ap = mean(aps);
    report.mean_cds = mean(cdss);
    if (!ates.empty()) report.mean_errors = TruePositiveErrors{mean(ates), mean(ases), mean(aoes)};
  }
  return report;
}

std::string EvalReport::to_json(bool include_matches) const {
  const bool av2 = style == EvalStyle::kAv2Distance;
  Json root;
  root["style"] = av2 ? "av2" : "waymo";
  Json cats = Json::array();
  for (const CategoryReport& c : categories) {
    Json j;
    j["category"] = std::string(category_name(c.category));
    j["num_gt"] = c.num_gt;
    j["num_detections"] = c.num_detections;
    if (av2) {
      j["ap"] = c.ap;
      j["ap_per_threshold"] = c.ap_per_threshold;
      j["ate"] = optional_number(c.errors ? std::optional(c.errors->ate) : std::nullopt);
      j["ase"] = optional_number(c.errors ? std::optional(c.errors->ase) : std::nullopt);
      j["aoe"] = optional_number(c.errors ? std::optional(c.errors->aoe) : std::nullopt);
      j["cds"] = c.cds;
    } else {
      j["ap_l1"] = c.ap;
    }
    if (include_matches) {
      Json ms = Json::array();
      for (const AuditMatch& m : c.matches) {
        ms.push_back({{"frame_id", m.frame_id},
                      {"detection", m.detection},
                      {"gt", m.gt},
                      {av2 ? "distance" : "iou", m.affinity}});
      }
      j["matches"] = std::move(ms);
    }
    cats.push_back(std::move(j));
  }
  root["categories"] = std::move(cats);
  Json skipped = Json::array();
  for (Category c : this->skipped) skipped.push_back(std::string(category_name(c)));
  root["skipped"] = std::move(skipped);
  if (av2) {
    root["mean_ap"] = mean_ap;
    root["mean_ate"] = optional_number(mean_errors ? std::optional(mean_errors->ate) : std::nullopt);
    root["mean_ase"] = optional_number(mean_errors ? std::optional(mean_errors->ase) : std::nullopt);
    root["mean_aoe"] = optional_number(mean_errors ? std::optional(mean_errors->aoe) : std::nullopt);
    root["mean_cds"] = mean_cds;
  } else {
    root["mean_ap_l1"] = mean_ap;
  }
  return root.dump(2);
}

std::string EvalReport::table() const {
  const bool av2 = style == EvalStyle::kAv2Distance;
  std::ostringstream out;
  char line[160];
  auto fmt = [](const std::optional<TruePositiveErrors>& e, double TruePositiveErrors::*field) {
    char buf[16];
    if (e) {
      std::snprintf(buf, sizeof(buf), "%7.3f", (*e).*field);
    } else {
      std::snprintf(buf, sizeof(buf), "%7s", "-");
    }
    return std::string(buf);
  };
  if (av2) {
    std::snprintf(line, sizeof(line), "%-12s %6s %6s %7s %7s %7s %7s %7s\n", "category", "gt",
                  "det", "AP", "ATE", "ASE", "AOE", "CDS");
    out << line;
    for (const auto& c : categories) {
      std::snprintf(line, sizeof(line), "%-12s %6zu %6zu %7.3f %s %s %s %7.3f\n",
                    std::string(category_name(c.category)).c_str(), c.num_gt, c.num_detections,
                    c.ap, fmt(c.errors, &TruePositiveErrors::ate).c_str(),
                    fmt(c.errors, &TruePositiveErrors::ase).c_str(),
                    fmt(c.errors, &TruePositiveErrors::aoe).c_str(), c.cds);
      out << line;
    }
    std::snprintf(line, sizeof(line), "%-12s %6s %6s %7.3f %s %s %s %7.3f\n", "mean", "", "",
                  mean_ap, fmt(mean_errors, &TruePositiveErrors::ate).c_str(),
                  fmt(mean_errors, &TruePositiveErrors::ase).c_str(),
                  fmt(mean_errors, &TruePositiveErrors::aoe).c_str(), mean_cds);
    out << line;
  } else {
    std::snprintf(line, sizeof(line), "%-12s %6s %6s %7s\n", "category", "gt", "det", "AP_L1");
    out << line;
    for (const auto& c : categories) {
      std::snprintf(line, sizeof(line), "%-12s %6zu %6zu %7.3f\n",
                    std::string(category_name(c.category)).c_str(), c.num_gt, c.num_detections,
                    c.ap);
      out << line;
    }
    std::snprintf(line, sizeof(line), "%-12s %6s %6s %7.3f\n", "mean", "", "", mean_ap);
    out << line;
  }
  for (Category c : skipped) out << "skipped (no ground truth): " << category_name(c) << '\n';
  return out.str();
}

}  // namespace rvdet
