// SPDX-License-Identifier: Apache-2.0
//
// Detection evaluation in two styles:
//  - AV2: true positives by 3D center distance, AP averaged over several
//    distance thresholds, plus translation/scale/orientation errors of the
//    true positives at 2 m and the composite detection score (CDS).
//  - Waymo L1: true positives by 3D IoU and only ground truth with at least
//    five interior lidar points counts.
//
// Ground truth that fails the support or range filter is "ignored": it is not
// a false negative, and detections that would match it are dropped rather
// than counted as false positives.
#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvdet/category.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/records.hpp"

namespace rvdet {

enum class EvalStyle {
  kAv2Distance,
  kWaymoIouL1,
};

struct EvalConfig {
  EvalStyle style = EvalStyle::kAv2Distance;
  std::vector<double> distance_thresholds = {0.5, 1.0, 2.0, 4.0};
  double tp_distance = 2.0;
  // Not published alongside the metric definitions; common Waymo settings.
  std::array<double, kNumCategories> iou_thresholds = {0.7, 0.5, 0.5};
  int min_interior_points = 1;
  double max_range = 150.0;
  double translation_normalizer = 2.0;
  double scale_normalizer = 1.0;
  double orientation_normalizer = std::numbers::pi;
  std::vector<Category> categories = {kAllCategories.begin(), kAllCategories.end()};

  static EvalConfig av2();
  static EvalConfig waymo();
  void validate() const;
};

enum class MatchKind {
  kCenterDistance,  // det matches gt if distance <= threshold; nearest wins
  kIou3d,           // det matches gt if IoU >= threshold; highest IoU wins
};

struct MatchCriterion {
  MatchKind kind = MatchKind::kCenterDistance;
  double threshold = 2.0;
};

struct MatchPair {
  std::size_t detection = 0;
  std::size_t gt = 0;
  double affinity = 0.0;  // distance or IoU
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> true_positives;
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
  std::vector<std::size_t> ignored_detections;
};

/// Greedy matching for one frame and one category. Detections are visited in
/// descending score (input order on ties) and claim the best unclaimed
/// non-ignored gt. `gt_ignored` may be empty (nothing ignored).
MatchResult match(std::span<const Proposal> detections, std::span<const GroundTruthCuboid> gts,
                  const MatchCriterion& criterion,
                  std::span<const std::uint8_t> gt_ignored = {});

struct RankedDetection {
  double score = 0.0;
  bool true_positive = false;
};

/// 101-point interpolated AP over pooled detections. Requires num_gt >= 1.
double average_precision(std::span<const RankedDetection> detections, std::size_t num_gt);

struct TruePositiveErrors {
  double ate = 0.0;  // meters
  double ase = 0.0;  // 1 - aligned IoU
  double aoe = 0.0;  // radians
};

struct MatchedBoxes {
  Cuboid detection;
  Cuboid gt;
};

std::optional<TruePositiveErrors> true_positive_errors(std::span<const MatchedBoxes> matches);

/// AP * mean(1 - ATE_unit, 1 - ASE_unit, 1 - AOE_unit); absent errors count
/// as the worst case (unit error 1).
double cds(double ap, const std::optional<TruePositiveErrors>& errors, const EvalConfig& config);

struct EvalFrame {
  std::string frame_id;
  std::vector<Proposal> detections;
  std::vector<GroundTruthCuboid> gts;
};

/// Groups records by frame id, in order of first appearance (ground truth first).
std::vector<EvalFrame> group_frames(std::span<const DetectionRecord> detections,
                                    std::span<const GroundTruthRecord> gts);

struct AuditMatch {
  std::string frame_id;
  std::size_t detection = 0;  // index into the frame's detection list
  std::size_t gt = 0;         // index into the frame's gt list
  double affinity = 0.0;
};

struct CategoryReport {
  Category category = Category::kVehicle;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
  double ap = 0.0;  // AV2 mean over distance thresholds, or Waymo AP_L1
  std::vector<double> ap_per_threshold;
  std::optional<TruePositiveErrors> errors;  // AV2 only
  double cds = 0.0;                          // AV2 only
  std::vector<AuditMatch> matches;           // at 2 m (AV2) or the IoU threshold
};

struct EvalReport {
  EvalStyle style = EvalStyle::kAv2Distance;
  std::vector<CategoryReport> categories;
  std::vector<Category> skipped;  // no ground truth
  double mean_ap = 0.0;
  std::optional<TruePositiveErrors> mean_errors;
  double mean_cds = 0.0;

  std::string to_json(bool include_matches = true) const;
  std::string table() const;
};

/// Throws Error(kInvalidArgument) if a frame contains a category that is not
/// in config.categories, listing the offenders.
EvalReport evaluate(std::span<const EvalFrame> frames, const EvalConfig& config);

}  // namespace rvdet
