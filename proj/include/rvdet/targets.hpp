// SPDX-License-Identifier: Apache-2.0
//
// Foreground assignment and the 8-dim regression target codec.
//
// Offsets live in the point-azimuth frame: the ego frame rotated about +z by
// the anchor's azimuth alpha = atan2(y, x), so +x points along the sensor ray.
// Headings are stored relative to alpha, which makes every target component
// invariant to rotating the whole scene about the vertical axis.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rvdet/dense.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/rangeview.hpp"

namespace rvdet {

struct RegressionTarget {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double log_l = 0.0;
  double log_w = 0.0;
  double log_h = 0.0;
  double sin_t = 0.0;
  double cos_t = 1.0;

  std::array<double, kRegressionDims> to_array() const {
    return {dx, dy, dz, log_l, log_w, log_h, sin_t, cos_t};
  }
  static RegressionTarget from_span(std::span<const double, kRegressionDims> v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
  }
};

inline constexpr int kBackground = -1;

struct Assignment {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  int gt_index = kBackground;
  Point3 anchor;

  bool foreground() const { return gt_index != kBackground; }
};

/// Each anchor goes to the containing ground truth with the smallest volume
/// (lowest index on equal volume), or to background.
std::vector<Assignment> assign(std::span<const AnchorPoint> anchors,
                               std::span<const GroundTruthCuboid> gts);

/// Index of the containing cuboid per assign(), or kBackground.
int assign_point(const Point3& anchor, std::span<const GroundTruthCuboid> gts);

/// Throws Error(kInvalidArgument) on non-positive dims or non-finite input.
RegressionTarget encode(const Point3& anchor, const Cuboid& gt);

/// Inverse of encode. (sin_t, cos_t) need not be normalized.
Cuboid decode(const Point3& anchor, const RegressionTarget& target,
              Category category = Category::kVehicle);
Cuboid decode(const Point3& anchor, std::span<const double, kRegressionDims> target,
              Category category = Category::kVehicle);

/// Dense per-pixel targets for one frame. Background and invalid pixels carry
/// zero targets and gt_index == kBackground.
struct FrameTargets {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<RegressionTarget> targets;
  std::vector<int> gt_index;
  std::vector<Point3> anchors;
  std::vector<std::uint8_t> valid;

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  bool foreground(std::size_t pixel) const { return gt_index[pixel] != kBackground; }
  std::size_t foreground_count() const;
};

FrameTargets encode_frame(const RangeImage& image, std::span<const GroundTruthCuboid> gts);

/// Channel names used when targets are stored inside an RVIMG1 container.
inline constexpr std::array<const char*, kRegressionDims> kTargetChannelNames = {
    "tgt_dx", "tgt_dy", "tgt_dz", "tgt_log_l", "tgt_log_w", "tgt_log_h", "tgt_sin", "tgt_cos"};
inline constexpr const char* kForegroundChannelName = "fg";

/// Adds (or overwrites) the tgt_* and fg channels on `image`.
void attach_targets(RangeImage& image, const FrameTargets& targets);

}  // namespace rvdet
