// SPDX-License-Identifier: Apache-2.0
#include "rvdet/targets.hpp"

#include <algorithm>
#include <cmath>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

inline double anchor_azimuth(const Point3& anchor) { return std::atan2(anchor.y, anchor.x); }

}  // namespace

int assign_point(const Point3& anchor, std::span<const GroundTruthCuboid> gts) {
  int best = kBackground;
  double best_volume = 0.0;
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!contains_point(gts[j].box, anchor)) continue;
    const double volume = gts[j].box.volume();
    if (best == kBackground || volume < best_volume) {
      best = static_cast<int>(j);
      best_volume = volume;
    }
  }
  return best;
}

std::vector<Assignment> assign(std::span<const AnchorPoint> anchors,
                               std::span<const GroundTruthCuboid> gts) {
  std::vector<Assignment> out;
  out.reserve(anchors.size());
  for (const AnchorPoint& a : anchors) {
    out.push_back({a.row, a.col, assign_point(a.position, gts), a.position});
  }
  return out;
}

RegressionTarget encode(const Point3& anchor, const Cuboid& gt) {
  if (!anchor.finite()) throw Error(ErrorCode::kInvalidArgument, "non-finite anchor");
  validate(gt);
  const double alpha = anchor_azimuth(anchor);
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const Point3 delta = gt.center - anchor;
  const double heading = wrap_angle(gt.yaw - alpha);
  RegressionTarget t;
  t.dx = c * delta.x + s * delta.y;
  t.dy = -s * delta.x + c * delta.y;
  t.dz = delta.z;
  t.log_l = std::log(gt.length);
  t.log_w = std::log(gt.width);
  t.log_h = std::log(gt.height);
  t.sin_t = std::sin(heading);
  t.cos_t = std::cos(heading);
  return t;
}

Cuboid decode(const Point3& anchor, const RegressionTarget& target, Category category) {
  const double alpha = anchor_azimuth(anchor);
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Cuboid box;
  box.center = {anchor.x + c * target.dx - s * target.dy,
                anchor.y + s * target.dx + c * target.dy, anchor.z + target.dz};
  box.length = std::exp(target.log_l);
  box.width = std::exp(target.log_w);
  box.height = std::exp(target.log_h);
  box.yaw = wrap_angle(std::atan2(target.sin_t, target.cos_t) + alpha);
  box.category = category;
  return box;
}

Cuboid decode(const Point3& anchor, std::span<const double, kRegressionDims> target,
              Category category) {
  return decode(anchor, RegressionTarget::from_span(target), category);
}

std::size_t FrameTargets::foreground_count() const {
  return static_cast<std::size_t>(
      std::count_if(gt_index.begin(), gt_index.end(), [](int g) { return g != kBackground; }));
}

FrameTargets encode_frame(const RangeImage& image, std::span<const GroundTruthCuboid> gts) {
  for (const GroundTruthCuboid& g : gts) validate(g.box);
  FrameTargets out;
  out.height = image.height();
  out.width = image.width();
  const std::size_t n = image.pixel_count();
  out.targets.assign(n, RegressionTarget{0, 0, 0, 0, 0, 0, 0, 0});
  out.gt_index.assign(n, kBackground);
  out.anchors.assign(n, Point3{});
  out.valid.assign(n, 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!image.valid(idx)) continue;
    const Point3 anchor{image.at(kXChannel, idx), image.at(kYChannel, idx),
                        image.at(kZChannel, idx)};
    out.valid[idx] = 1;
    out.anchors[idx] = anchor;
    const int g = assign_point(anchor, gts);
    out.gt_index[idx] = g;
    if (g != kBackground) out.targets[idx] = encode(anchor, gts[static_cast<std::size_t>(g)].box);
  }
  return out;
}

void attach_targets(RangeImage& image, const FrameTargets& targets) {
  if (targets.height != image.height() || targets.width != image.width()) {
    throw Error(ErrorCode::kShapeMismatch, "frame targets do not match the range image shape");
  }
  for (std::size_t k = 0; k < kRegressionDims; ++k) {
    const std::size_t ch = image.add_channel(kTargetChannelNames[k], 0.0);
    for (std::size_t idx = 0; idx < targets.pixel_count(); ++idx) {
      image.at(ch, idx) = targets.targets[idx].to_array()[k];
    }
  }
  const std::size_t fg = image.add_channel(kForegroundChannelName, 0.0);
  for (std::size_t idx = 0; idx < targets.pixel_count(); ++idx) {
    image.at(fg, idx) = targets.foreground(idx) ? 1.0 : 0.0;
  }
}

}  // namespace rvdet
