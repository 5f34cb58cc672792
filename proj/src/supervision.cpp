// SPDX-License-Identifier: Apache-2.0
#include "rvdet/supervision.hpp"

#include <algorithm>
#include <cmath>

#include "rvdet/error.hpp"

namespace rvdet {

void SupervisionConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "centerness sigma must be positive");
  }
}

double centerness_3d(const Cuboid& proposal, const Cuboid& gt, double sigma) {
  const Point3 d = proposal.center - gt.center;
  const double squared = d.x * d.x + d.y * d.y + d.z * d.z;
  return std::exp(-squared / (sigma * sigma));
}

double dynamic_iou_bev(const Cuboid& proposal, const Cuboid& gt) { return iou_bev(proposal, gt); }

std::size_t ClassificationTargets::foreground_count() const {
  return static_cast<std::size_t>(
      std::count_if(category.begin(), category.end(), [](int c) { return c != kBackground; }));
}

ClassificationTargets compute_targets(const DenseOutput& dense, const FrameTargets& frame,
                                      std::span<const GroundTruthCuboid> gts,
                                      const SupervisionConfig& config) {
  config.validate();
  dense.check_shape(frame.height, frame.width);
  ClassificationTargets out;
  out.height = frame.height;
  out.width = frame.width;
  out.quality.assign(frame.pixel_count(), 0.0);
  out.category.assign(frame.pixel_count(), kBackground);
  out.valid = frame.valid;
  for (std::size_t idx = 0; idx < frame.pixel_count(); ++idx) {
    const int g = frame.gt_index[idx];
    if (g == kBackground) continue;
    if (static_cast<std::size_t>(g) >= gts.size()) {
      throw Error(ErrorCode::kShapeMismatch, "assignment refers to a missing ground truth");
    }
    const Cuboid& gt = gts[static_cast<std::size_t>(g)].box;
    const Cuboid proposal = decode(frame.anchors[idx], dense.regression_at(idx), gt.category);
    out.quality[idx] = config.mode == SupervisionMode::kCenterness3d
                           ? centerness_3d(proposal, gt, config.sigma)
                           : dynamic_iou_bev(proposal, gt);
    out.category[idx] = static_cast<int>(index_of(gt.category));
  }
  return out;
}

}  // namespace rvdet
