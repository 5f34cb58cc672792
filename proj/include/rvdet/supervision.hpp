// SPDX-License-Identifier: Apache-2.0
//
// Dynamic classification targets: each foreground pixel's target quality q
// is recomputed from the proposal currently decoded at that pixel.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rvdet/dense.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/targets.hpp"

namespace rvdet {

enum class SupervisionMode {
  kCenterness3d,
  kIouBev,
};

struct SupervisionConfig {
  SupervisionMode mode = SupervisionMode::kCenterness3d;
  double sigma = 0.75;  // meters

  void validate() const;
};

/// exp(-|d.center - g.center|^2 / sigma^2). Note sigma^2, not 2 sigma^2.
double centerness_3d(const Cuboid& proposal, const Cuboid& gt, double sigma);

double dynamic_iou_bev(const Cuboid& proposal, const Cuboid& gt);

/// Per-pixel quality q and target category (kBackground where q = 0 by
/// construction). Values are plain numbers: nothing here is differentiated.
struct ClassificationTargets {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> quality;
  std::vector<int> category;
  std::vector<std::uint8_t> valid;

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  std::size_t foreground_count() const;
};

/// Throws Error(kShapeMismatch) if dense and frame targets disagree.
ClassificationTargets compute_targets(const DenseOutput& dense, const FrameTargets& frame,
                                      std::span<const GroundTruthCuboid> gts,
                                      const SupervisionConfig& config);

}  // namespace rvdet
