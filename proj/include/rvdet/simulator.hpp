// SPDX-License-Identifier: Apache-2.0
//
// Synthetic lidar scenes used as a ground-truth oracle. A rotating sensor at
// the origin casts one ray per range-image pixel through the bin center and
// records the nearest hit among the placed cuboids and an optional ground
// plane. Returned points are rounded to float32 precision (the on-disk
// format) and guaranteed to lie inside their source cuboid.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvdet/category.hpp"
#include "rvdet/dense.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/rangeview.hpp"

namespace rvdet {

struct DimRange {
  double min = 1.0;
  double max = 1.0;
};

struct CategoryDims {
  DimRange length;
  DimRange width;
  DimRange height;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::uint32_t min_objects = 1;
  std::uint32_t max_objects = 12;
  std::vector<Category> categories = {kAllCategories.begin(), kAllCategories.end()};
  std::array<CategoryDims, kNumCategories> dims = {{
      {{3.8, 5.2}, {1.7, 2.1}, {1.4, 1.9}},  // vehicle
      {{0.5, 0.9}, {0.5, 0.9}, {1.5, 1.9}},  // pedestrian
      {{1.5, 1.9}, {0.5, 0.8}, {1.5, 1.9}},  // cyclist
  }};
  double radius_min = 6.0;
  double radius_max = 50.0;
  /// Minimum BEV gap between circumscribed circles of two objects.
  double placement_margin = 0.5;
  bool ground = true;
  double sensor_height = 1.8;
  double max_range = 120.0;
  RangeImageSpec image;

  /// key = value lines; '#' starts a comment. Unknown keys are errors.
  static SceneSpec parse(std::istream& in);
  static SceneSpec parse(const std::string& text);
  static SceneSpec load(const std::filesystem::path& path);
  std::string to_config() const;
  void validate() const;
};

struct Scene {
  RangeImage image;
  std::vector<GroundTruthCuboid> gts;
};

/// Ray-casts `boxes` (and the ground plane at z = -sensor_height when
/// `ground` is set). `threads` caps worker threads; output does not
/// depend on it.
Scene render(const RangeImageSpec& image, std::span<const Cuboid> boxes, bool ground,
             double sensor_height, double max_range, unsigned threads = 1);

/// Places objects by rejection sampling and renders them. Throws
/// Error(kPlacementFailed) "placement failed" after 10^4 rejected attempts.
Scene generate(const SceneSpec& spec, unsigned threads = 1);

/// Distance along a unit ray from the origin to the first hit on `box`, or
/// nullopt. Slab test in the box frame.
std::optional<double> ray_cuboid_hit(const Point3& direction, const Cuboid& box);

/// Logit magnitude used by perfect_dense; sigmoid(20) = 1 - 2e-9.
inline constexpr double kOracleLogit = 20.0;

/// Fixed point of the training targets: +kOracleLogit for the true category
/// on foreground pixels, -kOracleLogit everywhere else, exact encode() targets.
DenseOutput perfect_dense(const RangeImage& image, std::span<const GroundTruthCuboid> gts);

struct NoiseSpec {
  double center_sigma = 0.0;  // meters, on dx, dy, dz
  double size_sigma = 0.0;    // on log dims
  double yaw_sigma = 0.0;     // radians, applied to the heading angle
  double logit_sigma = 0.0;
};

/// Seeded Gaussian perturbation of a dense output; zero noise is the identity.
DenseOutput corrupt(const DenseOutput& dense, const NoiseSpec& noise, std::uint64_t seed);

}  // namespace rvdet
