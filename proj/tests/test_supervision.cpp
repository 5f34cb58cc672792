// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rvdet/error.hpp"
#include "rvdet/supervision.hpp"

namespace rvdet {
namespace {

using oracle::uniform;

Cuboid at(double x, double y, double z, double l = 4, double w = 2, double h = 1.5) {
  Cuboid c;
  c.center = {x, y, z};
  c.length = l;
  c.width = w;
  c.height = h;
  return c;
}

TEST(Centerness, ClosedFormValues) {
  const Cuboid g = at(10, 0, 0);
  EXPECT_EQ(centerness_3d(g, g, 0.75), 1.0);
  EXPECT_NEAR(centerness_3d(at(10.75, 0, 0), g, 0.75), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(centerness_3d(at(10, 0, 1.5), g, 0.75), std::exp(-4.0), 1e-12);
}

TEST(Centerness, IgnoresSizeAndHeading) {
  Cuboid p = at(10.3, -0.2, 0.1, 1, 1, 1);
  p.yaw = 2.0;
  EXPECT_NEAR(centerness_3d(p, at(10, 0, 0), 0.75), std::exp(-(0.09 + 0.04 + 0.01) / 0.5625),
              1e-12);
}

TEST(Centerness, InvariantUnderRigidMotionAndMonotone) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 500; ++i) {
    const Cuboid g = oracle::random_cuboid(rng);
    Cuboid p = oracle::random_cuboid(rng);
    const double q = centerness_3d(p, g, 0.75);
    const double beta = uniform(rng, -3, 3);
    const Point3 t{uniform(rng, -9, 9), uniform(rng, -9, 9), uniform(rng, -1, 1)};
    auto move = [&](Cuboid c) {
      const Point3 o = c.center;
      c.center = {std::cos(beta) * o.x - std::sin(beta) * o.y + t.x,
                  std::sin(beta) * o.x + std::cos(beta) * o.y + t.y, o.z + t.z};
      c.yaw = wrap_angle(c.yaw + beta);
      return c;
    };
    EXPECT_NEAR(centerness_3d(move(p), move(g), 0.75), q, 1e-12);
    // Pulling the proposal toward the gt never lowers quality.
    Cuboid nearer = p;
    nearer.center = g.center + 0.5 * (p.center - g.center);
    EXPECT_GE(centerness_3d(nearer, g, 0.75), q);
  }
}

TEST(DynamicIou, MatchesBevIou) {
  EXPECT_NEAR(dynamic_iou_bev(at(1, 0, 0, 2, 2), at(0, 0, 0, 2, 2)), 1.0 / 3.0, 1e-12);
}

TEST(SupervisionConfig, Validation) {
  SupervisionConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.sigma = NAN;
  EXPECT_THROW(cfg.validate(), Error);
}

struct Scene {
  RangeImage image{RangeImageSpec{}};
  std::vector<GroundTruthCuboid> gts;
  FrameTargets frame;
};

Scene make_scene() {
  Scene s;
  GroundTruthCuboid a;
  a.box = at(10, 0, 0);
  GroundTruthCuboid b;
  b.box = at(0, 15, 0, 0.8, 0.8, 1.8);
  b.box.category = Category::kPedestrian;
  s.gts = {a, b};
  std::vector<LidarPoint> cloud;
  for (double dy = -0.8; dy <= 0.8; dy += 0.1) cloud.push_back({{9.5, dy, 0.1}, 0.5, 0});
  for (double dx = -0.3; dx <= 0.3; dx += 0.05) cloud.push_back({{dx, 14.8, 0.2}, 0.5, 0});
  cloud.push_back({{30, -20, 0}, 0.5, 0});
  s.image = project(cloud, RangeImageSpec{});
  s.frame = encode_frame(s.image, s.gts);
  return s;
}

DenseOutput perfect(const Scene& s) {
  DenseOutput d(s.frame.height, s.frame.width);
  for (std::size_t idx = 0; idx < s.frame.pixel_count(); ++idx) {
    const auto t = s.frame.targets[idx].to_array();
    std::copy(t.begin(), t.end(), d.regression_at(idx).begin());
  }
  return d;
}

TEST(ComputeTargets, PerfectRegressionGivesUnitQuality) {
  const Scene s = make_scene();
  ASSERT_GT(s.frame.foreground_count(), 5u);
  for (SupervisionMode mode : {SupervisionMode::kCenterness3d, SupervisionMode::kIouBev}) {
    SupervisionConfig cfg;
    cfg.mode = mode;
    const ClassificationTargets ct = compute_targets(perfect(s), s.frame, s.gts, cfg);
    EXPECT_EQ(ct.foreground_count(), s.frame.foreground_count());
    for (std::size_t idx = 0; idx < ct.pixel_count(); ++idx) {
      if (s.frame.foreground(idx)) {
        EXPECT_NEAR(ct.quality[idx], 1.0, 1e-9);
        EXPECT_EQ(ct.category[idx],
                  static_cast<int>(index_of(s.gts[s.frame.gt_index[idx]].box.category)));
      } else {
        EXPECT_EQ(ct.quality[idx], 0.0);
        EXPECT_EQ(ct.category[idx], kBackground);
      }
    }
  }
}

TEST(ComputeTargets, MatchesScalarLoop) {
  const Scene s = make_scene();
  std::mt19937_64 rng(53);
  DenseOutput d = perfect(s);
  for (double& r : d.regression) r += uniform(rng, -0.5, 0.5);
  const ClassificationTargets ct = compute_targets(d, s.frame, s.gts, SupervisionConfig{});
  for (std::size_t idx = 0; idx < ct.pixel_count(); ++idx) {
    if (!s.frame.foreground(idx)) continue;
    const Point3 a = s.frame.anchors[idx];
    const auto r = d.regression_at(idx);
    // Decode by hand in the point-azimuth frame.
    const double alpha = std::atan2(a.y, a.x);
    const Point3 c{a.x + std::cos(alpha) * r[0] - std::sin(alpha) * r[1],
                   a.y + std::sin(alpha) * r[0] + std::cos(alpha) * r[1], a.z + r[2]};
    const Point3 g = s.gts[s.frame.gt_index[idx]].box.center;
    const Point3 e = c - g;
    const double expect = std::exp(-(e.x * e.x + e.y * e.y + e.z * e.z) / (0.75 * 0.75));
    EXPECT_NEAR(ct.quality[idx], expect, 1e-12);
    EXPECT_LT(ct.quality[idx], 1.0);
  }
}

TEST(ComputeTargets, ShapeMismatchIsReported) {
  const Scene s = make_scene();
  try {
    compute_targets(DenseOutput(2, 2), s.frame, s.gts, SupervisionConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_THROW(compute_targets(perfect(s), s.frame, std::vector<GroundTruthCuboid>{},
                               SupervisionConfig{}),
               Error);
}

}  // namespace
}  // namespace rvdet
