// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rvdet/error.hpp"
#include "rvdet/geometry.hpp"

namespace rvdet {
namespace {

constexpr double kPi = std::numbers::pi;

Cuboid box(double x, double y, double l, double w, double yaw = 0.0, double z = 0.0,
           double h = 1.0) {
  Cuboid c;
  c.center = {x, y, z};
  c.length = l;
  c.width = w;
  c.height = h;
  c.yaw = yaw;
  return c;
}

TEST(BevCorners, UnitSquareAtOrigin) {
  const auto corners = bev_corners(box(0, 0, 1, 1));
  const std::array<Vec2, 4> expected = {{{0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}, {0.5, -0.5}}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(corners[i].x, expected[i].x);
    EXPECT_DOUBLE_EQ(corners[i].y, expected[i].y);
  }
}

TEST(BevCorners, QuarterTurnSwapsAxes) {
  const auto corners = bev_corners(box(0, 0, 2, 1, kPi / 2));
  double max_x = 0.0, max_y = 0.0;
  for (const auto& c : corners) {
    max_x = std::max(max_x, std::abs(c.x));
    max_y = std::max(max_y, std::abs(c.y));
  }
  EXPECT_NEAR(max_x, 0.5, 1e-12);
  EXPECT_NEAR(max_y, 1.0, 1e-12);
}

TEST(BevCorners, RotationMatrixAtFortyFiveDegrees) {
  const double t = kPi / 4;
  const auto corners = bev_corners(box(0, 0, 2, 1, t));
  const std::array<Vec2, 4> local = {{{1, 0.5}, {-1, 0.5}, {-1, -0.5}, {1, -0.5}}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(corners[i].x, std::cos(t) * local[i].x - std::sin(t) * local[i].y, 1e-12);
    EXPECT_NEAR(corners[i].y, std::sin(t) * local[i].x + std::cos(t) * local[i].y, 1e-12);
  }
}

TEST(BevCorners, CounterClockwiseForRandomBoxes) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto corners = bev_corners(oracle::random_cuboid(rng));
    EXPECT_GT(polygon_area(corners), 0.0);
  }
}

TEST(IouBev, IdenticalBoxesGiveOne) {
  const Cuboid a = box(1, 2, 3, 1.5, 0.4);
  EXPECT_NEAR(iou_bev(a, a), 1.0, 1e-12);
}

TEST(IouBev, OffsetSquaresMatchGridOracle) {
  const Cuboid a = box(0, 0, 2, 2);
  const Cuboid b = box(1, 0, 2, 2);
  const double grid = oracle::grid_iou_bev(a, b, 1e-3, -1.5, 2.5, -1.5, 1.5);
  EXPECT_NEAR(grid, 1.0 / 3.0, 1e-3);
  EXPECT_NEAR(iou_bev(a, b), grid, 1e-3);
  EXPECT_NEAR(iou_bev(a, b), 1.0 / 3.0, 1e-12);
}

TEST(IouBev, DisjointFootprintsGiveZero) {
  EXPECT_EQ(iou_bev(box(0, 0, 2, 2), box(10, 0, 2, 2)), 0.0);
  // Circles overlap but the rotated rectangles do not.
  EXPECT_EQ(iou_bev(box(0, 0, 4, 0.5, 0.0), box(0, 1.0, 4, 0.5, 0.0)), 0.0);
}

TEST(IouBev, TouchingEdgesGiveZero) {
  EXPECT_NEAR(iou_bev(box(0, 0, 2, 2), box(2, 0, 2, 2)), 0.0, 1e-12);
}

TEST(IouBev, SymmetricAndBounded) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Cuboid a = oracle::random_cuboid(rng, 2.0);
    const Cuboid b = oracle::random_cuboid(rng, 2.0);
    const double ab = iou_bev(a, b);
    EXPECT_NEAR(ab, iou_bev(b, a), 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(iou_bev(a, a), 1.0, 1e-9);
  }
}

TEST(IouBev, ContainedBoxRatioOfAreas) {
  const Cuboid outer = box(0, 0, 4, 4, 0.3);
  const Cuboid inner = box(0.2, -0.1, 1, 2, 1.1);
  EXPECT_NEAR(iou_bev(outer, inner), 2.0 / 16.0, 1e-12);
}

TEST(IouBev, MonteCarloAgreementOnRandomPairs) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Cuboid a = oracle::random_cuboid(rng, 1.5);
    const Cuboid b = oracle::random_cuboid(rng, 1.5);
    EXPECT_NEAR(iou_bev(a, b), oracle::monte_carlo_iou_bev(a, b, 300, rng), 5e-3);
  }
}

TEST(IouBev, DegenerateSliverIsFinite) {
  const Cuboid a = box(0, 0, 1e-9, 1e-9);
  const double iou = iou_bev(a, box(0, 0, 1, 1));
  EXPECT_TRUE(std::isfinite(iou));
  EXPECT_GE(iou, 0.0);
}

TEST(Iou3d, VerticalSeparationGivesZero) {
  EXPECT_EQ(iou_3d(box(0, 0, 2, 2, 0, 0, 1), box(0, 0, 2, 2, 0, 5, 1)), 0.0);
}

TEST(Iou3d, HalfVerticalOverlap) {
  // Same footprint, heights overlap by half: inter = 4 * 0.5, union = 8 - 2.
  EXPECT_NEAR(iou_3d(box(0, 0, 2, 2, 0, 0, 1), box(0, 0, 2, 2, 0, 0.5, 1)), 2.0 / 6.0, 1e-12);
}

TEST(Iou3dAligned, ClosedForms) {
  EXPECT_DOUBLE_EQ(iou_3d_aligned(box(0, 0, 2, 1, 0, 0, 3), box(9, 9, 2, 1, 1.0, 4, 3)), 1.0);
  EXPECT_NEAR(iou_3d_aligned(box(0, 0, 2, 2, 0, 0, 2), box(0, 0, 1, 1, 0, 0, 1)), 1.0 / 8.0,
              1e-15);
  EXPECT_NEAR(iou_3d_aligned(box(0, 0, 2, 1, 0, 0, 1), box(0, 0, 1, 2, 0, 0, 1)), 1.0 / 3.0,
              1e-15);
}

TEST(CenterDistance, Examples) {
  EXPECT_EQ(center_distance(box(1, 2, 1, 1), box(1, 2, 1, 1)), 0.0);
  EXPECT_DOUBLE_EQ(center_distance(box(0, 0, 1, 1), box(3, 4, 1, 1)), 5.0);
  EXPECT_DOUBLE_EQ(center_distance(box(0, 0, 1, 1, 0, 0), box(0, 0, 1, 1, 0, 2)), 2.0);
}

TEST(ContainsPoint, CenterFaceAndBeyond) {
  const Cuboid b = box(1, 1, 2, 1, 0.0, 0.0, 1);
  EXPECT_TRUE(contains_point(b, {1, 1, 0}));
  EXPECT_TRUE(contains_point(b, {2, 1, 0}));  // +l/2 face
  EXPECT_FALSE(contains_point(b, {2.001, 1, 0}));
  // Rotated: 1 mm beyond the +l/2 face along the heading.
  const Cuboid r = box(0, 0, 2, 1, kPi / 3);
  const double d = 1.001;
  EXPECT_FALSE(contains_point(r, {d * std::cos(kPi / 3), d * std::sin(kPi / 3), 0}));
  const double e = 0.999;
  EXPECT_TRUE(contains_point(r, {e * std::cos(kPi / 3), e * std::sin(kPi / 3), 0}));
}

TEST(ContainsPoint, InvariantUnderRigidMotion) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    Cuboid b = oracle::random_cuboid(rng);
    Point3 p{oracle::uniform(rng, -7, 7), oracle::uniform(rng, -7, 7), oracle::uniform(rng, -2, 2)};
    const bool before = contains_point(b, p);
    const double beta = oracle::uniform(rng, -kPi, kPi);
    const Point3 t{oracle::uniform(rng, -50, 50), oracle::uniform(rng, -50, 50),
                   oracle::uniform(rng, -5, 5)};
    auto move = [&](const Point3& q) {
      return Point3{std::cos(beta) * q.x - std::sin(beta) * q.y + t.x,
                    std::sin(beta) * q.x + std::cos(beta) * q.y + t.y, q.z + t.z};
    };
    // Keep points away from faces so rounding cannot flip the answer.
    const double lx = std::cos(b.yaw) * (p.x - b.center.x) + std::sin(b.yaw) * (p.y - b.center.y);
    const double ly = -std::sin(b.yaw) * (p.x - b.center.x) + std::cos(b.yaw) * (p.y - b.center.y);
    const double margin = std::min({std::abs(std::abs(lx) - b.length / 2),
                                    std::abs(std::abs(ly) - b.width / 2),
                                    std::abs(std::abs(p.z - b.center.z) - b.height / 2)});
    if (margin < 1e-6) continue;
    b.center = move(b.center);
    b.yaw = wrap_angle(b.yaw + beta);
    EXPECT_EQ(contains_point(b, move(p)), before);
  }
}

TEST(YawDifference, Examples) {
  EXPECT_EQ(yaw_difference(0, 0), 0.0);
  EXPECT_NEAR(yaw_difference(0, 3 * kPi / 2), kPi / 2, 1e-12);
  EXPECT_NEAR(yaw_difference(-kPi + 0.1, kPi - 0.1), 0.2, 1e-12);
}

TEST(YawDifference, FullTurnsAreZeroAndRangeIsBounded) {
  std::mt19937_64 rng(9);
  for (int k = -5; k <= 5; ++k) {
    const double t = oracle::uniform(rng, -kPi, kPi);
    EXPECT_NEAR(yaw_difference(t, t + 2 * kPi * k), 0.0, 1e-9);
  }
  for (int i = 0; i < 1000; ++i) {
    const double d = yaw_difference(oracle::uniform(rng, -20, 20), oracle::uniform(rng, -20, 20));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, kPi);
  }
}

TEST(WrapAngle, HalfOpenRange) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), -kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(oracle::uniform(rng, -100, 100));
    EXPECT_GE(w, -kPi);
    EXPECT_LT(w, kPi);
  }
}

TEST(Validate, RejectsBadBoxes) {
  EXPECT_NO_THROW(validate(box(0, 0, 1, 1)));
  EXPECT_THROW(validate(box(0, 0, 0, 1)), Error);
  EXPECT_THROW(validate(box(0, 0, 1, -1)), Error);
  EXPECT_THROW(validate(box(NAN, 0, 1, 1)), Error);
  EXPECT_THROW(validate(box(0, 0, 1, 1, INFINITY)), Error);
}

}  // namespace
}  // namespace rvdet
