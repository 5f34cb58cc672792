// SPDX-License-Identifier: Apache-2.0
//
// Oriented 3D boxes in the ego frame and the bird's-eye-view (BEV) polygon
// math built on them. Boxes are gravity aligned: yaw is a counter-clockwise
// rotation about +z, length runs along the heading, width across it.
#pragma once

#include <array>
#include <cmath>
#include <span>

#include "rvdet/category.hpp"

namespace rvdet {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Point3 operator+(const Point3& a, const Point3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Point3 operator-(const Point3& a, const Point3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Point3 operator*(double s, const Point3& p) {
    return {s * p.x, s * p.y, s * p.z};
  }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Cuboid {
  Point3 center;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;
  Category category = Category::kVehicle;

  double volume() const { return length * width * height; }
  double bev_area() const { return length * width; }
  /// Radius of the circle circumscribing the BEV footprint.
  double bev_half_diagonal() const { return 0.5 * std::hypot(length, width); }
};

/// Cuboid plus the dynamic classification target and the lidar support count.
struct GroundTruthCuboid {
  Cuboid box;
  double quality = 0.0;
  int num_interior_points = 0;
};

/// Decoded detection: box, object likelihood, range of the generating pixel.
struct Proposal {
  Cuboid box;
  double confidence = 0.0;
  double anchor_range = 0.0;
};

/// Throws Error(kInvalidArgument) unless dims are positive and all fields finite.
void validate(const Cuboid& box);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

/// BEV footprint vertices in counter-clockwise order, starting at the
/// front-left corner (+l/2, +w/2) in the box frame.
std::array<Vec2, 4> bev_corners(const Cuboid& box);

/// Signed shoelace area; positive for counter-clockwise polygons.
double polygon_area(std::span<const Vec2> polygon);

/// Area of the intersection of two BEV footprints (Sutherland-Hodgman).
double bev_intersection_area(const Cuboid& a, const Cuboid& b);

double iou_bev(const Cuboid& a, const Cuboid& b);

/// 3D IoU of gravity-aligned boxes: BEV intersection times vertical overlap.
double iou_3d(const Cuboid& a, const Cuboid& b);

/// IoU after moving b onto a's center and heading; depends on dims only.
double iou_3d_aligned(const Cuboid& a, const Cuboid& b);

double center_distance(const Cuboid& a, const Cuboid& b);

/// Closed-interval containment in the box frame: faces count as inside.
bool contains_point(const Cuboid& box, const Point3& p);

/// Smallest absolute angle between two headings, in [0, pi].
double yaw_difference(double a, double b);

}  // namespace rvdet
