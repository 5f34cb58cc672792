// SPDX-License-Identifier: Apache-2.0
#include "rvdet/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// At most 4 input vertices, each of 4 clip edges adds at most one vertex.
constexpr std::size_t kMaxClipVertices = 8;

struct ClipBuffer {
  std::array<Vec2, kMaxClipVertices> v{};
  std::size_t n = 0;

  void push(const Vec2& p) {
    if (n < v.size()) v[n++] = p;
  }
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Intersection of segment p->q with the infinite line through e0->e1, where
// dp and dq are the signed side values of p and q.
inline Vec2 intersect(const Vec2& p, const Vec2& q, double dp, double dq) {
  const double t = dp / (dp - dq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

double vertical_overlap(const Cuboid& a, const Cuboid& b) {
  const double top = std::min(a.center.z + 0.5 * a.height, b.center.z + 0.5 * b.height);
  const double bottom =
      std::max(a.center.z - 0.5 * a.height, b.center.z - 0.5 * b.height);
  return std::max(0.0, top - bottom);
}

}  // namespace

void validate(const Cuboid& box) {
  if (!box.center.finite() || !std::isfinite(box.yaw)) {
    throw Error(ErrorCode::kInvalidArgument, "cuboid has non-finite center or yaw");
  }
  if (!(box.length > 0.0) || !(box.width > 0.0) || !(box.height > 0.0) ||
      !std::isfinite(box.length) || !std::isfinite(box.width) ||
      !std::isfinite(box.height)) {
    throw Error(ErrorCode::kInvalidArgument,
                "cuboid dims must be positive and finite, got " +
                    std::to_string(box.length) + "x" + std::to_string(box.width) +
                    "x" + std::to_string(box.height));
  }
}

double wrap_angle(double radians) {
  double r = std::fmod(radians + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  const double out = r - std::numbers::pi;
  return out >= std::numbers::pi ? -std::numbers::pi : out;
}

std::array<Vec2, 4> bev_corners(const Cuboid& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const std::array<Vec2, 4> local = {{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.center.x + c * local[i].x - s * local[i].y,
              box.center.y + s * local[i].x + c * local[i].y};
  }
  return out;
}

double polygon_area(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = polygon[i];
    const Vec2& q = polygon[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

double bev_intersection_area(const Cuboid& a, const Cuboid& b) {
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double reach = a.bev_half_diagonal() + b.bev_half_diagonal();
  if (dx * dx + dy * dy > reach * reach) return 0.0;

  const auto subject = bev_corners(a);
  const auto clip = bev_corners(b);

  ClipBuffer current;
  for (const Vec2& p : subject) current.push(p);

  for (std::size_t e = 0; e < 4 && current.n > 0; ++e) {
    const Vec2& e0 = clip[e];
    const Vec2& e1 = clip[(e + 1) % 4];
    ClipBuffer next;
    for (std::size_t i = 0; i < current.n; ++i) {
      const Vec2& p = current.v[i];
      const Vec2& q = current.v[(i + 1) % current.n];
      const double dp = cross(e0, e1, p);
      const double dq = cross(e0, e1, q);
      if (dp >= 0.0) {
        next.push(p);
        if (dq < 0.0) next.push(intersect(p, q, dp, dq));
      } else if (dq >= 0.0) {
        next.push(intersect(p, q, dp, dq));
      }
    }
    current = next;
  }
  if (current.n < 3) return 0.0;
  const double area = polygon_area(std::span<const Vec2>(current.v.data(), current.n));
  return area > 0.0 ? area : 0.0;
}

double iou_bev(const Cuboid& a, const Cuboid& b) {
  const double inter = bev_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.bev_area() + b.bev_area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Cuboid& a, const Cuboid& b) {
  const double dz = vertical_overlap(a, b);
  if (dz <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * dz;
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d_aligned(const Cuboid& a, const Cuboid& b) {
  const double inter = std::min(a.length, b.length) * std::min(a.width, b.width) *
                       std::min(a.height, b.height);
  const double uni = a.volume() + b.volume() - inter;
  if (inter <= 0.0 || uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Cuboid& a, const Cuboid& b) {
  return (a.center - b.center).norm();
}

bool contains_point(const Cuboid& box, const Point3& p) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x - box.center.x;
  const double dy = p.y - box.center.y;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double lz = p.z - box.center.z;
  return std::abs(lx) <= 0.5 * box.length && std::abs(ly) <= 0.5 * box.width &&
         std::abs(lz) <= 0.5 * box.height;
}

double yaw_difference(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  if (d > std::numbers::pi) d = kTwoPi - d;
  return d;
}

}  // namespace rvdet
