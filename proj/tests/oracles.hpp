// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used by the unit and acceptance
// tests. They favor plain loops over speed and share no code with the
// library beyond the data types and the basic geometry primitives.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rvdet/dense.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/metrics.hpp"
#include "rvdet/rangeview.hpp"

namespace rvdet::oracle {

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Random fixtures

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Cuboid random_cuboid(std::mt19937_64& rng, double extent = 5.0, double max_dim = 4.0) {
  Cuboid c;
  c.center = {uniform(rng, -extent, extent), uniform(rng, -extent, extent),
              uniform(rng, -1.0, 1.0)};
  c.length = uniform(rng, 0.2, max_dim);
  c.width = uniform(rng, 0.2, max_dim);
  c.height = uniform(rng, 0.2, max_dim);
  c.yaw = uniform(rng, -kPi, kPi);
  c.category = static_cast<Category>(std::uniform_int_distribution<int>(0, 2)(rng));
  return c;
}

// ---------------------------------------------------------------------------
// Geometry

/// Point inside the rotated BEV rectangle (closed), by explicit rotation.
inline bool in_footprint(const Cuboid& b, double x, double y) {
  const double dx = x - b.center.x;
  const double dy = y - b.center.y;
  const double lx = std::cos(b.yaw) * dx + std::sin(b.yaw) * dy;
  const double ly = -std::sin(b.yaw) * dx + std::cos(b.yaw) * dy;
  return std::abs(lx) <= 0.5 * b.length && std::abs(ly) <= 0.5 * b.width;
}

/// BEV IoU by stratified jittered sampling of a's footprint (n x n strata).
inline double monte_carlo_iou_bev(const Cuboid& a, const Cuboid& b, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  std::int64_t inside = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = (i + jitter(rng)) / n - 0.5;
      const double v = (j + jitter(rng)) / n - 0.5;
      const double lx = u * a.length;
      const double ly = v * a.width;
      const double x = a.center.x + c * lx - s * ly;
      const double y = a.center.y + s * lx + c * ly;
      if (in_footprint(b, x, y)) ++inside;
    }
  }
  const double area_a = a.length * a.width;
  const double inter = area_a * static_cast<double>(inside) / (static_cast<double>(n) * n);
  const double uni = area_a + b.length * b.width - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// BEV IoU of footprints by counting cell centers of a regular grid.
inline double grid_iou_bev(const Cuboid& a, const Cuboid& b, double cell, double x0, double x1,
                           double y0, double y1) {
  std::int64_t in_a = 0, in_b = 0, in_both = 0;
  for (double x = x0 + 0.5 * cell; x < x1; x += cell) {
    for (double y = y0 + 0.5 * cell; y < y1; y += cell) {
      const bool ia = in_footprint(a, x, y);
      const bool ib = in_footprint(b, x, y);
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const auto uni = in_a + in_b - in_both;
  return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

// ---------------------------------------------------------------------------
// Projection

/// Pixel by direct bin arithmetic; nullopt outside the inclination bounds.
inline std::optional<std::pair<std::uint32_t, std::uint32_t>> bin_of(const RangeImageSpec& spec,
                                                                      const Point3& p) {
  const double incl = std::atan2(p.z, std::sqrt(p.x * p.x + p.y * p.y));
  if (incl < spec.inclination_min || incl > spec.inclination_max) return std::nullopt;
  long row = static_cast<long>(std::floor((spec.inclination_max - incl) /
                                          (spec.inclination_max - spec.inclination_min) *
                                          spec.height));
  row = std::clamp<long>(row, 0, static_cast<long>(spec.height) - 1);
  long col = static_cast<long>(std::floor((std::atan2(p.y, p.x) + kPi) / (2.0 * kPi) * spec.width));
  if (col >= static_cast<long>(spec.width)) col = 0;
  return std::pair{static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
}

// ---------------------------------------------------------------------------
// Calculus

/// Central difference of f at x with step h.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// True when |a - fd| < tol, or the relative error is below tol.
inline bool gradient_close(double analytic, double fd, double tol) {
  const double abs_err = std::abs(analytic - fd);
  if (abs_err < tol) return true;
  return abs_err / std::max(std::abs(fd), 1e-300) < tol;
}

// ---------------------------------------------------------------------------
// Losses

inline double ref_vfl(double c, double q, double alpha, double gamma) {
  c = std::clamp(c, 1e-7, 1.0 - 1e-7);
  if (q > 0.0) return -q * (q * std::log(c) + (1.0 - q) * std::log(1.0 - c));
  return -alpha * std::pow(c, gamma) * std::log(1.0 - c);
}

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Metrics

/// 101-point interpolated AP from an explicit precision/recall table.
inline double ref_average_precision(std::vector<std::pair<double, bool>> dets, std::size_t num_gt) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> prec, rec;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    tp += dets[i].second ? 1 : 0;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  double ap = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best = 0.0;
    for (std::size_t i = 0; i < prec.size(); ++i) {
      if (rec[i] >= r) best = std::max(best, prec[i]);
    }
    ap += best;
  }
  return ap / 101.0;
}

struct RefCategory {
  double ap = 0.0;
  std::optional<double> ate, ase, aoe;
  double cds = 0.0;
};

struct RefReport {
  std::map<Category, RefCategory> categories;
  double mean_ap = 0.0;
  double mean_cds = 0.0;
};

/// Single-loop evaluation: one pass over globally score-sorted detections per
/// (category, threshold), with per-frame claim flags.
inline RefReport ref_evaluate(const std::vector<EvalFrame>& frames, const EvalConfig& cfg) {
  const bool av2 = cfg.style == EvalStyle::kAv2Distance;
  RefReport report;
  std::vector<double> aps, cdss;
  for (Category cat : cfg.categories) {
    auto ignored = [&](const GroundTruthCuboid& g) {
      return g.num_interior_points < cfg.min_interior_points || g.box.center.norm() > cfg.max_range;
    };
    std::size_t num_gt = 0;
    std::vector<std::tuple<double, std::size_t, std::size_t>> dets;  // score, frame, det
    for (std::size_t f = 0; f < frames.size(); ++f) {
      for (const auto& g : frames[f].gts) num_gt += g.box.category == cat && !ignored(g);
      for (std::size_t d = 0; d < frames[f].detections.size(); ++d) {
        const auto& p = frames[f].detections[d];
        if (p.box.category == cat && p.box.center.norm() <= cfg.max_range) {
          dets.emplace_back(p.confidence, f, d);
        }
      }
    }
    if (num_gt == 0) continue;
    std::stable_sort(dets.begin(), dets.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });

    // Returns per-detection outcome (1 TP, 0 FP, -1 dropped) and TP box pairs.
    auto run = [&](bool distance, double tau, std::vector<std::pair<Cuboid, Cuboid>>* pairs) {
      std::vector<std::pair<double, bool>> ranked;
      std::map<std::size_t, std::set<std::size_t>> claimed;
      for (const auto& [score, f, d] : dets) {
        const Cuboid& db = frames[f].detections[d].box;
        int best = -1;
        double best_val = 0.0;
        bool touches_ignored = false;
        for (std::size_t g = 0; g < frames[f].gts.size(); ++g) {
          const auto& gt = frames[f].gts[g];
          if (gt.box.category != cat) continue;
          double val;
          bool ok;
          if (distance) {
            const double dist = center_distance(db, gt.box);
            ok = dist <= tau;
            val = -dist;
          } else {
            val = iou_3d(db, gt.box);
            ok = val >= tau;
          }
          if (!ok) continue;
          if (ignored(gt)) {
            touches_ignored = true;
            continue;
          }
          if (claimed[f].count(g)) continue;
          if (best < 0 || val > best_val) {
            best = static_cast<int>(g);
            best_val = val;
          }
        }
        if (best >= 0) {
          claimed[f].insert(static_cast<std::size_t>(best));
          ranked.emplace_back(score, true);
          if (pairs) pairs->emplace_back(db, frames[f].gts[static_cast<std::size_t>(best)].box);
        } else if (!touches_ignored) {
          ranked.emplace_back(score, false);
        }
      }
      return ranked;
    };

    RefCategory rc;
    if (av2) {
      double sum = 0.0;
      for (double t : cfg.distance_thresholds) sum += ref_average_precision(run(true, t, nullptr), num_gt);
      rc.ap = sum / static_cast<double>(cfg.distance_thresholds.size());
      std::vector<std::pair<Cuboid, Cuboid>> pairs;
      run(true, cfg.tp_distance, &pairs);
      double ate_u = 1.0, ase_u = 1.0, aoe_u = 1.0;
      if (!pairs.empty()) {
        double ate = 0.0, ase = 0.0, aoe = 0.0;
        for (const auto& [d, g] : pairs) {
          ate += std::sqrt(std::pow(d.center.x - g.center.x, 2) + std::pow(d.center.y - g.center.y, 2) +
                           std::pow(d.center.z - g.center.z, 2));
          const double inter = std::min(d.length, g.length) * std::min(d.width, g.width) *
                               std::min(d.height, g.height);
          ase += 1.0 - inter / (d.volume() + g.volume() - inter);
          double diff = std::fmod(std::abs(d.yaw - g.yaw), 2.0 * kPi);
          aoe += std::min(diff, 2.0 * kPi - diff);
        }
        const double n = static_cast<double>(pairs.size());
        rc.ate = ate / n;
        rc.ase = ase / n;
        rc.aoe = aoe / n;
        ate_u = std::min(*rc.ate / cfg.translation_normalizer, 1.0);
        ase_u = std::min(*rc.ase / cfg.scale_normalizer, 1.0);
        aoe_u = std::min(*rc.aoe / cfg.orientation_normalizer, 1.0);
      }
      rc.cds = rc.ap * ((1.0 - ate_u) + (1.0 - ase_u) + (1.0 - aoe_u)) / 3.0;
    } else {
      rc.ap = ref_average_precision(run(false, cfg.iou_thresholds[index_of(cat)], nullptr), num_gt);
    }
    aps.push_back(rc.ap);
    cdss.push_back(rc.cds);
    report.categories[cat] = rc;
  }
  for (double a : aps) report.mean_ap += a / static_cast<double>(aps.size());
  for (double c : cdss) report.mean_cds += c / static_cast<double>(cdss.size());
  return report;
}

// ---------------------------------------------------------------------------
// Fixtures for evaluation

/// Random evaluation frames: ground truth plus jittered, duplicated and
/// spurious detections, with some low-support and far-away objects.
inline std::vector<EvalFrame> random_eval_frames(std::mt19937_64& rng, std::size_t num_frames) {
  std::vector<EvalFrame> frames;
  for (std::size_t f = 0; f < num_frames; ++f) {
    EvalFrame frame;
    frame.frame_id = std::to_string(f);
    const int n = static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      GroundTruthCuboid g;
      g.box = random_cuboid(rng, 40.0, 4.0);
      g.box.length += 0.5;
      g.box.width += 0.5;
      g.box.height += 0.5;
      g.box.category = kAllCategories[rng() % kNumCategories];
      if (rng() % 8 == 0) g.box.center.x += 140.0;
      g.num_interior_points = static_cast<int>(rng() % 12);
      frame.gts.push_back(g);
      const int copies = static_cast<int>(rng() % 3);
      for (int c = 0; c < copies; ++c) {
        Proposal p;
        p.box = g.box;
        p.box.center.x += uniform(rng, -1.5, 1.5);
        p.box.center.y += uniform(rng, -1.5, 1.5);
        p.box.length *= uniform(rng, 0.8, 1.2);
        p.box.yaw = wrap_angle(p.box.yaw + uniform(rng, -0.5, 0.5));
        // Coarse scores make ties likely.
        p.confidence = std::round(uniform(rng, 0.05, 1.0) * 20.0) / 20.0;
        frame.detections.push_back(p);
      }
    }
    const int spurious = static_cast<int>(rng() % 4);
    for (int i = 0; i < spurious; ++i) {
      Proposal p;
      p.box = random_cuboid(rng, 40.0, 4.0);
      p.box.length += 0.5;
      p.box.category = kAllCategories[rng() % kNumCategories];
      p.confidence = std::round(uniform(rng, 0.05, 1.0) * 20.0) / 20.0;
      frame.detections.push_back(p);
    }
    std::shuffle(frame.detections.begin(), frame.detections.end(), rng);
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace rvdet::oracle
