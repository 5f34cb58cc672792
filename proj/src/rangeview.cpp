// SPDX-License-Identifier: Apache-2.0
#include "rvdet/rangeview.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

void RangeImageSpec::validate() const {
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "range image needs height >= 1 and width >= 1");
  }
  if (!std::isfinite(inclination_min) || !std::isfinite(inclination_max) ||
      !(inclination_min < inclination_max)) {
    throw Error(ErrorCode::kInvalidArgument,
                "range image needs finite inclination_min < inclination_max");
  }
  if (inclination_min < -std::numbers::pi / 2 || inclination_max > std::numbers::pi / 2) {
    throw Error(ErrorCode::kInvalidArgument, "inclination bounds must lie in [-pi/2, pi/2]");
  }
}

std::vector<std::string> standard_channel_names(bool with_elongation) {
  std::vector<std::string> names = {"range", "x", "y", "z", "intensity"};
  if (with_elongation) names.emplace_back("elongation");
  return names;
}

RangeImage::RangeImage(RangeImageSpec spec)
    : RangeImage(spec, standard_channel_names(spec.with_elongation)) {}

RangeImage::RangeImage(RangeImageSpec spec, std::vector<std::string> channel_names)
    : spec_(spec), names_(std::move(channel_names)) {
  spec_.validate();
  const auto standard = standard_channel_names(spec_.with_elongation);
  if (names_.size() < standard.size() ||
      !std::equal(standard.begin(), standard.end(), names_.begin())) {
    throw Error(ErrorCode::kInvalidArgument,
                "range image channels must start with range,x,y,z,intensity");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate channel name '" + names_[i] + "'");
      }
    }
  }
  data_.assign(names_.size() * pixel_count(), 0.0);
  std::fill_n(data_.begin() + kRangeChannel * pixel_count(), pixel_count(), kInvalidRange);
  valid_.assign(pixel_count(), 0);
}

std::optional<std::size_t> RangeImage::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t RangeImage::add_channel(const std::string& name, double fill) {
  if (auto existing = channel_index(name)) {
    auto ch = channel(*existing);
    std::fill(ch.begin(), ch.end(), fill);
    return *existing;
  }
  names_.push_back(name);
  data_.resize(data_.size() + pixel_count(), fill);
  return names_.size() - 1;
}

std::size_t RangeImage::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

void RangeImage::set_return(std::size_t pixel, const LidarPoint& point) {
  at(kRangeChannel, pixel) = point.position.norm();
  at(kXChannel, pixel) = point.position.x;
  at(kYChannel, pixel) = point.position.y;
  at(kZChannel, pixel) = point.position.z;
  at(kIntensityChannel, pixel) = point.intensity;
  if (spec_.with_elongation) at(kElongationChannel, pixel) = point.elongation;
  valid_[pixel] = 1;
}

std::optional<PixelIndex> pixel_of(const RangeImageSpec& spec, const Point3& p) {
  const double planar = std::hypot(p.x, p.y);
  const double inclination = std::atan2(p.z, planar);
  if (inclination < spec.inclination_min || inclination > spec.inclination_max) {
    return std::nullopt;
  }
  const double span = spec.inclination_max - spec.inclination_min;
  auto row = static_cast<std::int64_t>(
      std::floor((spec.inclination_max - inclination) / span * spec.height));
  row = std::clamp<std::int64_t>(row, 0, spec.height - 1);

  const double azimuth = std::atan2(p.y, p.x);
  auto col = static_cast<std::int64_t>(
      std::floor((azimuth + std::numbers::pi) / kTwoPi * spec.width));
  if (col >= static_cast<std::int64_t>(spec.width)) col -= spec.width;
  col = std::clamp<std::int64_t>(col, 0, spec.width - 1);
  return PixelIndex{static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
}

double azimuth_bin_center(const RangeImageSpec& spec, std::uint32_t col) {
  return -std::numbers::pi + (static_cast<double>(col) + 0.5) * kTwoPi / spec.width;
}

double inclination_bin_center(const RangeImageSpec& spec, std::uint32_t row) {
  const double span = spec.inclination_max - spec.inclination_min;
  return spec.inclination_max - (static_cast<double>(row) + 0.5) * span / spec.height;
}

RangeImage project(std::span<const LidarPoint> points, const RangeImageSpec& spec,
                   ProjectionStats* stats) {
  if (points.empty()) throw Error(ErrorCode::kNoData, "no points");
  spec.validate();

  ProjectionStats local;
  local.input_points = points.size();
  RangeImage image(spec);
  for (const LidarPoint& point : points) {
    const double range = point.position.norm();
    if (!point.position.finite() || !(range > 0.0) || !std::isfinite(range)) {
      ++local.degenerate;
      continue;
    }
    const auto px = pixel_of(spec, point.position);
    if (!px) {
      ++local.out_of_fov;
      continue;
    }
    const std::size_t idx = image.pixel(px->row, px->col);
    if (image.valid(idx)) {
      ++local.collisions;
      if (image.at(kRangeChannel, idx) <= range) continue;
    }
    image.set_return(idx, point);
  }
  if (stats != nullptr) *stats = local;
  return image;
}

Point3 unproject(const RangeImage& image, std::uint32_t row, std::uint32_t col) {
  if (row >= image.height() || col >= image.width()) {
    throw Error(ErrorCode::kInvalidArgument, "pixel out of bounds");
  }
  const std::size_t idx = image.pixel(row, col);
  if (!image.valid(idx)) throw Error(ErrorCode::kNoData, "no return");
  return {image.at(kXChannel, idx), image.at(kYChannel, idx), image.at(kZChannel, idx)};
}

std::vector<AnchorPoint> anchor_points(const RangeImage& image) {
  std::vector<AnchorPoint> anchors;
  anchors.reserve(image.valid_count());
  for (std::uint32_t r = 0; r < image.height(); ++r) {
    for (std::uint32_t c = 0; c < image.width(); ++c) {
      const std::size_t idx = image.pixel(r, c);
      if (!image.valid(idx)) continue;
      anchors.push_back({r, c,
                         {image.at(kXChannel, idx), image.at(kYChannel, idx),
                          image.at(kZChannel, idx)}});
    }
  }
  return anchors;
}

std::vector<LidarPoint> image_points(const RangeImage& image) {
  std::vector<LidarPoint> points;
  points.reserve(image.valid_count());
  const bool elongation = image.spec().with_elongation;
  for (std::size_t idx = 0; idx < image.pixel_count(); ++idx) {
    if (!image.valid(idx)) continue;
    LidarPoint p;
    p.position = {image.at(kXChannel, idx), image.at(kYChannel, idx), image.at(kZChannel, idx)};
    p.intensity = image.at(kIntensityChannel, idx);
    if (elongation) p.elongation = image.at(kElongationChannel, idx);
    points.push_back(p);
  }
  return points;
}

}  // namespace rvdet
