// SPDX-License-Identifier: Apache-2.0
//
// Spherical projection of a lidar sweep into a dense range image, and the
// reverse lookup of the observed 3D point stored at each pixel.
//
// Row 0 is the top beam (inclination_max). Column j covers azimuths
// [-pi + j*2pi/W, -pi + (j+1)*2pi/W), with azimuth = atan2(y, x).
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvdet/geometry.hpp"

namespace rvdet {

struct LidarPoint {
  Point3 position;
  double intensity = 0.0;
  double elongation = 0.0;
};

struct RangeImageSpec {
  std::uint32_t height = 64;
  std::uint32_t width = 512;
  double inclination_min = -0.30;
  double inclination_max = 0.05;
  bool with_elongation = false;

  void validate() const;
  friend bool operator==(const RangeImageSpec&, const RangeImageSpec&) = default;
};

// Fixed leading channel layout; extra channels (targets, masks) follow.
inline constexpr std::size_t kRangeChannel = 0;
inline constexpr std::size_t kXChannel = 1;
inline constexpr std::size_t kYChannel = 2;
inline constexpr std::size_t kZChannel = 3;
inline constexpr std::size_t kIntensityChannel = 4;
inline constexpr std::size_t kElongationChannel = 5;

/// Range value stored at pixels without a return.
inline constexpr double kInvalidRange = -1.0;

std::vector<std::string> standard_channel_names(bool with_elongation);

struct PixelIndex {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

class RangeImage {
 public:
  /// All pixels invalid; range channel at the sentinel, others zero.
  explicit RangeImage(RangeImageSpec spec);
  /// `channel_names` must begin with standard_channel_names(spec.with_elongation).
  RangeImage(RangeImageSpec spec, std::vector<std::string> channel_names);

  const RangeImageSpec& spec() const { return spec_; }
  std::uint32_t height() const { return spec_.height; }
  std::uint32_t width() const { return spec_.width; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(spec_.height) * spec_.width; }
  std::size_t pixel(std::uint32_t row, std::uint32_t col) const {
    return static_cast<std::size_t>(row) * spec_.width + col;
  }

  std::size_t num_channels() const { return names_.size(); }
  const std::vector<std::string>& channel_names() const { return names_; }
  std::optional<std::size_t> channel_index(std::string_view name) const;
  /// Appends a channel filled with `fill`, or overwrites an existing one of that name.
  std::size_t add_channel(const std::string& name, double fill = 0.0);

  double at(std::size_t channel, std::size_t pixel) const {
    return data_[channel * pixel_count() + pixel];
  }
  double& at(std::size_t channel, std::size_t pixel) {
    return data_[channel * pixel_count() + pixel];
  }
  std::span<const double> channel(std::size_t channel) const {
    return {data_.data() + channel * pixel_count(), pixel_count()};
  }
  std::span<double> channel(std::size_t channel) {
    return {data_.data() + channel * pixel_count(), pixel_count()};
  }

  bool valid(std::size_t pixel) const { return valid_[pixel] != 0; }
  void set_valid(std::size_t pixel, bool v) { valid_[pixel] = v ? 1 : 0; }
  std::size_t valid_count() const;

  /// Writes a return into a pixel: range is taken from the point's norm.
  void set_return(std::size_t pixel, const LidarPoint& point);

  friend bool operator==(const RangeImage&, const RangeImage&) = default;

 private:
  RangeImageSpec spec_;
  std::vector<std::string> names_;
  std::vector<double> data_;
  std::vector<std::uint8_t> valid_;
};

struct ProjectionStats {
  std::size_t input_points = 0;
  std::size_t out_of_fov = 0;
  /// Zero-range or non-finite points, which have no direction.
  std::size_t degenerate = 0;
  /// Points discarded because a nearer point occupied their pixel.
  std::size_t collisions = 0;
};

/// Pixel a direction falls into, or nullopt outside the inclination bounds.
std::optional<PixelIndex> pixel_of(const RangeImageSpec& spec, const Point3& p);

double azimuth_bin_center(const RangeImageSpec& spec, std::uint32_t col);
double inclination_bin_center(const RangeImageSpec& spec, std::uint32_t row);

/// Throws Error(kNoData) on an empty point set. Collisions keep the nearest
/// point; equal ranges keep the earlier point.
RangeImage project(std::span<const LidarPoint> points, const RangeImageSpec& spec,
                   ProjectionStats* stats = nullptr);

/// Stored (x, y, z) at a valid pixel; Error(kNoData) "no return" otherwise.
Point3 unproject(const RangeImage& image, std::uint32_t row, std::uint32_t col);

struct AnchorPoint {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  Point3 position;
};

/// One anchor per valid pixel, row-major.
std::vector<AnchorPoint> anchor_points(const RangeImage& image);

/// Lidar points for every valid pixel, row-major (inverse of project).
std::vector<LidarPoint> image_points(const RangeImage& image);

}  // namespace rvdet
