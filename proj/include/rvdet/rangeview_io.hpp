// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats for range images and point clouds. All integers and floats
// are little-endian.
//
// RVIMG1:
//   "RVIMG1" | u32 H | u32 W | u32 C | f32 inclination_min | f32 inclination_max
//   | C x (u32 byte length, UTF-8 name) | C x H*W f32, row-major per channel
//   | ceil(H*W/8) bytes of validity bits, row-major, LSB first.
//
// RVPTS1:
//   "RVPTS1" | u32 N | u32 F (4 or 5) | N*F f32 (x, y, z, intensity[, elongation]).
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rvdet/rangeview.hpp"

namespace rvdet {

inline constexpr std::string_view kRangeImageMagic = "RVIMG1";
inline constexpr std::string_view kPointCloudMagic = "RVPTS1";

void write_range_image(std::ostream& out, const RangeImage& image);
/// Throws Error(kParse) on truncated or inconsistent input.
RangeImage read_range_image(std::istream& in);
RangeImage parse_range_image(std::span<const char> bytes);

void save_range_image(const std::filesystem::path& path, const RangeImage& image);
RangeImage load_range_image(const std::filesystem::path& path);

/// CSV rows of x,y,z,intensity[,elongation]. Blank lines, '#' comments and a
/// leading header row are skipped.
std::vector<LidarPoint> read_points_csv(std::istream& in, bool* has_elongation = nullptr);
void write_points_csv(std::ostream& out, std::span<const LidarPoint> points,
                      bool with_elongation);

std::vector<LidarPoint> parse_points_binary(std::span<const char> bytes,
                                            bool* has_elongation = nullptr);
void write_points_binary(std::ostream& out, std::span<const LidarPoint> points,
                         bool with_elongation);

/// Detects RVPTS1 by magic, otherwise parses CSV.
std::vector<LidarPoint> load_point_cloud(const std::filesystem::path& path,
                                         bool* has_elongation = nullptr);

std::vector<char> read_file_bytes(const std::filesystem::path& path);

}  // namespace rvdet
