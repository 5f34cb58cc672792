// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock timing of the non-network stages on one frame.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvdet/geometry.hpp"
#include "rvdet/postprocess.hpp"
#include "rvdet/rangeview.hpp"

namespace rvdet {

inline constexpr std::array<std::string_view, 5> kBenchStages = {"project", "extract", "rss",
                                                                 "wnms", "eval"};

struct StageTiming {
  std::string name;
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;    // sample standard deviation; 0 for a single sample
  double ops_per_sec = 0.0;  // 1000 / mean_ms
};

struct BenchResult {
  std::size_t repeat = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::size_t num_points = 0;
  std::size_t num_detections = 0;
  std::vector<StageTiming> stages;  // in kBenchStages order

  /// Mean time of project + extract + rss + wnms.
  double pipeline_mean_ms() const;
  std::string to_json() const;
};

/// Re-projects the image's points, then runs the oracle pipeline and an AV2
/// evaluation against `gts`, `repeat` times.
BenchResult run_bench(const RangeImage& image, std::span<const GroundTruthCuboid> gts,
                      std::size_t repeat, const RssConfig& rss_config = {},
                      const WnmsConfig& wnms_config = {});

}  // namespace rvdet
