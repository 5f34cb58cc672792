// SPDX-License-Identifier: Apache-2.0
//
// Dense output -> final detections: score thresholding, range subsampling
// (RSS) and weighted NMS (WNMS).
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvdet/dense.hpp"
#include "rvdet/geometry.hpp"
#include "rvdet/rangeview.hpp"

namespace rvdet {

struct RangePartition {
  double start = 0.0;  // meters, inclusive; the partition ends at the next start
  std::uint32_t stride = 1;
};

/// Half-open range partitions starting at 0; the last one is unbounded.
struct RssConfig {
  std::vector<RangePartition> partitions = {{0.0, 8}, {30.0, 2}, {50.0, 1}};

  /// "start:stride[,start:stride...]", e.g. "0:8,30:2,50:1".
  static RssConfig parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
  std::size_t partition_of(double range) const;
};

struct WnmsConfig {
  double iou_threshold = 0.5;
  double score_threshold = 0.05;
  std::size_t max_outputs = 0;  // 0 = unlimited

  /// "iou=0.5,score=0.05,max=0"; omitted keys keep their defaults.
  static WnmsConfig parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
};

/// Keeps every stride-th proposal of each partition, counting in input
/// order and always keeping the first. Relative order is preserved.
std::vector<Proposal> rss(std::span<const Proposal> proposals, const RssConfig& config);

/// One proposal per valid pixel whose max-category sigmoid score reaches
/// `score_threshold`, in row-major order.
std::vector<Proposal> extract_proposals(const DenseOutput& dense, const RangeImage& image,
                                        double score_threshold);

/// Per-category greedy clustering, highest score first (stable on ties). A
/// cluster holds every remaining proposal with BEV IoU >= threshold against
/// the leader; it is replaced by the confidence-weighted mean box (circular
/// mean for yaw) scored with the leader's confidence. Merged boxes that end
/// up overlapping a stronger output at or above the threshold are dropped,
/// so outputs of one category are pairwise below the threshold.
std::vector<Proposal> wnms(std::span<const Proposal> proposals, const WnmsConfig& config);

/// extract -> rss -> wnms.
std::vector<Proposal> run_pipeline(const DenseOutput& dense, const RangeImage& image,
                                   const RssConfig& rss_config, const WnmsConfig& wnms_config);

}  // namespace rvdet
