// SPDX-License-Identifier: Apache-2.0
//
// JSON-lines records for detections and ground truth.
//
// Detection:    {frame_id, category, x, y, z, l, w, h, yaw, score}
// Ground truth: {frame_id, category, x, y, z, l, w, h, yaw, num_interior_points}
//
// Detections are written with 9 significant digits; ground truth with
// round-trip precision.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rvdet/geometry.hpp"

namespace rvdet {

struct DetectionRecord {
  std::string frame_id;
  Proposal detection;
};

struct GroundTruthRecord {
  std::string frame_id;
  GroundTruthCuboid gt;
};

void write_detections_jsonl(std::ostream& out, const std::string& frame_id,
                            std::span<const Proposal> detections);
void write_ground_truth_jsonl(std::ostream& out, const std::string& frame_id,
                              std::span<const GroundTruthCuboid> gts);

/// Throws Error(kParse) on malformed lines. Unknown category names are
/// collected over the whole input and reported together.
std::vector<DetectionRecord> read_detections_jsonl(std::istream& in);
std::vector<GroundTruthRecord> read_ground_truth_jsonl(std::istream& in);

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);
std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path);

std::vector<GroundTruthCuboid> ground_truth_boxes(std::span<const GroundTruthRecord> records);

}  // namespace rvdet
