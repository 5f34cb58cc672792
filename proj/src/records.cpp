// SPDX-License-Identifier: Apache-2.0
#include "rvdet/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <string_view>

#include <json.hpp>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

using Json = nlohmann::ordered_json;

std::string format_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double number_field(const Json& obj, const char* key, std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": missing numeric field '" +
                                       key + "'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kParse,
                "line " + std::to_string(line_no) + ": non-finite field '" + key + "'");
  }
  return v;
}

std::string frame_field(const Json& obj, std::size_t line_no) {
  const auto it = obj.find("frame_id");
  if (it == obj.end()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": missing 'frame_id'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad 'frame_id'");
}

// Parses the shared box fields; returns false and records the name if the
// category is unknown.
bool parse_box(const Json& obj, std::size_t line_no, Cuboid& box,
               std::set<std::string>& unknown) {
  const auto cat = obj.find("category");
  if (cat == obj.end() || !cat->is_string()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": missing 'category'");
  }
  box.center = {number_field(obj, "x", line_no), number_field(obj, "y", line_no),
                number_field(obj, "z", line_no)};
  box.length = number_field(obj, "l", line_no);
  box.width = number_field(obj, "w", line_no);
  box.height = number_field(obj, "h", line_no);
  box.yaw = number_field(obj, "yaw", line_no);
  if (!(box.length > 0.0 && box.width > 0.0 && box.height > 0.0)) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": dims must be positive");
  }
  const auto parsed = parse_category(cat->get<std::string>());
  if (!parsed) {
    unknown.insert(cat->get<std::string>());
    return false;
  }
  box.category = *parsed;
  return true;
}

template <typename Fn>
void for_each_object(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected an object");
    }
    fn(obj, line_no);
  }
}

void throw_unknown(const std::set<std::string>& unknown) {
  if (unknown.empty()) return;
  std::string names;
  for (const std::string& n : unknown) {
    if (!names.empty()) names += ", ";
    names += n;
  }
  throw Error(ErrorCode::kParse, "unknown categories: " + names);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

void write_detections_jsonl(std::ostream& out, const std::string& frame_id,
                            std::span<const Proposal> detections) {
  const std::string id = Json(frame_id).dump();
  for (const Proposal& d : detections) {
    out << "{\"frame_id\":" << id << ",\"category\":\"" << category_name(d.box.category)
        << "\",\"x\":" << format_g9(d.box.center.x) << ",\"y\":" << format_g9(d.box.center.y)
        << ",\"z\":" << format_g9(d.box.center.z) << ",\"l\":" << format_g9(d.box.length)
        << ",\"w\":" << format_g9(d.box.width) << ",\"h\":" << format_g9(d.box.height)
        << ",\"yaw\":" << format_g9(d.box.yaw) << ",\"score\":" << format_g9(d.confidence)
        << "}\n";
  }
}

void write_ground_truth_jsonl(std::ostream& out, const std::string& frame_id,
                              std::span<const GroundTruthCuboid> gts) {
  for (const GroundTruthCuboid& g : gts) {
    Json obj;
    obj["frame_id"] = frame_id;
    obj["category"] = std::string(category_name(g.box.category));
    obj["x"] = g.box.center.x;
    obj["y"] = g.box.center.y;
    obj["z"] = g.box.center.z;
    obj["l"] = g.box.length;
    obj["w"] = g.box.width;
    obj["h"] = g.box.height;
    obj["yaw"] = g.box.yaw;
    obj["num_interior_points"] = g.num_interior_points;
    out << obj.dump() << '\n';
  }
}

std::vector<DetectionRecord> read_detections_jsonl(std::istream& in) {
  std::vector<DetectionRecord> records;
  std::set<std::string> unknown;
  for_each_object(in, [&](const Json& obj, std::size_t line_no) {
    DetectionRecord r;
    r.frame_id = frame_field(obj, line_no);
    const bool known = parse_box(obj, line_no, r.detection.box, unknown);
    r.detection.confidence = number_field(obj, "score", line_no);
    if (!(r.detection.confidence >= 0.0 && r.detection.confidence <= 1.0)) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": score outside [0, 1]");
    }
    r.detection.anchor_range = r.detection.box.center.norm();
    if (known) records.push_back(std::move(r));
  });
  throw_unknown(unknown);
  return records;
}

std::vector<GroundTruthRecord> read_ground_truth_jsonl(std::istream& in) {
  std::vector<GroundTruthRecord> records;
  std::set<std::string> unknown;
  for_each_object(in, [&](const Json& obj, std::size_t line_no) {
    GroundTruthRecord r;
    r.frame_id = frame_field(obj, line_no);
    const bool known = parse_box(obj, line_no, r.gt.box, unknown);
    const auto pts = obj.find("num_interior_points");
    if (pts == obj.end() || !pts->is_number_integer() || pts->get<long long>() < 0 ||
        pts->get<long long>() > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                         ": 'num_interior_points' must be a non-negative integer");
    }
    r.gt.num_interior_points = static_cast<int>(pts->get<long long>());
    if (known) records.push_back(std::move(r));
  });
  throw_unknown(unknown);
  return records;
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_detections_jsonl(in);
}

std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_ground_truth_jsonl(in);
}

std::vector<GroundTruthCuboid> ground_truth_boxes(std::span<const GroundTruthRecord> records) {
  std::vector<GroundTruthCuboid> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.gt);
  return out;
}

}  // namespace rvdet
