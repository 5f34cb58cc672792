// SPDX-License-Identifier: Apache-2.0
#include "rvdet/postprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rvdet/error.hpp"
#include "rvdet/losses.hpp"
#include "rvdet/targets.hpp"

namespace rvdet {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view token, std::string_view what) {
  token = trim(token);
  T value{};
  const auto r = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || r.ec != std::errc() || r.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kParse, std::string(what) + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct ClusterSums {
  double weight = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double length = 0.0, width = 0.0, height = 0.0;
  double sin_yaw = 0.0, cos_yaw = 0.0;

  void add(const Proposal& p) {
    const double c = p.confidence;
    weight += c;
    x += c * p.box.center.x;
    y += c * p.box.center.y;
    z += c * p.box.center.z;
    length += c * p.box.length;
    width += c * p.box.width;
    height += c * p.box.height;
    sin_yaw += c * std::sin(p.box.yaw);
    cos_yaw += c * std::cos(p.box.yaw);
  }
};

}  // namespace

RssConfig RssConfig::parse(std::string_view text) {
  RssConfig cfg;
  cfg.partitions.clear();
  for (std::string_view item : split(trim(text), ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) {
      throw Error(ErrorCode::kParse, "rss: expected start:stride, got '" + std::string(item) + "'");
    }
    const double start = parse_number<double>(parts[0], "rss start");
    const long long stride = parse_number<long long>(parts[1], "rss stride");
    if (stride < 1 || stride > 1'000'000) {
      throw Error(ErrorCode::kParse, "rss: stride must be >= 1");
    }
    cfg.partitions.push_back({start, static_cast<std::uint32_t>(stride)});
  }
  cfg.validate();
  return cfg;
}

std::string RssConfig::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (i > 0) out << ',';
    out << partitions[i].start << ':' << partitions[i].stride;
  }
  return out.str();
}

void RssConfig::validate() const {
  if (partitions.empty() || partitions.front().start != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "rss: partitions must start at 0");
  }
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i].stride < 1) {
      throw Error(ErrorCode::kInvalidArgument, "rss: stride must be >= 1");
    }
    if (!std::isfinite(partitions[i].start)) {
      throw Error(ErrorCode::kInvalidArgument, "rss: partition start must be finite");
    }
    if (i > 0 && !(partitions[i].start > partitions[i - 1].start)) {
      throw Error(ErrorCode::kInvalidArgument, "rss: partition starts must strictly increase");
    }
  }
}

std::size_t RssConfig::partition_of(double range) const {
  // Ranges below 0 cannot occur for real returns; they fall into the first bucket.
  std::size_t k = 0;
  while (k + 1 < partitions.size() && range >= partitions[k + 1].start) ++k;
  return k;
}

WnmsConfig WnmsConfig::parse(std::string_view text) {
  WnmsConfig cfg;
  text = trim(text);
  if (!text.empty()) {
    for (std::string_view item : split(text, ',')) {
      const auto kv = split(item, '=');
      if (kv.size() != 2) {
        throw Error(ErrorCode::kParse, "wnms: expected key=value, got '" + std::string(item) + "'");
      }
      const std::string_view key = trim(kv[0]);
      if (key == "iou") {
        cfg.iou_threshold = parse_number<double>(kv[1], "wnms iou");
      } else if (key == "score") {
        cfg.score_threshold = parse_number<double>(kv[1], "wnms score");
      } else if (key == "max") {
        cfg.max_outputs = parse_number<std::size_t>(kv[1], "wnms max");
      } else {
        throw Error(ErrorCode::kParse, "wnms: unknown key '" + std::string(key) + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

std::string WnmsConfig::to_string() const {
  std::ostringstream out;
  out << "iou=" << iou_threshold << ",score=" << score_threshold << ",max=" << max_outputs;
  return out.str();
}

void WnmsConfig::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "wnms: iou threshold must lie in [0, 1]");
  }
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "wnms: score threshold must lie in [0, 1]");
  }
}

std::vector<Proposal> rss(std::span<const Proposal> proposals, const RssConfig& config) {
  config.validate();
  std::vector<std::size_t> seen(config.partitions.size(), 0);
  std::vector<Proposal> kept;
  kept.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    const std::size_t k = config.partition_of(p.anchor_range);
    if (seen[k]++ % config.partitions[k].stride == 0) kept.push_back(p);
  }
  return kept;
}

std::vector<Proposal> extract_proposals(const DenseOutput& dense, const RangeImage& image,
                                        double score_threshold) {
  dense.check_shape(image.height(), image.width());
  std::vector<Proposal> out;
  for (std::size_t idx = 0; idx < image.pixel_count(); ++idx) {
    if (!image.valid(idx)) continue;
    const auto logits = dense.logits_at(idx);
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumCategories; ++k) {
      if (logits[k] > logits[best]) best = k;
    }
    const double score = sigmoid(logits[best]);
    if (!(score >= score_threshold)) continue;
    const Point3 anchor{image.at(kXChannel, idx), image.at(kYChannel, idx),
                        image.at(kZChannel, idx)};
    Proposal p;
    p.box = decode(anchor, dense.regression_at(idx), kAllCategories[best]);
    p.confidence = score;
    p.anchor_range = image.at(kRangeChannel, idx);
    out.push_back(p);
  }
  return out;
}

std::vector<Proposal> wnms(std::span<const Proposal> proposals, const WnmsConfig& config) {
  config.validate();
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return proposals[a].confidence > proposals[b].confidence;
  });

  struct Output {
    Proposal proposal;
    std::size_t leader_rank;
  };
  std::vector<Output> outputs;
  std::vector<std::uint8_t> consumed(proposals.size(), 0);

  for (Category category : kAllCategories) {
    std::vector<std::size_t> members;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (proposals[order[rank]].box.category == category) members.push_back(rank);
    }
    std::vector<Proposal> emitted;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t leader_rank = members[m];
      const std::size_t leader = order[leader_rank];
      if (consumed[leader]) continue;
      consumed[leader] = 1;
      const Proposal& head = proposals[leader];
      ClusterSums sums;
      sums.add(head);
      for (std::size_t n = m + 1; n < members.size(); ++n) {
        const std::size_t other = order[members[n]];
        if (consumed[other]) continue;
        if (iou_bev(head.box, proposals[other].box) >= config.iou_threshold) {
          consumed[other] = 1;
          sums.add(proposals[other]);
        }
      }
      Proposal merged = head;
      if (sums.weight > 0.0) {
        const double inv = 1.0 / sums.weight;
        merged.box.center = {sums.x * inv, sums.y * inv, sums.z * inv};
        merged.box.length = sums.length * inv;
        merged.box.width = sums.width * inv;
        merged.box.height = sums.height * inv;
        merged.box.yaw = wrap_angle(std::atan2(sums.sin_yaw, sums.cos_yaw));
      }
      const bool overlaps = std::any_of(emitted.begin(), emitted.end(), [&](const Proposal& e) {
        return iou_bev(e.box, merged.box) >= config.iou_threshold;
      });
      if (overlaps) continue;
      emitted.push_back(merged);
      outputs.push_back({merged, leader_rank});
    }
  }

  std::stable_sort(outputs.begin(), outputs.end(), [](const Output& a, const Output& b) {
    return a.leader_rank < b.leader_rank;
  });
  std::vector<Proposal> result;
  result.reserve(outputs.size());
  for (const Output& o : outputs) {
    if (config.max_outputs != 0 && result.size() >= config.max_outputs) break;
    result.push_back(o.proposal);
  }
  return result;
}

std::vector<Proposal> run_pipeline(const DenseOutput& dense, const RangeImage& image,
                                   const RssConfig& rss_config, const WnmsConfig& wnms_config) {
  const auto proposals = extract_proposals(dense, image, wnms_config.score_threshold);
  const auto subsampled = rss(proposals, rss_config);
  return wnms(subsampled, wnms_config);
}

}  // namespace rvdet
