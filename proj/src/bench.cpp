// SPDX-License-Identifier: Apache-2.0
#include "rvdet/bench.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "rvdet/error.hpp"
#include "rvdet/metrics.hpp"
#include "rvdet/simulator.hpp"

namespace rvdet {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void summarize(StageTiming& stage) {
  const auto n = static_cast<double>(stage.samples_ms.size());
  stage.mean_ms = std::accumulate(stage.samples_ms.begin(), stage.samples_ms.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : stage.samples_ms) ss += (s - stage.mean_ms) * (s - stage.mean_ms);
  stage.stddev_ms = stage.samples_ms.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  stage.ops_per_sec = stage.mean_ms > 0.0 ? 1000.0 / stage.mean_ms : 0.0;
}

}  // namespace

double BenchResult::pipeline_mean_ms() const {
  double total = 0.0;
  for (const StageTiming& s : stages) {
    if (s.name != "eval") total += s.mean_ms;
  }
  return total;
}

std::string BenchResult::to_json() const {
  nlohmann::ordered_json j;
  j["repeat"] = repeat;
  j["height"] = height;
  j["width"] = width;
  j["num_points"] = num_points;
  j["num_detections"] = num_detections;
  auto& stages_json = j["stages"];
  stages_json = nlohmann::ordered_json::array();
  for (const StageTiming& s : stages) {
    nlohmann::ordered_json st;
    st["name"] = s.name;
    st["samples"] = s.samples_ms.size();
    st["mean_ms"] = s.mean_ms;
    st["stddev_ms"] = s.stddev_ms;
    st["ops_per_sec"] = s.ops_per_sec;
    stages_json.push_back(std::move(st));
  }
  j["pipeline_mean_ms"] = pipeline_mean_ms();
  return j.dump(2);
}

BenchResult run_bench(const RangeImage& image, std::span<const GroundTruthCuboid> gts,
                      std::size_t repeat, const RssConfig& rss_config,
                      const WnmsConfig& wnms_config) {
  if (repeat == 0) throw Error(ErrorCode::kInvalidArgument, "repeat must be >= 1");
  rss_config.validate();
  wnms_config.validate();

  const std::vector<LidarPoint> points = image_points(image);
  const DenseOutput dense = perfect_dense(image, gts);
  const EvalConfig eval_config = EvalConfig::av2();
  const std::vector<GroundTruthCuboid> gt_list(gts.begin(), gts.end());

  BenchResult result;
  result.repeat = repeat;
  result.height = image.height();
  result.width = image.width();
  result.num_points = points.size();
  for (std::string_view name : kBenchStages) result.stages.push_back({std::string(name), {}});

  for (std::size_t i = 0; i < repeat; ++i) {
    auto t0 = Clock::now();
    RangeImage projected = points.empty() ? RangeImage(image.spec())
                                          : project(points, image.spec());
    result.stages[0].samples_ms.push_back(elapsed_ms(t0));

    t0 = Clock::now();
    const auto proposals = extract_proposals(dense, projected, wnms_config.score_threshold);
    result.stages[1].samples_ms.push_back(elapsed_ms(t0));

    t0 = Clock::now();
    const auto kept = rss(proposals, rss_config);
    result.stages[2].samples_ms.push_back(elapsed_ms(t0));

    t0 = Clock::now();
    const auto detections = wnms(kept, wnms_config);
    result.stages[3].samples_ms.push_back(elapsed_ms(t0));

    t0 = Clock::now();
    const std::vector<EvalFrame> frames = {{"bench", detections, gt_list}};
    const EvalReport report = evaluate(frames, eval_config);
    result.stages[4].samples_ms.push_back(elapsed_ms(t0));

    result.num_detections = detections.size();
    (void)report;
  }
  for (StageTiming& s : result.stages) summarize(s);
  return result;
}

}  // namespace rvdet
