// SPDX-License-Identifier: Apache-2.0
//
// rvdet command-line tool. Every command writes a <output>.manifest.json
// (or manifest.json inside an output directory) that `rvdet replay` can
// re-run. Exit codes: 0 success, 2 usage or data error.
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvdet/bench.hpp"
#include "rvdet/error.hpp"
#include "rvdet/metrics.hpp"
#include "rvdet/postprocess.hpp"
#include "rvdet/rangeview.hpp"
#include "rvdet/rangeview_io.hpp"
#include "rvdet/records.hpp"
#include "rvdet/simulator.hpp"
#include "rvdet/targets.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;

struct Manifest {
  std::string command;
  std::optional<std::uint64_t> seed;
  Json config = Json::object();
  Json inputs = Json::object();
  Json outputs = Json::object();
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rvdet::Error(rvdet::ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw rvdet::Error(rvdet::ErrorCode::kIo, "write failed: " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_manifest(const fs::path& path, const Manifest& m,
                    const std::vector<std::string>& argv, double duration_s) {
  Json j;
  j["command"] = m.command;
  j["tool_version"] = RVDET_VERSION;
  j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["argv"] = argv;
  j["duration_s"] = duration_s;
  write_text(path, j.dump(2) + "\n");
}

fs::path manifest_beside(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

// Ground truth of one frame. Without an explicit id the file must hold a
// single frame.
std::pair<std::string, std::vector<rvdet::GroundTruthCuboid>> select_frame(
    const std::vector<rvdet::GroundTruthRecord>& records, const std::string& frame_id) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.frame_id);
  std::string id = frame_id;
  if (id.empty()) {
    if (ids.size() > 1) {
      throw rvdet::Error(rvdet::ErrorCode::kInvalidArgument,
                         "ground truth holds several frames; pass --frame-id");
    }
    id = ids.empty() ? "0" : *ids.begin();
  } else if (!records.empty() && !ids.count(id)) {
    throw rvdet::Error(rvdet::ErrorCode::kInvalidArgument, "frame '" + id + "' not in ground truth");
  }
  std::vector<rvdet::GroundTruthCuboid> gts;
  for (const auto& r : records) {
    if (r.frame_id == id) gts.push_back(r.gt);
  }
  return {id, gts};
}

struct Options {
  unsigned threads = 1;

  std::string sim_spec;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out_dir;
  bool sim_targets = false;

  std::string proj_points;
  std::string proj_spec;
  std::string proj_out;

  std::string inf_image;
  std::string inf_gt;
  std::string inf_rss = rvdet::RssConfig{}.to_string();
  std::string inf_wnms = rvdet::WnmsConfig{}.to_string();
  std::string inf_out;
  std::string inf_frame_id;

  std::string eval_dets;
  std::string eval_gt;
  std::string eval_style = "av2";
  std::string eval_out;
  bool eval_no_matches = false;

  std::string bench_image;
  std::string bench_gt;
  std::size_t bench_repeat = 10;
  std::string bench_out;

  std::string replay_manifest;
};

Manifest cmd_simulate(const Options& o) {
  rvdet::SceneSpec spec = o.sim_spec.empty() ? rvdet::SceneSpec{} : rvdet::SceneSpec::load(o.sim_spec);
  if (o.sim_seed) spec.seed = *o.sim_seed;
  spec.validate();
  rvdet::Scene scene = rvdet::generate(spec, o.threads);
  if (o.sim_targets) rvdet::attach_targets(scene.image, rvdet::encode_frame(scene.image, scene.gts));

  const fs::path dir = o.sim_out_dir;
  fs::create_directories(dir);
  const fs::path image_path = dir / "image.rvimg";
  const fs::path gt_path = dir / "gt.jsonl";
  rvdet::save_range_image(image_path, scene.image);
  std::ostringstream gt_text;
  rvdet::write_ground_truth_jsonl(gt_text, std::to_string(spec.seed), scene.gts);
  write_text(gt_path, gt_text.str());

  Manifest m;
  m.command = "simulate";
  m.seed = spec.seed;
  m.config["scene_spec"] = spec.to_config();
  m.config["targets"] = o.sim_targets;
  if (!o.sim_spec.empty()) m.inputs["spec"] = o.sim_spec;
  m.outputs["image"] = image_path.string();
  m.outputs["gt"] = gt_path.string();
  std::cout << "simulated " << scene.gts.size() << " objects, " << scene.image.valid_count()
            << " returns -> " << dir.string() << "\n";
  return m;
}

Manifest cmd_project(const Options& o) {
  const rvdet::RangeImageSpec spec =
      o.proj_spec.empty() ? rvdet::RangeImageSpec{} : rvdet::SceneSpec::load(o.proj_spec).image;
  const auto points = rvdet::load_point_cloud(o.proj_points);
  rvdet::ProjectionStats stats;
  const rvdet::RangeImage image = rvdet::project(points, spec, &stats);
  if (image.valid_count() == 0) {
    std::cerr << "warning: no point falls inside the field of view; image is all invalid\n";
  }
  ensure_parent(o.proj_out);
  rvdet::save_range_image(o.proj_out, image);

  Manifest m;
  m.command = "project";
  m.config["height"] = spec.height;
  m.config["width"] = spec.width;
  m.config["inclination_min"] = spec.inclination_min;
  m.config["inclination_max"] = spec.inclination_max;
  m.config["elongation"] = spec.with_elongation;
  m.inputs["points"] = o.proj_points;
  if (!o.proj_spec.empty()) m.inputs["spec"] = o.proj_spec;
  m.outputs["image"] = o.proj_out;
  std::cout << points.size() << " points, " << image.valid_count() << " valid pixels, "
            << stats.out_of_fov << " out of view, " << stats.collisions << " collisions\n";
  return m;
}

Manifest cmd_infer_oracle(const Options& o) {
  const auto rss_config = rvdet::RssConfig::parse(o.inf_rss);
  const auto wnms_config = rvdet::WnmsConfig::parse(o.inf_wnms);
  const rvdet::RangeImage image = rvdet::load_range_image(o.inf_image);
  const auto records = rvdet::load_ground_truth(o.inf_gt);
  const auto [frame_id, gts] = select_frame(records, o.inf_frame_id);

  const rvdet::DenseOutput dense = rvdet::perfect_dense(image, gts);
  const auto detections = rvdet::run_pipeline(dense, image, rss_config, wnms_config);

  ensure_parent(o.inf_out);
  std::ostringstream text;
  rvdet::write_detections_jsonl(text, frame_id, detections);
  write_text(o.inf_out, text.str());

  Manifest m;
  m.command = "infer-oracle";
  m.config["rss"] = rss_config.to_string();
  m.config["wnms"] = wnms_config.to_string();
  m.config["frame_id"] = frame_id;
  m.inputs["image"] = o.inf_image;
  m.inputs["gt"] = o.inf_gt;
  m.outputs["detections"] = o.inf_out;
  std::cout << detections.size() << " detections for " << gts.size() << " objects\n";
  return m;
}

Manifest cmd_eval(const Options& o) {
  rvdet::EvalConfig config;
  if (o.eval_style == "av2") {
    config = rvdet::EvalConfig::av2();
  } else if (o.eval_style == "waymo") {
    config = rvdet::EvalConfig::waymo();
  } else {
    throw rvdet::Error(rvdet::ErrorCode::kInvalidArgument,
                       "unknown style '" + o.eval_style + "' (expected av2 or waymo)");
  }
  const auto dets = rvdet::load_detections(o.eval_dets);
  const auto gts = rvdet::load_ground_truth(o.eval_gt);
  const auto frames = rvdet::group_frames(dets, gts);
  const rvdet::EvalReport report = rvdet::evaluate(frames, config);

  ensure_parent(o.eval_out);
  write_text(o.eval_out, report.to_json(!o.eval_no_matches) + "\n");
  std::cout << report.table();

  Manifest m;
  m.command = "eval";
  m.config["style"] = o.eval_style;
  m.config["include_matches"] = !o.eval_no_matches;
  m.inputs["detections"] = o.eval_dets;
  m.inputs["gt"] = o.eval_gt;
  m.outputs["report"] = o.eval_out;
  return m;
}

Manifest cmd_bench(const Options& o) {
  const rvdet::RangeImage image = rvdet::load_range_image(o.bench_image);
  std::vector<rvdet::GroundTruthCuboid> gts;
  if (!o.bench_gt.empty()) gts = select_frame(rvdet::load_ground_truth(o.bench_gt), "").second;
  const rvdet::BenchResult result = rvdet::run_bench(image, gts, o.bench_repeat);
  const std::string json = result.to_json() + "\n";
  std::cout << json;
  Manifest m;
  m.command = "bench";
  m.config["repeat"] = o.bench_repeat;
  m.inputs["image"] = o.bench_image;
  if (!o.bench_gt.empty()) m.inputs["gt"] = o.bench_gt;
  if (!o.bench_out.empty()) {
    ensure_parent(o.bench_out);
    write_text(o.bench_out, json);
    m.outputs["report"] = o.bench_out;
  }
  return m;
}

int run(const std::vector<std::string>& args, bool allow_replay);

int cmd_replay(const Options& o) {
  std::ifstream in(o.replay_manifest);
  if (!in) throw rvdet::Error(rvdet::ErrorCode::kIo, "cannot open " + o.replay_manifest);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw rvdet::Error(rvdet::ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  if (!j.is_object() || !j.contains("argv") || !j["argv"].is_array()) {
    throw rvdet::Error(rvdet::ErrorCode::kParse, "manifest: missing argv");
  }
  std::vector<std::string> argv;
  for (const auto& a : j["argv"]) {
    if (!a.is_string()) throw rvdet::Error(rvdet::ErrorCode::kParse, "manifest: bad argv");
    argv.push_back(a.get<std::string>());
  }
  return run(argv, false);
}

int run(const std::vector<std::string>& args, bool allow_replay) {
  CLI::App app{"Range-view 3D detection pipeline tools", "rvdet"};
  app.set_version_flag("--version", std::string(RVDET_VERSION));
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker thread cap")->check(CLI::Range(1U, 256U));

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic lidar scene");
  sim->add_option("--spec", o.sim_spec, "Scene spec file (key = value)")->check(CLI::ExistingFile);
  sim->add_option("--seed", o.sim_seed, "RNG seed (overrides the spec)");
  sim->add_option("--out-dir", o.sim_out_dir, "Output directory")->required();
  sim->add_flag("--targets", o.sim_targets, "Append regression target channels to the image");

  auto* proj = app.add_subcommand("project", "Project a point cloud into a range image");
  proj->add_option("--points", o.proj_points, "CSV or RVPTS1 point cloud")->required();
  proj->add_option("--spec", o.proj_spec, "Scene spec file; its image settings are used");
  proj->add_option("--out", o.proj_out, "Output RVIMG1 file")->required();

  auto* inf = app.add_subcommand("infer-oracle", "Run the pipeline on the perfect predictor");
  inf->add_option("--image", o.inf_image, "RVIMG1 range image")->required();
  inf->add_option("--gt", o.inf_gt, "Ground truth JSON lines")->required();
  inf->add_option("--rss", o.inf_rss, "Range subsampling, start:stride[,start:stride...]");
  inf->add_option("--wnms", o.inf_wnms, "Weighted NMS, iou=..,score=..,max=..");
  inf->add_option("--out", o.inf_out, "Output detections JSON lines")->required();
  inf->add_option("--frame-id", o.inf_frame_id, "Frame to use from the ground truth file");

  auto* ev = app.add_subcommand("eval", "Evaluate detections against ground truth");
  ev->add_option("--dets", o.eval_dets, "Detections JSON lines")->required();
  ev->add_option("--gt", o.eval_gt, "Ground truth JSON lines")->required();
  ev->add_option("--style", o.eval_style, "av2 or waymo");
  ev->add_option("--out", o.eval_out, "Output report JSON")->required();
  ev->add_flag("--no-matches", o.eval_no_matches, "Omit per-match audit lists");

  auto* bench = app.add_subcommand("bench", "Time the non-network pipeline stages");
  bench->add_option("--image", o.bench_image, "RVIMG1 range image")->required();
  bench->add_option("--gt", o.bench_gt, "Ground truth for the oracle predictor and eval stage");
  bench->add_option("--repeat", o.bench_repeat, "Number of timed runs")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1'000'000}));
  bench->add_option("--out", o.bench_out, "Also write the JSON report here");

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", o.replay_manifest, "Manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  const auto start = std::chrono::steady_clock::now();
  Manifest m;
  fs::path manifest_path;
  if (sim->parsed()) {
    m = cmd_simulate(o);
    manifest_path = fs::path(o.sim_out_dir) / "manifest.json";
  } else if (proj->parsed()) {
    m = cmd_project(o);
    manifest_path = manifest_beside(o.proj_out);
  } else if (inf->parsed()) {
    m = cmd_infer_oracle(o);
    manifest_path = manifest_beside(o.inf_out);
  } else if (ev->parsed()) {
    m = cmd_eval(o);
    manifest_path = manifest_beside(o.eval_out);
  } else if (bench->parsed()) {
    m = cmd_bench(o);
    if (!o.bench_out.empty()) manifest_path = manifest_beside(o.bench_out);
  } else if (replay->parsed()) {
    if (!allow_replay) {
      throw rvdet::Error(rvdet::ErrorCode::kInvalidArgument, "a manifest cannot replay another replay");
    }
    return cmd_replay(o);
  }
  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!manifest_path.empty()) write_manifest(manifest_path, m, args, duration);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args, true);
  } catch (const rvdet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
