// SPDX-License-Identifier: Apache-2.0
#include "rvdet/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "rvdet/error.hpp"
#include "rvdet/rng.hpp"
#include "rvdet/targets.hpp"

namespace rvdet {
namespace {

constexpr int kMaxPlacementAttempts = 10'000;
constexpr int kMaxNudges = 64;
// Objects keep this much clearance between their footprint circle and the sensor.
constexpr double kSensorClearance = 1.0;

struct BoxHit {
  double t = 0.0;
  std::size_t axis = 0;  // box-frame axis of the entry face
};

std::optional<BoxHit> slab_hit(const Point3& dir, const Cuboid& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // Ray origin (sensor at 0) and direction expressed in the box frame.
  const double ox = -(c * box.center.x + s * box.center.y);
  const double oy = -(-s * box.center.x + c * box.center.y);
  const double oz = -box.center.z;
  const std::array<double, 3> origin = {ox, oy, oz};
  const std::array<double, 3> d = {c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
  const std::array<double, 3> half = {0.5 * box.length, 0.5 * box.width, 0.5 * box.height};

  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  std::size_t axis = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(origin[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t1 = (-half[a] - origin[a]) / d[a];
    double t2 = (half[a] - origin[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > t_enter) {
      t_enter = t1;
      axis = a;
    }
    t_exit = std::min(t_exit, t2);
  }
  if (t_enter > t_exit || t_enter <= 0.0) return std::nullopt;
  return BoxHit{t_enter, axis};
}

double to_float_precision(double v) {
  // The volatile store forces the narrowing; GCC 11 at -O3 can otherwise
  // drop the double -> float -> double round trip when it vectorizes.
  volatile float narrowed = static_cast<float>(v);
  return static_cast<double>(narrowed);
}

Point3 to_float_precision(const Point3& p) {
  return {to_float_precision(p.x), to_float_precision(p.y), to_float_precision(p.z)};
}

// Moves a surface hit along the ray until its float32-rounded position is
// inside the box (closed boundary). Returns nullopt if that never happens.
std::optional<Point3> settle_inside(const Point3& dir, const Cuboid& box, double t) {
  double step = std::max(t, 1.0) * 1e-9;
  for (int i = 0; i < kMaxNudges; ++i) {
    const Point3 p = to_float_precision(t * dir);
    if (contains_point(box, p)) return p;
    t += step;
    step *= 2.0;
  }
  return std::nullopt;
}

Point3 box_face_normal(const Cuboid& box, std::size_t axis) {
  if (axis == 2) return {0.0, 0.0, 1.0};
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return axis == 0 ? Point3{c, s, 0.0} : Point3{-s, c, 0.0};
}

double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

void render_rows(const RangeImageSpec& spec, std::span<const Cuboid> boxes, bool ground,
                 double sensor_height, double max_range, std::uint32_t row_begin,
                 std::uint32_t row_end, RangeImage& image) {
  for (std::uint32_t row = row_begin; row < row_end; ++row) {
    const double inclination = inclination_bin_center(spec, row);
    const double ci = std::cos(inclination);
    const double si = std::sin(inclination);
    for (std::uint32_t col = 0; col < spec.width; ++col) {
      const double azimuth = azimuth_bin_center(spec, col);
      const Point3 dir{ci * std::cos(azimuth), ci * std::sin(azimuth), si};

      double best_t = max_range;
      std::optional<std::size_t> best_box;
      std::size_t best_axis = 0;
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        const auto hit = slab_hit(dir, boxes[b]);
        if (hit && hit->t <= best_t) {
          if (!best_box || hit->t < best_t) {
            best_t = hit->t;
            best_box = b;
            best_axis = hit->axis;
          }
        }
      }
      bool ground_hit = false;
      if (ground && dir.z < 0.0) {
        const double t = sensor_height / -dir.z;
        if (t < best_t) {
          best_t = t;
          ground_hit = true;
        }
      }

      LidarPoint point;
      if (ground_hit) {
        point.position = to_float_precision(best_t * dir);
        point.intensity = std::abs(dir.z);
      } else if (best_box) {
        const Cuboid& box = boxes[*best_box];
        const auto settled = settle_inside(dir, box, best_t);
        if (!settled) continue;
        point.position = *settled;
        point.intensity = std::abs(dot(dir, box_face_normal(box, best_axis)));
      } else {
        continue;
      }
      image.set_return(image.pixel(row, col), point);
    }
  }
}

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse, "scene spec: bad value for '" + key + "': '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = lower(text);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error(ErrorCode::kParse, "scene spec: bad boolean for '" + key + "': '" + text + "'");
}

DimRange parse_dim_range(const std::string& key, const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() == 1) {
    const double v = parse_value<double>(key, parts[0]);
    return {v, v};
  }
  if (parts.size() != 2) {
    throw Error(ErrorCode::kParse, "scene spec: '" + key + "' expects min:max ranges");
  }
  return {parse_value<double>(key, parts[0]), parse_value<double>(key, parts[1])};
}

std::string fmt_double(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void check_range(const DimRange& r, const std::string& what) {
  if (!(r.min > 0.0) || !(r.max >= r.min) || !std::isfinite(r.max)) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: bad dimension range for " + what);
  }
}

}  // namespace

std::optional<double> ray_cuboid_hit(const Point3& direction, const Cuboid& box) {
  const auto hit = slab_hit(direction, box);
  if (!hit) return std::nullopt;
  return hit->t;
}

SceneSpec SceneSpec::parse(std::istream& in) {
  SceneSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse,
                  "scene spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "seed") {
      spec.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "min_objects") {
      spec.min_objects = parse_value<std::uint32_t>(key, value);
    } else if (key == "max_objects") {
      spec.max_objects = parse_value<std::uint32_t>(key, value);
    } else if (key == "categories") {
      spec.categories.clear();
      for (const std::string& name : split(value, ',')) {
        const auto c = parse_category(upper(name));
        if (!c) throw Error(ErrorCode::kParse, "scene spec: unknown category '" + name + "'");
        spec.categories.push_back(*c);
      }
    } else if (key == "radius_min") {
      spec.radius_min = parse_value<double>(key, value);
    } else if (key == "radius_max") {
      spec.radius_max = parse_value<double>(key, value);
    } else if (key == "placement_margin") {
      spec.placement_margin = parse_value<double>(key, value);
    } else if (key == "ground") {
      spec.ground = parse_bool(key, value);
    } else if (key == "sensor_height") {
      spec.sensor_height = parse_value<double>(key, value);
    } else if (key == "max_range") {
      spec.max_range = parse_value<double>(key, value);
    } else if (key == "height") {
      spec.image.height = parse_value<std::uint32_t>(key, value);
    } else if (key == "width") {
      spec.image.width = parse_value<std::uint32_t>(key, value);
    } else if (key == "inclination_min") {
      spec.image.inclination_min = parse_value<double>(key, value);
    } else if (key == "inclination_max") {
      spec.image.inclination_max = parse_value<double>(key, value);
    } else if (key == "elongation") {
      spec.image.with_elongation = parse_bool(key, value);
    } else if (key.rfind("dims.", 0) == 0) {
      const auto c = parse_category(upper(key.substr(5)));
      if (!c) throw Error(ErrorCode::kParse, "scene spec: unknown category in '" + key + "'");
      const auto parts = split(value, ',');
      if (parts.size() != 3) {
        throw Error(ErrorCode::kParse, "scene spec: '" + key + "' expects l,w,h ranges");
      }
      spec.dims[index_of(*c)] = {parse_dim_range(key, parts[0]), parse_dim_range(key, parts[1]),
                                 parse_dim_range(key, parts[2])};
    } else {
      throw Error(ErrorCode::kParse, "scene spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

SceneSpec SceneSpec::parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

SceneSpec SceneSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse(in);
}

std::string SceneSpec::to_config() const {
  std::ostringstream out;
  out << "seed = " << seed << '\n';
  out << "min_objects = " << min_objects << '\n';
  out << "max_objects = " << max_objects << '\n';
  out << "categories = ";
  for (std::size_t i = 0; i < categories.size(); ++i) {
    out << (i ? "," : "") << category_name(categories[i]);
  }
  out << '\n';
  out << "radius_min = " << fmt_double(radius_min) << '\n';
  out << "radius_max = " << fmt_double(radius_max) << '\n';
  out << "placement_margin = " << fmt_double(placement_margin) << '\n';
  out << "ground = " << (ground ? "true" : "false") << '\n';
  out << "sensor_height = " << fmt_double(sensor_height) << '\n';
  out << "max_range = " << fmt_double(max_range) << '\n';
  out << "height = " << image.height << '\n';
  out << "width = " << image.width << '\n';
  out << "inclination_min = " << fmt_double(image.inclination_min) << '\n';
  out << "inclination_max = " << fmt_double(image.inclination_max) << '\n';
  out << "elongation = " << (image.with_elongation ? "true" : "false") << '\n';
  for (Category c : kAllCategories) {
    const CategoryDims& d = dims[index_of(c)];
    out << "dims." << category_name(c) << " = " << fmt_double(d.length.min) << ':'
        << fmt_double(d.length.max) << ',' << fmt_double(d.width.min) << ':'
        << fmt_double(d.width.max) << ',' << fmt_double(d.height.min) << ':'
        << fmt_double(d.height.max) << '\n';
  }
  return out.str();
}

void SceneSpec::validate() const {
  image.validate();
  if (min_objects > max_objects) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: min_objects > max_objects");
  }
  if (max_objects > 10'000) throw Error(ErrorCode::kInvalidArgument, "scene spec: too many objects");
  if (categories.empty()) throw Error(ErrorCode::kInvalidArgument, "scene spec: no categories");
  if (!(radius_min > 0.0) || !(radius_max >= radius_min) || !std::isfinite(radius_max)) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: need 0 < radius_min <= radius_max");
  }
  if (!(placement_margin >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: placement_margin must be >= 0");
  }
  if (!(sensor_height > 0.0) || !std::isfinite(sensor_height)) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: sensor_height must be positive");
  }
  if (!(max_range > 0.0) || !std::isfinite(max_range)) {
    throw Error(ErrorCode::kInvalidArgument, "scene spec: max_range must be positive");
  }
  for (Category c : kAllCategories) {
    const CategoryDims& d = dims[index_of(c)];
    const std::string name(category_name(c));
    check_range(d.length, name);
    check_range(d.width, name);
    check_range(d.height, name);
  }
}

Scene render(const RangeImageSpec& spec, std::span<const Cuboid> boxes, bool ground,
             double sensor_height, double max_range, unsigned threads) {
  spec.validate();
  for (const Cuboid& b : boxes) validate(b);
  Scene scene{RangeImage(spec), {}};

  const unsigned workers =
      std::clamp<unsigned>(threads == 0 ? 1U : threads, 1U, std::max<std::uint32_t>(spec.height, 1));
  if (workers == 1) {
    render_rows(spec, boxes, ground, sensor_height, max_range, 0, spec.height, scene.image);
  } else {
    // Each worker owns a disjoint block of rows.
    std::vector<std::thread> pool;
    const std::uint32_t chunk = (spec.height + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint32_t begin = std::min<std::uint32_t>(spec.height, w * chunk);
      const std::uint32_t end = std::min<std::uint32_t>(spec.height, begin + chunk);
      pool.emplace_back(render_rows, std::cref(spec), boxes, ground, sensor_height, max_range,
                        begin, end, std::ref(scene.image));
    }
    for (auto& t : pool) t.join();
  }

  scene.gts.reserve(boxes.size());
  for (const Cuboid& box : boxes) scene.gts.push_back({box, 0.0, 0});
  for (std::size_t idx = 0; idx < scene.image.pixel_count(); ++idx) {
    if (!scene.image.valid(idx)) continue;
    const Point3 p{scene.image.at(kXChannel, idx), scene.image.at(kYChannel, idx),
                   scene.image.at(kZChannel, idx)};
    for (GroundTruthCuboid& g : scene.gts) {
      if (contains_point(g.box, p)) ++g.num_interior_points;
    }
  }
  return scene;
}

Scene generate(const SceneSpec& spec, unsigned threads) {
  spec.validate();
  Rng rng(spec.seed);
  const auto count = static_cast<std::uint32_t>(rng.uniform_int(spec.min_objects, spec.max_objects));
  std::vector<Cuboid> boxes;
  boxes.reserve(count);
  int attempts = 0;
  while (boxes.size() < count) {
    if (++attempts > kMaxPlacementAttempts) {
      throw Error(ErrorCode::kPlacementFailed, "placement failed");
    }
    Cuboid box;
    box.category = spec.categories[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(spec.categories.size()) - 1))];
    const CategoryDims& d = spec.dims[index_of(box.category)];
    box.length = rng.uniform(d.length.min, d.length.max);
    box.width = rng.uniform(d.width.min, d.width.max);
    box.height = rng.uniform(d.height.min, d.height.max);
    const double radius = rng.uniform(spec.radius_min, spec.radius_max);
    const double azimuth = rng.uniform(-std::numbers::pi, std::numbers::pi);
    box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    box.center = {radius * std::cos(azimuth), radius * std::sin(azimuth),
                  -spec.sensor_height + 0.5 * box.height};

    const double reach = box.bev_half_diagonal();
    if (radius - reach < kSensorClearance) continue;
    const bool overlaps = std::any_of(boxes.begin(), boxes.end(), [&](const Cuboid& other) {
      const double gap = std::hypot(box.center.x - other.center.x, box.center.y - other.center.y);
      return gap < reach + other.bev_half_diagonal() + spec.placement_margin;
    });
    if (overlaps) continue;
    boxes.push_back(box);
  }
  return render(spec.image, boxes, spec.ground, spec.sensor_height, spec.max_range, threads);
}

DenseOutput perfect_dense(const RangeImage& image, std::span<const GroundTruthCuboid> gts) {
  const FrameTargets frame = encode_frame(image, gts);
  DenseOutput dense(image.height(), image.width(), -kOracleLogit);
  for (std::size_t idx = 0; idx < frame.pixel_count(); ++idx) {
    const int g = frame.gt_index[idx];
    if (g == kBackground) continue;
    dense.logits_at(idx)[index_of(gts[static_cast<std::size_t>(g)].box.category)] = kOracleLogit;
    const auto t = frame.targets[idx].to_array();
    std::copy(t.begin(), t.end(), dense.regression_at(idx).begin());
  }
  return dense;
}

DenseOutput corrupt(const DenseOutput& dense, const NoiseSpec& noise, std::uint64_t seed) {
  DenseOutput out = dense;
  Rng rng(seed);
  for (std::size_t idx = 0; idx < out.pixel_count(); ++idx) {
    auto r = out.regression_at(idx);
    for (std::size_t k = 0; k < 3; ++k) {
      const double n = rng.normal();
      if (noise.center_sigma > 0.0) r[k] += noise.center_sigma * n;
    }
    for (std::size_t k = 3; k < 6; ++k) {
      const double n = rng.normal();
      if (noise.size_sigma > 0.0) r[k] += noise.size_sigma * n;
    }
    const double yaw_noise = rng.normal();
    if (noise.yaw_sigma > 0.0) {
      const double heading = std::atan2(r[6], r[7]) + noise.yaw_sigma * yaw_noise;
      r[6] = std::sin(heading);
      r[7] = std::cos(heading);
    }
    auto logits = out.logits_at(idx);
    for (double& l : logits) {
      const double n = rng.normal();
      if (noise.logit_sigma > 0.0) l += noise.logit_sigma * n;
    }
  }
  return out;
}

}  // namespace rvdet
