// SPDX-License-Identifier: Apache-2.0
#include "rvdet/rangeview_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

constexpr std::uint32_t kMaxChannels = 256;
constexpr std::uint32_t kMaxNameLength = 1024;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFFU), static_cast<char>((v >> 8) & 0xFFU),
                         static_cast<char>((v >> 16) & 0xFFU),
                         static_cast<char>((v >> 24) & 0xFFU)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class ByteReader {
 public:
  ByteReader(std::span<const char> bytes, std::string_view what) : bytes_(bytes), what_(what) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kParse, std::string(what_) + ": truncated input");
    }
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + i]);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  std::uint8_t byte() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

 private:
  std::span<const char> bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

std::vector<char> slurp(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool parse_double(std::string_view token, double& out) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() &&
         (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto result = std::from_chars(token.data(), token.data() + token.size(), out);
  return result.ec == std::errc() && result.ptr == token.data() + token.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_range_image(std::ostream& out, const RangeImage& image) {
  out.write(kRangeImageMagic.data(), static_cast<std::streamsize>(kRangeImageMagic.size()));
  put_u32(out, image.height());
  put_u32(out, image.width());
  put_u32(out, static_cast<std::uint32_t>(image.num_channels()));
  put_f32(out, image.spec().inclination_min);
  put_f32(out, image.spec().inclination_max);
  for (const std::string& name : image.channel_names()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (std::size_t ch = 0; ch < image.num_channels(); ++ch) {
    for (double v : image.channel(ch)) put_f32(out, v);
  }
  std::uint8_t current = 0;
  int bit = 0;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (image.valid(i)) current |= static_cast<std::uint8_t>(1U << bit);
    if (++bit == 8) {
      out.put(static_cast<char>(current));
      current = 0;
      bit = 0;
    }
  }
  if (bit != 0) out.put(static_cast<char>(current));
  if (!out) throw Error(ErrorCode::kIo, "failed to write range image");
}

RangeImage parse_range_image(std::span<const char> bytes) {
  ByteReader reader(bytes, "RVIMG1");
  if (reader.take(kRangeImageMagic.size()) != kRangeImageMagic) {
    throw Error(ErrorCode::kParse, "not an RVIMG1 file (bad magic)");
  }
  RangeImageSpec spec;
  spec.height = reader.u32();
  spec.width = reader.u32();
  const std::uint32_t channels = reader.u32();
  spec.inclination_min = reader.f32();
  spec.inclination_max = reader.f32();
  if (channels == 0 || channels > kMaxChannels) {
    throw Error(ErrorCode::kParse, "RVIMG1: unsupported channel count " + std::to_string(channels));
  }
  std::vector<std::string> names;
  names.reserve(channels);
  for (std::uint32_t i = 0; i < channels; ++i) {
    const std::uint32_t len = reader.u32();
    if (len == 0 || len > kMaxNameLength) {
      throw Error(ErrorCode::kParse, "RVIMG1: bad channel name length");
    }
    names.emplace_back(reader.take(len));
  }
  spec.with_elongation = names.size() > kElongationChannel && names[kElongationChannel] == "elongation";

  if (spec.height == 0 || spec.width == 0) throw Error(ErrorCode::kParse, "RVIMG1: empty image");
  const std::uint64_t pixels = static_cast<std::uint64_t>(spec.height) * spec.width;
  const std::uint64_t payload = pixels * channels * 4U + (pixels + 7U) / 8U;
  if (payload > reader.remaining()) throw Error(ErrorCode::kParse, "RVIMG1: truncated input");

  RangeImage image = [&] {
    try {
      return RangeImage(spec, names);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, std::string("RVIMG1: ") + e.what());
    }
  }();
  for (std::uint32_t ch = 0; ch < channels; ++ch) {
    auto values = image.channel(ch);
    for (double& v : values) v = reader.f32();
  }
  std::uint8_t current = 0;
  for (std::uint64_t i = 0; i < pixels; ++i) {
    if (i % 8 == 0) current = reader.byte();
    image.set_valid(i, ((current >> (i % 8)) & 1U) != 0);
  }
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (!image.valid(i)) continue;
    const double range = image.at(kRangeChannel, i);
    const Point3 p{image.at(kXChannel, i), image.at(kYChannel, i), image.at(kZChannel, i)};
    if (!(range > 0.0) || !std::isfinite(range) || !p.finite()) {
      throw Error(ErrorCode::kParse, "RVIMG1: valid pixel with non-positive or non-finite return");
    }
  }
  return image;
}

RangeImage read_range_image(std::istream& in) {
  const auto bytes = slurp(in);
  return parse_range_image(bytes);
}

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return slurp(in);
}

void save_range_image(const std::filesystem::path& path, const RangeImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_range_image(out, image);
}

RangeImage load_range_image(const std::filesystem::path& path) {
  return parse_range_image(read_file_bytes(path));
}

std::vector<LidarPoint> read_points_csv(std::istream& in, bool* has_elongation) {
  std::vector<LidarPoint> points;
  std::string line;
  std::size_t line_no = 0;
  bool any_elongation = false;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (view[view.find_first_not_of(" \t")] == '#') continue;
    const auto fields = split_commas(view);
    std::array<double, 5> values{};
    bool numeric = fields.size() == 4 || fields.size() == 5;
    for (std::size_t i = 0; numeric && i < fields.size(); ++i) {
      numeric = parse_double(fields[i], values[i]) && std::isfinite(values[i]);
    }
    if (!numeric) {
      // A header is a leading row in which no field parses as a number.
      bool any_number = false;
      for (std::string_view f : fields) {
        double ignored = 0.0;
        any_number = any_number || parse_double(f, ignored);
      }
      if (header_allowed && !any_number) {
        header_allowed = false;
        continue;
      }
      throw Error(ErrorCode::kParse, "point CSV line " + std::to_string(line_no) +
                                         ": expected 4 or 5 numeric fields");
    }
    header_allowed = false;
    LidarPoint p;
    p.position = {values[0], values[1], values[2]};
    p.intensity = values[3];
    if (fields.size() == 5) {
      p.elongation = values[4];
      any_elongation = true;
    }
    points.push_back(p);
  }
  if (has_elongation != nullptr) *has_elongation = any_elongation;
  return points;
}

void write_points_csv(std::ostream& out, std::span<const LidarPoint> points,
                      bool with_elongation) {
  char buf[64];
  auto put = [&](double v, char sep) {
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, r.ptr - buf);
    out.put(sep);
  };
  out << (with_elongation ? "x,y,z,intensity,elongation\n" : "x,y,z,intensity\n");
  for (const LidarPoint& p : points) {
    put(p.position.x, ',');
    put(p.position.y, ',');
    put(p.position.z, ',');
    if (with_elongation) {
      put(p.intensity, ',');
      put(p.elongation, '\n');
    } else {
      put(p.intensity, '\n');
    }
  }
}

std::vector<LidarPoint> parse_points_binary(std::span<const char> bytes, bool* has_elongation) {
  ByteReader reader(bytes, "RVPTS1");
  if (reader.take(kPointCloudMagic.size()) != kPointCloudMagic) {
    throw Error(ErrorCode::kParse, "not an RVPTS1 file (bad magic)");
  }
  const std::uint32_t count = reader.u32();
  const std::uint32_t fields = reader.u32();
  if (fields != 4 && fields != 5) {
    throw Error(ErrorCode::kParse, "RVPTS1: field count must be 4 or 5");
  }
  if (static_cast<std::uint64_t>(count) * fields * 4U > reader.remaining()) {
    throw Error(ErrorCode::kParse, "RVPTS1: truncated input");
  }
  std::vector<LidarPoint> points(count);
  for (LidarPoint& p : points) {
    p.position.x = reader.f32();
    p.position.y = reader.f32();
    p.position.z = reader.f32();
    p.intensity = reader.f32();
    if (fields == 5) p.elongation = reader.f32();
    if (!p.position.finite() || !std::isfinite(p.intensity) || !std::isfinite(p.elongation)) {
      throw Error(ErrorCode::kParse, "RVPTS1: non-finite value");
    }
  }
  if (has_elongation != nullptr) *has_elongation = fields == 5;
  return points;
}

void write_points_binary(std::ostream& out, std::span<const LidarPoint> points,
                         bool with_elongation) {
  out.write(kPointCloudMagic.data(), static_cast<std::streamsize>(kPointCloudMagic.size()));
  put_u32(out, static_cast<std::uint32_t>(points.size()));
  put_u32(out, with_elongation ? 5U : 4U);
  for (const LidarPoint& p : points) {
    put_f32(out, p.position.x);
    put_f32(out, p.position.y);
    put_f32(out, p.position.z);
    put_f32(out, p.intensity);
    if (with_elongation) put_f32(out, p.elongation);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed to write point cloud");
}

std::vector<LidarPoint> load_point_cloud(const std::filesystem::path& path, bool* has_elongation) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= kPointCloudMagic.size() &&
      std::string_view(bytes.data(), kPointCloudMagic.size()) == kPointCloudMagic) {
    return parse_points_binary(bytes, has_elongation);
  }
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  return read_points_csv(in, has_elongation);
}

}  // namespace rvdet
