#include "hairgs/io.hpp"

#include "hairgs/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace hairgs {

namespace {

constexpr std::uint32_t kGroomVersion = 1;
constexpr std::uint32_t kAnimationVersion = 1;
constexpr std::uint32_t kSkinningVersion = 1;

class Writer {
 public:
  void tag(std::string_view t) { out_.append(t.data(), 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void f32(double v) {
    const auto f = static_cast<float>(v);
    if (std::isfinite(v) && !std::isfinite(f)) fail(ErrorCode::invalid_input, "value out of float32 range");
    u32(std::bit_cast<std::uint32_t>(f));
  }
  void vec3(const Vec3& v) {
    f32(v.x());
    f32(v.y());
    f32(v.z());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view format) : bytes_(bytes), format_(format) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::uint64_t n) const {
    if (n > remaining())
      fail(ErrorCode::format, std::string(format_) + ": truncated at byte offset " + std::to_string(pos_) + " (need " +
                                  std::to_string(n) + " bytes, " + std::to_string(remaining()) + " left)");
  }
  std::string tag() {
    need(4);
    std::string t(bytes_.substr(pos_, 4));
    pos_ += 4;
    return t;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  Vec3 vec3() {
    const double x = f32(), y = f32(), z = f32();
    return {x, y, z};
  }
  void skip(std::uint64_t n) {
    need(n);
    pos_ += static_cast<std::size_t>(n);
  }
  [[noreturn]] void error(const std::string& what, std::size_t at) const {
    fail(ErrorCode::format, std::string(format_) + ": " + what + " at byte offset " + std::to_string(at));
  }

 private:
  std::string_view bytes_;
  std::string_view format_;
  std::size_t pos_ = 0;
};

void expect_header(Reader& r, std::string_view magic, std::uint32_t version) {
  r.need(8);
  const std::string found = r.tag();
  if (found != magic) {
    std::string printable;
    for (char c : found) printable += std::isprint(static_cast<unsigned char>(c)) ? c : '?';
    fail(ErrorCode::format, "bad magic: expected '" + std::string(magic) + "', found '" + printable + "'");
  }
  const std::uint32_t v = r.u32();
  if (v != version)
    fail(ErrorCode::format, std::string(magic) + ": unsupported version " + std::to_string(v) + " (expected " +
                                std::to_string(version) + ")");
}

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b, std::uint64_t c = 1) {
  const std::uint64_t limit = std::numeric_limits<std::uint32_t>::max() * 64ull;
  if (a != 0 && b > limit / a) return std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t ab = a * b;
  if (ab != 0 && c > limit / ab) return std::numeric_limits<std::uint64_t>::max();
  return ab * c;
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) fail(ErrorCode::invalid_input, std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits a text file into non-empty, non-comment lines with their numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    std::string t = trim(line.substr(0, line.find('#')));
    if (!t.empty()) out.emplace_back(line_no, std::move(t));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& line, char sep, std::size_t line_no, const char* what) {
  std::string s = line;
  if (sep != ' ') std::replace(s.begin(), s.end(), sep, ' ');
  std::istringstream in(s);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(d))
      fail(ErrorCode::format, std::string(what) + " line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    v.push_back(d);
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// --- GRM1 ------------------------------------------------------------------

std::string encode_groom(const Groom& groom, const StrandColors* colors) {
  validate(groom);
  if (colors) validate(*colors, groom);
  Writer w;
  w.tag("GRM1");
  w.u32(kGroomVersion);
  w.u32(to_u32(groom.strand_count(), "strand count"));
  w.u32(to_u32(groom.points_per_strand, "points per strand"));
  for (const Vec3& p : groom.points) w.vec3(p);
  if (colors) {
    w.tag("COL0");
    w.u32(to_u32(colors->rgb.size() * 12, "color chunk"));
    for (const Vec3& c : colors->rgb) w.vec3(c);
  }
  return w.take();
}

GroomFile decode_groom(std::string_view bytes) {
  Reader r(bytes, "GRM1");
  expect_header(r, "GRM1", kGroomVersion);
  const std::uint32_t strands = r.u32();
  const std::size_t pps_at = r.offset();
  const std::uint32_t pps = r.u32();
  if (pps < 2) r.error("points per strand must be >= 2, found " + std::to_string(pps), pps_at);
  r.need(checked_product(strands, pps, 12));

  GroomFile file;
  file.groom = Groom(strands, pps);
  for (Vec3& p : file.groom.points) {
    const std::size_t at = r.offset();
    p = r.vec3();
    if (!p.allFinite()) r.error("non-finite coordinate", at);
  }
  while (r.remaining() > 0) {
    const std::size_t at = r.offset();
    r.need(8);
    const std::string tag = r.tag();
    const std::uint32_t length = r.u32();
    r.need(length);
    if (tag == "COL0") {
      const std::uint64_t expected = checked_product(strands, pps - 1, 12);
      if (length != expected)
        r.error("COL0 chunk holds " + std::to_string(length) + " bytes, expected " + std::to_string(expected), at);
      StrandColors colors(strands, pps - 1);
      for (Vec3& c : colors.rgb) {
        const std::size_t cat = r.offset();
        c = r.vec3();
        if (!c.allFinite()) r.error("non-finite color", cat);
      }
      file.colors = std::move(colors);
    } else {
      r.skip(length);
    }
  }
  return file;
}

void save_groom(const std::string& path, const Groom& groom, const StrandColors* colors) {
  write_file_atomic(path, encode_groom(groom, colors));
}

GroomFile load_groom(const std::string& path) {
  try {
    return decode_groom(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

// --- GAN1 ------------------------------------------------------------------

std::string encode_animation(const GuideAnimation& anim) {
  validate(anim);
  Writer w;
  w.tag("GAN1");
  w.u32(kAnimationVersion);
  w.u32(to_u32(anim.frames.size(), "frame count"));
  w.u32(to_u32(anim.strand_count(), "strand count"));
  w.u32(to_u32(anim.points_per_strand(), "points per strand"));
  for (const Groom& g : anim.frames)
    for (const Vec3& p : g.points) w.vec3(p);
  return w.take();
}

GuideAnimation decode_animation(std::string_view bytes, double frame_dt) {
  Reader r(bytes, "GAN1");
  expect_header(r, "GAN1", kAnimationVersion);
  const std::uint32_t frames = r.u32();
  const std::uint32_t strands = r.u32();
  const std::size_t pps_at = r.offset();
  const std::uint32_t pps = r.u32();
  if (pps < 2) r.error("points per strand must be >= 2, found " + std::to_string(pps), pps_at);
  r.need(checked_product(frames, checked_product(strands, pps), 12));

  GuideAnimation anim;
  anim.frame_dt = frame_dt;
  anim.frames.reserve(frames);
  for (std::uint32_t f = 0; f < frames; ++f) {
    Groom g(strands, pps);
    for (Vec3& p : g.points) {
      const std::size_t at = r.offset();
      p = r.vec3();
      if (!p.allFinite()) r.error("non-finite coordinate", at);
    }
    anim.frames.push_back(std::move(g));
  }
  if (r.remaining() != 0) r.error("trailing bytes after the last frame", r.offset());
  return anim;
}

void save_animation(const std::string& path, const GuideAnimation& anim) {
  write_file_atomic(path, encode_animation(anim));
}

GuideAnimation load_animation(const std::string& path, double frame_dt) {
  try {
    return decode_animation(read_file(path), frame_dt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

// --- SKN1 ------------------------------------------------------------------

std::string encode_skinning(const SkinningMap& map) {
  Writer w;
  w.tag("SKN1");
  w.u32(kSkinningVersion);
  w.u32(to_u32(map.dense_count(), "dense count"));
  w.u32(to_u32(map.k, "k"));
  w.f32(map.epsilon);
  for (std::size_t i = 0; i < map.weights.size(); ++i) {
    w.u32(map.guide_indices[i]);
    w.f32(map.weights[i]);
  }
  return w.take();
}

SkinningMap decode_skinning(std::string_view bytes) {
  Reader r(bytes, "SKN1");
  expect_header(r, "SKN1", kSkinningVersion);
  const std::uint32_t dense = r.u32();
  const std::size_t k_at = r.offset();
  const std::uint32_t k = r.u32();
  if (k < 1) r.error("k must be >= 1", k_at);
  const std::size_t eps_at = r.offset();
  SkinningMap map;
  map.k = k;
  map.epsilon = r.f32();
  if (!(map.epsilon >= 0.0) || !std::isfinite(map.epsilon)) r.error("epsilon must be finite and >= 0", eps_at);
  r.need(checked_product(dense, k, 8));
  map.guide_indices.resize(static_cast<std::size_t>(dense) * k);
  map.weights.resize(static_cast<std::size_t>(dense) * k);
  for (std::size_t i = 0; i < map.weights.size(); ++i) {
    map.guide_indices[i] = r.u32();
    const std::size_t at = r.offset();
    map.weights[i] = r.f32();
    if (!(map.weights[i] >= 0.0) || !std::isfinite(map.weights[i])) r.error("weight must be finite and >= 0", at);
  }
  if (r.remaining() != 0) r.error("trailing bytes after the last dense strand", r.offset());
  return map;
}

void save_skinning(const std::string& path, const SkinningMap& map) { write_file_atomic(path, encode_skinning(map)); }

SkinningMap load_skinning(const std::string& path) {
  try {
    return decode_skinning(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

// --- text formats ----------------------------------------------------------

PoseTrack parse_pose_track(std::string_view text) {
  PoseTrack track;
  bool first = true;
  for (const auto& [line_no, line] : content_lines(text)) {
    if (first && !line.empty() && (std::isalpha(static_cast<unsigned char>(line[0])))) {
      first = false;
      continue;  // header
    }
    first = false;
    const auto v = parse_numbers(line, ',', line_no, "pose track");
    if (v.size() != 8)
      fail(ErrorCode::format, "pose track line " + std::to_string(line_no) + ": expected 8 values, found " +
                                  std::to_string(v.size()));
    PoseKey key;
    key.time = v[0];
    key.pose.rotation = Eigen::Quaterniond(v[1], v[2], v[3], v[4]);
    key.pose.translation = Vec3(v[5], v[6], v[7]);
    track.keys.push_back(key);
  }
  try {
    validate(track);
  } catch (const Error& e) {
    throw Error(ErrorCode::format, std::string("pose track: ") + e.what());
  }
  return track;
}

std::string format_pose_track(const PoseTrack& track) {
  std::string out = "t,qw,qx,qy,qz,tx,ty,tz\n";
  for (const PoseKey& k : track.keys) {
    const auto& q = k.pose.rotation;
    const auto& t = k.pose.translation;
    out += fmt(k.time) + "," + fmt(q.w()) + "," + fmt(q.x()) + "," + fmt(q.y()) + "," + fmt(q.z()) + "," +
           fmt(t.x()) + "," + fmt(t.y()) + "," + fmt(t.z()) + "\n";
  }
  return out;
}

PoseTrack load_pose_track(const std::string& path) { return parse_pose_track(read_file(path)); }

ColliderSet parse_colliders(std::string_view text) {
  ColliderSet set;
  for (const auto& [line_no, line] : content_lines(text)) {
    std::istringstream in(line);
    std::string kind;
    in >> kind;
    std::string rest;
    std::getline(in, rest);
    const auto v = parse_numbers(rest, ' ', line_no, "colliders");
    if (kind == "sphere" && v.size() == 4) {
      set.spheres.push_back({Vec3(v[0], v[1], v[2]), v[3]});
    } else if (kind == "capsule" && v.size() == 7) {
      set.capsules.push_back({Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]), v[6]});
    } else {
      fail(ErrorCode::format, "colliders line " + std::to_string(line_no) + ": expected 'sphere cx cy cz r' or "
                                                                            "'capsule ax ay az bx by bz r'");
    }
  }
  try {
    validate(set);
  } catch (const Error& e) {
    throw Error(ErrorCode::format, std::string("colliders: ") + e.what());
  }
  return set;
}

std::string format_colliders(const ColliderSet& colliders) {
  std::string out;
  for (const Sphere& s : colliders.spheres)
    out += "sphere " + fmt(s.center.x()) + " " + fmt(s.center.y()) + " " + fmt(s.center.z()) + " " + fmt(s.radius) +
           "\n";
  for (const Capsule& c : colliders.capsules)
    out += "capsule " + fmt(c.a.x()) + " " + fmt(c.a.y()) + " " + fmt(c.a.z()) + " " + fmt(c.b.x()) + " " +
           fmt(c.b.y()) + " " + fmt(c.b.z()) + " " + fmt(c.radius) + "\n";
  return out;
}

ColliderSet load_colliders(const std::string& path) { return parse_colliders(read_file(path)); }

std::vector<Camera> parse_cameras(std::string_view text) {
  std::vector<Camera> cams;
  for (const auto& [line_no, line] : content_lines(text)) {
    const auto v = parse_numbers(line, ' ', line_no, "cameras");
    if (v.size() != 17)
      fail(ErrorCode::format, "cameras line " + std::to_string(line_no) + ": expected 17 values, found " +
                                  std::to_string(v.size()));
    Camera c;
    c.focal = v[0];
    c.cx = v[1];
    c.cy = v[2];
    if (v[3] != std::floor(v[3]) || v[4] != std::floor(v[4]) || v[3] < 1 || v[4] < 1 || v[3] > 1e5 || v[4] > 1e5)
      fail(ErrorCode::format, "cameras line " + std::to_string(line_no) + ": width/height must be positive integers");
    c.width = static_cast<int>(v[3]);
    c.height = static_cast<int>(v[4]);
    for (int i = 0; i < 9; ++i) c.rotation(i / 3, i % 3) = v[5 + static_cast<std::size_t>(i)];
    c.translation = Vec3(v[14], v[15], v[16]);
    try {
      validate(c);
    } catch (const Error& e) {
      throw Error(ErrorCode::format, "cameras line " + std::to_string(line_no) + ": " + e.what());
    }
    cams.push_back(c);
  }
  return cams;
}

std::string format_cameras(const std::vector<Camera>& cameras) {
  std::string out;
  for (const Camera& c : cameras) {
    out += fmt(c.focal) + " " + fmt(c.cx) + " " + fmt(c.cy) + " " + std::to_string(c.width) + " " +
           std::to_string(c.height);
    for (int i = 0; i < 9; ++i) out += " " + fmt(c.rotation(i / 3, i % 3));
    out += " " + fmt(c.translation.x()) + " " + fmt(c.translation.y()) + " " + fmt(c.translation.z()) + "\n";
  }
  return out;
}

std::vector<Camera> load_cameras(const std::string& path) { return parse_cameras(read_file(path)); }

// --- images ----------------------------------------------------------------

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const Vec3& p : image.pixels)
    for (int c = 0; c < 3; ++c)
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(p[c], 0.0, 1.0)))));
  return out;
}

Image decode_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) fail(ErrorCode::format, "PPM: truncated header at byte offset " + std::to_string(start));
    return std::string(bytes.substr(start, pos - start));
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    if (t.empty() || t.size() > 6 || !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      fail(ErrorCode::format, std::string("PPM: bad ") + what + " '" + t + "'");
    return std::stoi(t);
  };
  if (token() != "P6") fail(ErrorCode::format, "PPM: expected magic 'P6'");
  const int w = number("width"), h = number("height"), maxval = number("maxval");
  if (w < 1 || h < 1 || maxval != 255) fail(ErrorCode::format, "PPM: only positive sizes with maxval 255 are supported");
  ++pos;  // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (pos > bytes.size() || bytes.size() - pos < need)
    fail(ErrorCode::format, "PPM: truncated raster at byte offset " + std::to_string(std::min(pos, bytes.size())));
  Image img(w, h);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    for (int c = 0; c < 3; ++c)
      img.pixels[i][c] = static_cast<unsigned char>(bytes[pos + 3 * i + static_cast<std::size_t>(c)]) / 255.0;
  return img;
}

void save_ppm(const std::string& path, const Image& image) { write_file_atomic(path, encode_ppm(image)); }

std::string encode_planes(const Image& image) {
  Writer w;
  for (int c = 0; c < 3; ++c)
    for (const Vec3& p : image.pixels) w.f32(p[c]);
  return w.take();
}

Image decode_planes(std::string_view bytes, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != n * 12)
    fail(ErrorCode::format, "float planes: expected " + std::to_string(n * 12) + " bytes for " +
                                std::to_string(width) + "x" + std::to_string(height) + ", found " +
                                std::to_string(bytes.size()));
  Reader r(bytes, "float planes");
  Image img(width, height);
  for (int c = 0; c < 3; ++c)
    for (Vec3& p : img.pixels) p[c] = r.f32();
  return img;
}

std::string encode_mask(const Mask& mask) {
  Writer w;
  for (double v : mask.values) w.f32(v);
  return w.take();
}

Mask decode_mask(std::string_view bytes, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != n * 4)
    fail(ErrorCode::format, "mask plane: expected " + std::to_string(n * 4) + " bytes, found " +
                                std::to_string(bytes.size()));
  Reader r(bytes, "mask plane");
  Mask m;
  m.width = width;
  m.height = height;
  m.values.resize(n);
  for (double& v : m.values) {
    v = r.f32();
    if (!std::isfinite(v) || v < 0.0) fail(ErrorCode::format, "mask plane: values must be finite and >= 0");
  }
  return m;
}

// --- CSV -------------------------------------------------------------------

std::string format_fit_log(const std::vector<FitLogEntry>& log) {
  std::string out = "iter,loss_rgb,loss_consistency,total\n";
  for (const FitLogEntry& e : log)
    out += std::to_string(e.iter) + "," + fmt(e.loss_rgb) + "," + fmt(e.loss_consistency) + "," + fmt(e.total) + "\n";
  return out;
}

std::string format_metrics(double pc1_percent, double ts, std::size_t components) {
  return "pc1_percent,ts,components\n" + fmt(pc1_percent) + "," + fmt(ts) + "," + std::to_string(components) + "\n";
}

std::string format_pc_tracks(const PcTracks& tracks) {
  const auto k = tracks.projection.cols();
  std::string out = "frame";
  for (Eigen::Index c = 0; c < k; ++c) out += ",pc" + std::to_string(c + 1);
  for (Eigen::Index c = 0; c < k; ++c) out += ",std" + std::to_string(c + 1);
  out += "\n";
  for (Eigen::Index f = 0; f < tracks.projection.rows(); ++f) {
    out += std::to_string(f);
    for (Eigen::Index c = 0; c < k; ++c) out += "," + fmt(tracks.projection(f, c));
    for (Eigen::Index c = 0; c < k; ++c) out += "," + fmt(tracks.running_std(f, c));
    out += "\n";
  }
  return out;
}

// --- files -----------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::io, "error reading '" + path + "'");
  return std::move(ss).str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::io, "error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io, "cannot move temporary file over '" + path + "'");
  }
}

}  // namespace hairgs
