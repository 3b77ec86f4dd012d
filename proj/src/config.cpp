#include "hairgs/config.hpp"

#include "hairgs/error.hpp"
#include "hairgs/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

namespace hairgs {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(ErrorCode::config, "config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                              expected);
}

double to_double(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(v)) bad_value(key, text, "a finite number");
  return v;
}

std::uint64_t to_u64(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) bad_value(key, text, "a non-negative integer");
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) bad_value(key, text, "an integer");
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad_value(key, text, "a boolean");
}

Vec3 to_vec3(std::string_view key, std::string_view text) {
  std::string s(text);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) bad_value(key, text, "three numbers");
  return {to_double(key, a), to_double(key, b), to_double(key, c)};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

struct Field {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view key, std::string_view value)> set;
};

struct Table {
  std::vector<std::string> order;
  std::map<std::string, Field, std::less<>> fields;

  void add(std::string name, Field f) {
    order.push_back(name);
    fields.emplace(std::move(name), std::move(f));
  }
};

#define HAIRGS_STRING(name)                                                   \
  t.add(#name, {[](const PipelineConfig& c) { return c.name; },               \
                [](PipelineConfig& c, std::string_view, std::string_view v) { c.name = trim(v); }})
#define HAIRGS_REAL(path)                                                      \
  t.add(key_of(#path), {[](const PipelineConfig& c) { return fmt(c.path); }, \
                        [](PipelineConfig& c, std::string_view k, std::string_view v) { c.path = to_double(k, v); }})
#define HAIRGS_SIZE(path)                                                              \
  t.add(key_of(#path), {[](const PipelineConfig& c) { return std::to_string(c.path); }, \
                        [](PipelineConfig& c, std::string_view k, std::string_view v) { \
                          c.path = static_cast<decltype(c.path)>(to_u64(k, v));        \
                        }})
#define HAIRGS_INT(path)                                                               \
  t.add(key_of(#path), {[](const PipelineConfig& c) { return std::to_string(c.path); }, \
                        [](PipelineConfig& c, std::string_view k, std::string_view v) { c.path = to_int(k, v); }})
#define HAIRGS_BOOL(path)                                                                \
  t.add(key_of(#path), {[](const PipelineConfig& c) { return std::string(c.path ? "1" : "0"); }, \
                        [](PipelineConfig& c, std::string_view k, std::string_view v) { c.path = to_bool(k, v); }})
#define HAIRGS_VEC3(path)                                                      \
  t.add(key_of(#path), {[](const PipelineConfig& c) { return fmt(c.path); }, \
                        [](PipelineConfig& c, std::string_view k, std::string_view v) { c.path = to_vec3(k, v); }})

// "hair.mass" -> "mass"
std::string key_of(std::string_view path) {
  const auto dot = path.rfind('.');
  return std::string(dot == std::string_view::npos ? path : path.substr(dot + 1));
}

const Table& table() {
  static const Table instance = [] {
    Table t;
    HAIRGS_STRING(groom);
    HAIRGS_STRING(guides);
    HAIRGS_STRING(colliders);
    HAIRGS_STRING(track);
    HAIRGS_STRING(cameras);
    HAIRGS_STRING(output_dir);

    HAIRGS_REAL(hair.mass);
    HAIRGS_REAL(hair.drag);
    HAIRGS_REAL(hair.tangential_drag);
    HAIRGS_REAL(hair.damp);
    HAIRGS_REAL(hair.stretch_damp);
    HAIRGS_REAL(hair.stretch_resistance);
    HAIRGS_REAL(hair.compression_resistance);
    HAIRGS_REAL(hair.bend_resistance);
    HAIRGS_REAL(hair.twist_resistance);
    HAIRGS_INT(hair.extra_bend_links);
    HAIRGS_REAL(hair.start_curve_attract);
    HAIRGS_BOOL(hair.self_collide);
    HAIRGS_REAL(hair.friction);
    HAIRGS_REAL(hair.stickiness);
    HAIRGS_REAL(hair.dynamics_weight);
    HAIRGS_REAL(hair.static_cling);

    HAIRGS_REAL(sim.dt);
    HAIRGS_INT(sim.substeps);
    HAIRGS_INT(sim.solver_iters);
    HAIRGS_VEC3(sim.gravity);
    HAIRGS_VEC3(sim.wind_direction);
    HAIRGS_REAL(sim.wind_strength);
    HAIRGS_REAL(sim.wind_gust_frequency);
    HAIRGS_REAL(sim.collision_radius);
    HAIRGS_INT(sim.collision_passes);

    HAIRGS_SIZE(frame_count);
    HAIRGS_REAL(frame_dt);
    HAIRGS_SIZE(skin_k);
    HAIRGS_REAL(skin_epsilon);
    HAIRGS_REAL(lambda_consistency);
    HAIRGS_SIZE(fit_iterations);
    HAIRGS_REAL(phase_fraction);
    HAIRGS_REAL(learning_rate);
    HAIRGS_REAL(final_learning_rate);
    HAIRGS_SIZE(graph_k);
    HAIRGS_VEC3(background);
    HAIRGS_SIZE(components);
    HAIRGS_STRING(style);
    HAIRGS_SIZE(strands);
    HAIRGS_SIZE(points);
    HAIRGS_SIZE(seed);
    HAIRGS_SIZE(threads);
    return t;
  }();
  return instance;
}

#undef HAIRGS_STRING
#undef HAIRGS_REAL
#undef HAIRGS_SIZE
#undef HAIRGS_INT
#undef HAIRGS_BOOL
#undef HAIRGS_VEC3

const Field& field(std::string_view key) {
  const auto& fields = table().fields;
  const auto it = fields.find(key);
  if (it == fields.end()) fail(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::config, message);
}

}  // namespace

const std::vector<std::string>& config_keys() { return table().order; }

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  field(key).set(config, key, value);
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) { return field(key).get(config); }

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::vector<std::string> unknown;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorCode::config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (table().fields.find(key) == table().fields.end()) {
        unknown.push_back(key);
      } else {
        set_config_value(base, key, value);
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    fail(ErrorCode::config, "unknown config keys: " + list);
  }
  return base;
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const std::string& key : config_keys()) out += key + " = " + get_config_value(config, key) + "\n";
  return out;
}

PipelineConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

void validate(const PipelineConfig& c) {
  try {
    validate(c.hair);
    validate(c.sim);
  } catch (const Error& e) {
    throw Error(ErrorCode::config, e.what());
  }
  require(c.frame_count >= 1, "frame_count must be >= 1");
  require(c.frame_dt > 0.0, "frame_dt must be > 0");
  require(c.skin_k >= 1, "skin_k must be >= 1");
  require(c.skin_epsilon >= 0.0, "skin_epsilon must be >= 0");
  require(c.lambda_consistency >= 0.0, "lambda_consistency must be >= 0");
  require(c.fit_iterations >= 1, "fit_iterations must be >= 1");
  require(c.phase_fraction >= 0.0 && c.phase_fraction <= 1.0, "phase_fraction must be in [0,1]");
  require(c.learning_rate > 0.0 && c.final_learning_rate > 0.0, "learning rates must be > 0");
  require(c.graph_k >= 1, "graph_k must be >= 1");
  require(c.components >= 1, "components must be >= 1");
  require(c.points >= 2, "points must be >= 2");
  require(c.style == "straight-bob" || c.style == "wavy" || c.style == "single-strand",
          "style must be straight-bob, wavy or single-strand");
  for (const std::string* p : {&c.groom, &c.guides, &c.colliders, &c.track, &c.cameras})
    if (!p->empty() && !std::filesystem::exists(*p)) fail(ErrorCode::config, "path '" + *p + "' does not exist");
}

FitOptions fit_options(const PipelineConfig& c) {
  FitOptions o;
  o.lambda_consistency = c.lambda_consistency;
  o.iterations = c.fit_iterations;
  o.phase_fraction = c.phase_fraction;
  o.learning_rate = c.learning_rate;
  o.final_learning_rate = c.final_learning_rate;
  o.graph_neighbors = c.graph_k;
  o.background = c.background;
  return o;
}

}  // namespace hairgs
