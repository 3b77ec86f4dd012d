#include "hairgs/config.hpp"
#include "hairgs/error.hpp"
#include "hairgs/io.hpp"
#include "hairgs/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace hairgs;
using hairgs::test::random_vec;
using hairgs::test::uniform;

namespace fs = std::filesystem;

namespace {

// Multiples of 2^-20 in [lo, hi]: exact in float32.
Vec3 float_vec(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  const Vec3 v = random_vec(rng, lo, hi);
  return (v * 1048576.0).array().round().matrix() / 1048576.0;
}

Groom float_groom(std::mt19937_64& rng, std::size_t strands, std::size_t points) {
  Groom g(strands, points);
  for (Vec3& p : g.points) p = float_vec(rng);
  return g;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hairgs_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Every decoder must either accept or throw hairgs::Error; nothing else.
void fuzz(const std::string& valid, const std::function<void(std::string_view)>& decode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 3000; ++trial) {
    std::string bytes = valid;
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < flips; ++f) {
      const std::size_t at = rng() % std::min<std::size_t>(64, bytes.size());
      bytes[at] = static_cast<char>(rng() & 0xff);
    }
    try {
      decode(bytes);
    } catch (const Error&) {
    }
  }
  for (std::size_t n = 0; n < std::min<std::size_t>(valid.size(), 64); ++n) {
    bool threw = false;
    try {
      decode(std::string_view(valid).substr(0, n));
    } catch (const Error& e) {
      threw = true;
      REQUIRE(e.code() == ErrorCode::format);
    }
    REQUIRE(threw);
  }
}

}  // namespace

TEST_CASE("GRM1") {
  std::mt19937_64 rng(1);
  const Groom g = float_groom(rng, 7, 5);
  StrandColors c(7, 4);
  for (Vec3& v : c.rgb) v = float_vec(rng, 0, 1);

  SUBCASE("bitwise round trip") {
    const GroomFile plain = decode_groom(encode_groom(g));
    CHECK(plain.groom.points == g.points);
    CHECK(plain.groom.points_per_strand == 5);
    CHECK_FALSE(plain.colors.has_value());
    const std::string bytes = encode_groom(g, &c);
    const GroomFile colored = decode_groom(bytes);
    REQUIRE(colored.colors.has_value());
    CHECK(*colored.colors == c);
    CHECK(encode_groom(colored.groom, &*colored.colors) == bytes);

    TempDir dir;
    save_groom(dir.file("a.grm"), g, &c);
    const GroomFile loaded = load_groom(dir.file("a.grm"));
    CHECK(loaded.groom.points == g.points);
    CHECK(*loaded.colors == c);
    CHECK(read_file(dir.file("a.grm")) == bytes);
  }
  SUBCASE("double precision input re-encodes stably") {
    const Groom d = test::random_groom(rng, 4, 6);
    const std::string once = encode_groom(d);
    CHECK(encode_groom(decode_groom(once).groom) == once);
  }
  SUBCASE("layout") {
    const std::string bytes = encode_groom(g);
    CHECK(bytes.size() == 16 + 7 * 5 * 12);
    CHECK(bytes.substr(0, 4) == "GRM1");
    std::uint32_t header[3];
    std::memcpy(header, bytes.data() + 4, 12);
    CHECK(header[0] == 1);
    CHECK(header[1] == 7);
    CHECK(header[2] == 5);
    float first[3];
    std::memcpy(first, bytes.data() + 16, 12);
    CHECK(first[0] == static_cast<float>(g.points[0].x()));
    CHECK(encode_groom(g, &c).size() == bytes.size() + 8 + 7 * 4 * 12);
  }
  SUBCASE("full dense groom size") {
    Groom big(60000, 50);
    for (std::size_t s = 0; s < 60000; ++s)
      for (std::size_t j = 0; j < 50; ++j) big.points[s * 50 + j] = Vec3(static_cast<double>(s), -0.01 * j, 0);
    CHECK(encode_groom(big).size() == 16 + 60000ull * 50 * 12);
  }
  SUBCASE("bad magic and version") {
    std::string bytes = encode_groom(g);
    bytes[3] = 'X';
    try {
      decode_groom(bytes);
      FAIL("accepted GRMX");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::format);
      CHECK(std::string(e.what()).find("GRM1") != std::string::npos);
      CHECK(std::string(e.what()).find("GRMX") != std::string::npos);
    }
    bytes = encode_groom(g);
    bytes[4] = 9;
    try {
      decode_groom(bytes);
      FAIL("accepted version 9");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("9") != std::string::npos);
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
  }
  SUBCASE("truncation names the byte offset") {
    const std::string bytes = encode_groom(g);
    try {
      decode_groom(std::string_view(bytes).substr(0, 100));
      FAIL("accepted a truncated file");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::format);
      CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }
  SUBCASE("unknown chunks are skipped") {
    std::string bytes = encode_groom(g);
    bytes += "XTRA";
    const std::uint32_t len = 3;
    bytes.append(reinterpret_cast<const char*>(&len), 4);
    bytes += "abc";
    CHECK(decode_groom(bytes).groom.points == g.points);
  }
  SUBCASE("fuzzed headers") {
    fuzz(encode_groom(g, &c), [](std::string_view b) { decode_groom(b); }, 11);
  }
  SUBCASE("missing file") {
    try {
      load_groom("/nonexistent/dir/x.grm");
      FAIL("opened a missing file");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::io);
    }
  }
}

TEST_CASE("GAN1") {
  std::mt19937_64 rng(2);
  GuideAnimation a;
  a.frame_dt = 0.04;
  for (int f = 0; f < 4; ++f) a.frames.push_back(float_groom(rng, 3, 6));
  const std::string bytes = encode_animation(a);
  CHECK(bytes.size() == 20 + 4 * 3 * 6 * 12);
  CHECK(bytes.substr(0, 4) == "GAN1");
  const GuideAnimation back = decode_animation(bytes, 0.04);
  REQUIRE(back.frame_count() == 4);
  CHECK(back.frame_dt == 0.04);
  for (int f = 0; f < 4; ++f) CHECK(back.frames[f].points == a.frames[f].points);
  CHECK(encode_animation(back) == bytes);

  TempDir dir;
  save_animation(dir.file("a.gan1"), a);
  CHECK(read_file(dir.file("a.gan1")) == bytes);
  CHECK(load_animation(dir.file("a.gan1"), 0.04).frames[3].points == a.frames[3].points);

  fuzz(bytes, [](std::string_view b) { decode_animation(b, 0.1); }, 12);
}

TEST_CASE("SKN1") {
  std::mt19937_64 rng(3);
  SkinningMap m;
  m.k = 3;
  m.epsilon = static_cast<float>(1e-8);
  for (int i = 0; i < 5; ++i) {
    float total = 0.0f;
    for (int j = 0; j < 3; ++j) {
      m.guide_indices.push_back(static_cast<std::uint32_t>(rng() % 20));
      m.weights.push_back(static_cast<float>(uniform(rng, 0.1, 1.0)));
      total += static_cast<float>(m.weights.back());
    }
  }
  const std::string bytes = encode_skinning(m);
  CHECK(bytes.substr(0, 4) == "SKN1");
  CHECK(bytes.size() == 20 + 5 * 3 * 8);
  const SkinningMap back = decode_skinning(bytes);
  CHECK(back.k == 3);
  CHECK(back.epsilon == m.epsilon);
  CHECK(back.guide_indices == m.guide_indices);
  CHECK(back.weights == m.weights);
  CHECK(encode_skinning(back) == bytes);
  fuzz(bytes, [](std::string_view b) { decode_skinning(b); }, 13);
}

TEST_CASE("text formats") {
  SUBCASE("pose tracks") {
    const PoseTrack t = parse_pose_track("t,qw,qx,qy,qz,tx,ty,tz\n0,1,0,0,0,0,0,0\n0.5,0,1,0,0,0.1,0.2,0.3\n");
    REQUIRE(t.keys.size() == 2);
    CHECK(t.keys[1].time == 0.5);
    CHECK(t.keys[1].pose.rotation.x() == 1.0);
    CHECK(t.keys[1].pose.translation == Vec3(0.1, 0.2, 0.3));
    CHECK(parse_pose_track(format_pose_track(t)).keys[1].pose.translation == t.keys[1].pose.translation);
    CHECK(format_pose_track(parse_pose_track(format_pose_track(t))) == format_pose_track(t));
    CHECK_THROWS_AS(parse_pose_track("0,1,0,0\n"), Error);
    CHECK_THROWS_AS(parse_pose_track("0,1,0,0,0,0,0,x\n"), Error);
    CHECK_THROWS_AS(parse_pose_track("0,2,0,0,0,0,0,0\n"), Error);
    CHECK_THROWS_AS(parse_pose_track("1,1,0,0,0,0,0,0\n0,1,0,0,0,0,0,0\n"), Error);
  }
  SUBCASE("colliders") {
    const ColliderSet c = parse_colliders("# head\nsphere 0 0.1 0 0.09\ncapsule 0 -0.1 0 0 -0.3 0 0.05\n");
    REQUIRE(c.spheres.size() == 1);
    REQUIRE(c.capsules.size() == 1);
    CHECK(c.spheres[0].radius == 0.09);
    CHECK(c.capsules[0].b == Vec3(0, -0.3, 0));
    CHECK(format_colliders(parse_colliders(format_colliders(c))) == format_colliders(c));
    CHECK_THROWS_AS(parse_colliders("cube 1 2 3\n"), Error);
    CHECK_THROWS_AS(parse_colliders("sphere 0 0 0 -1\n"), Error);
  }
  SUBCASE("cameras") {
    std::vector<Camera> cams{Camera::look_at(Vec3(0.3, 0.1, 0.5), Vec3::Zero(), Vec3::UnitY(), 321.5, 64, 48),
                             Camera::look_at(Vec3(-0.5, 0, 0.1), Vec3::Zero(), Vec3::UnitY(), 100, 10, 20)};
    const std::string text = format_cameras(cams);
    const std::vector<Camera> back = parse_cameras(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].focal == 321.5);
    CHECK(back[0].rotation == cams[0].rotation);
    CHECK(back[1].translation == cams[1].translation);
    CHECK(back[1].width == 10);
    CHECK(back[1].height == 20);
    CHECK(format_cameras(back) == text);
    CHECK_THROWS_AS(parse_cameras("1 2 3\n"), Error);
    CHECK_THROWS_AS(parse_cameras("100 0 0 -4 4 1 0 0 0 1 0 0 0 1 0 0 0\n"), Error);
  }
}

TEST_CASE("images and planes") {
  Image img(3, 2);
  img.pixels = {Vec3(0, 0.5, 1), Vec3(-1, 2, 0.25), Vec3(0.1, 0.2, 0.3),
                Vec3(1, 1, 1),   Vec3(0, 0, 0),    Vec3(0.999, 0.001, 0.5)};
  const std::string ppm = encode_ppm(img);
  CHECK(ppm.substr(0, 11) == "P6\n3 2\n255\n");
  CHECK(ppm.size() == 11 + 18);
  CHECK(static_cast<unsigned char>(ppm[11 + 1]) == 128);
  CHECK(static_cast<unsigned char>(ppm[11 + 3]) == 0);
  CHECK(static_cast<unsigned char>(ppm[11 + 4]) == 255);
  CHECK(static_cast<unsigned char>(ppm[11 + 5]) == 64);
  const Image back = decode_ppm(ppm);
  CHECK(back.width == 3);
  CHECK(encode_ppm(back) == ppm);
  fuzz(ppm, [](std::string_view b) { decode_ppm(b); }, 14);

  Image f(3, 2);
  std::mt19937_64 rng(4);
  for (Vec3& p : f.pixels) p = float_vec(rng);
  const std::string planes = encode_planes(f);
  CHECK(planes.size() == 6 * 12);
  CHECK(decode_planes(planes, 3, 2) == f);
  CHECK_THROWS_AS(decode_planes(planes, 4, 2), Error);

  Mask m;
  m.width = 3;
  m.height = 2;
  m.values = {0, 1, 1, 0, 0.5, 1};
  const Mask mb = decode_mask(encode_mask(m), 3, 2);
  CHECK(mb.values == m.values);
  CHECK_THROWS_AS(decode_mask(encode_mask(m), 2, 2), Error);
}

TEST_CASE("csv outputs") {
  const std::vector<FitLogEntry> log{{0, 1.5, 2.0, 1.52}, {1, 1.0, 1.0, 1.01}};
  const std::string csv = format_fit_log(log);
  CHECK(csv.rfind("iter,loss_rgb,loss_consistency,total\n", 0) == 0);
  CHECK(csv.find("\n1,1,1,1.01\n") != std::string::npos);
  CHECK(format_metrics(100.0, 0.0, 3) == "pc1_percent,ts,components\n100,0,3\n");
  PcTracks t;
  t.projection = Eigen::MatrixXd::Zero(2, 2);
  t.running_std = Eigen::MatrixXd::Zero(2, 2);
  t.projection(1, 0) = 0.5;
  CHECK(format_pc_tracks(t) == "frame,pc1,pc2,std1,std2\n0,0,0,0,0\n1,0.5,0,0,0\n");
}

TEST_CASE("atomic writes") {
  TempDir dir;
  const std::string path = dir.file("x.bin");
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  CHECK(read_file(path) == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(write_file_atomic(dir.file("missing/x.bin"), "x"), Error);
}

TEST_CASE("config") {
  SUBCASE("defaults follow the module defaults") {
    const PipelineConfig c;
    CHECK(c.hair.mass == 2.0);
    CHECK(c.sim.substeps == 10);
    CHECK(get_config_value(c, "stretch_resistance") == "600");
    CHECK(get_config_value(c, "self_collide") == "1");
    CHECK(get_config_value(c, "gravity") == "0 -9.8100000000000005 0");
  }
  SUBCASE("every key round-trips") {
    std::mt19937_64 rng(5);
    PipelineConfig c;
    c.groom = "a b.grm";
    c.hair.drag = uniform(rng);
    c.hair.bend_resistance = uniform(rng, 0, 600);
    c.hair.self_collide = false;
    c.sim.dt = 1.0 / 600.0;
    c.sim.gravity = random_vec(rng);
    c.sim.wind_direction = Vec3(0, 0, -1);
    c.frame_dt = 1.0 / 24.0;
    c.seed = 0xFFFFFFFFFFFFull;
    c.background = Vec3(0.1, 0.2, 0.3);
    const std::string text = format_config(c);
    const PipelineConfig back = parse_config(text);
    CHECK(format_config(back) == text);
    for (const std::string& key : config_keys()) CHECK(get_config_value(back, key) == get_config_value(c, key));
    CHECK(back.hair.drag == c.hair.drag);
    CHECK(back.sim.gravity == c.sim.gravity);
    CHECK(back.seed == c.seed);
    CHECK(back.groom == "a b.grm");
  }
  SUBCASE("key names are the field names") {
    const auto& keys = config_keys();
    for (const char* k : {"mass", "drag", "tangential_drag", "damp", "stretch_damp", "stretch_resistance",
                          "compression_resistance", "bend_resistance", "twist_resistance", "extra_bend_links",
                          "start_curve_attract", "self_collide", "friction", "stickiness", "dynamics_weight",
                          "static_cling", "dt", "substeps", "solver_iters", "gravity", "wind_direction",
                          "wind_strength", "wind_gust_frequency"})
      CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
  }
  SUBCASE("comments, whitespace and overrides") {
    const PipelineConfig c = parse_config("# comment\n  mass = 3.5  # trailing\n\nwind_direction = 0, 0, 1\n");
    CHECK(c.hair.mass == 3.5);
    CHECK(c.sim.wind_direction == Vec3(0, 0, 1));
    PipelineConfig base;
    base.hair.drag = 0.1;
    CHECK(parse_config("mass = 1", base).hair.drag == 0.1);
  }
  SUBCASE("errors name the key") {
    try {
      parse_config("massive = 3\n");
      FAIL("accepted an unknown key");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config);
      CHECK(std::string(e.what()).find("massive") != std::string::npos);
    }
    try {
      parse_config("substeps = many\n");
      FAIL("accepted a bad value");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("substeps") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("just text\n"), Error);
    CHECK_THROWS_AS(parse_config("gravity = 1 2\n"), Error);
  }
  SUBCASE("validation") {
    PipelineConfig c;
    CHECK_NOTHROW(validate(c));
    c.groom = "/definitely/not/here.grm";
    CHECK_THROWS_AS(validate(c), Error);
    c = PipelineConfig{};
    c.hair.damp = 2.0;
    try {
      validate(c);
      FAIL("accepted damp 2");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config);
    }
    c = PipelineConfig{};
    c.style = "afro";
    CHECK_THROWS_AS(validate(c), Error);
  }
  SUBCASE("file round trip") {
    TempDir dir;
    PipelineConfig c;
    c.strands = 123;
    write_file_atomic(dir.file("c.cfg"), format_config(c));
    CHECK(load_config(dir.file("c.cfg")).strands == 123);
  }
  SUBCASE("fit options") {
    PipelineConfig c;
    c.fit_iterations = 77;
    c.graph_k = 4;
    const FitOptions o = fit_options(c);
    CHECK(o.iterations == 77);
    CHECK(o.graph_neighbors == 4);
    CHECK(o.phase_fraction == 3.0 / 50.0);
  }
}

TEST_CASE("synthetic wigs") {
  SUBCASE("deterministic per seed") {
    const SyntheticWig a = make_synthetic(SyntheticStyle::wavy, 50, 20, 7);
    const SyntheticWig b = make_synthetic(SyntheticStyle::wavy, 50, 20, 7);
    const SyntheticWig c = make_synthetic(SyntheticStyle::wavy, 50, 20, 8);
    CHECK(encode_groom(a.groom, &a.colors) == encode_groom(b.groom, &b.colors));
    CHECK(a.groom.points != c.groom.points);
  }
  SUBCASE("guide and dense scales") {
    for (auto [strands, points] : {std::pair<std::size_t, std::size_t>{700, 16}, {2000, 50}}) {
      const SyntheticWig w = make_synthetic(SyntheticStyle::straight_bob, strands, points, 0);
      CHECK(w.groom.strand_count() == strands);
      CHECK(w.groom.points_per_strand == points);
      CHECK_NOTHROW(validate(w.groom));
      CHECK_NOTHROW(validate(w.colors, w.groom));
      for (std::size_t s = 0; s < strands; ++s) {
        const auto pts = w.groom.strand(s);
        REQUIRE(pts[0].y() > 0.0);
        REQUIRE(std::abs(pts[0].norm() - kScalpRadius) < 1e-9);
        REQUIRE_NOTHROW(tnb_frames(pts));
        REQUIRE(arc_length(pts) > 0.1);
      }
      for (const Vec3& c : w.colors.rgb) REQUIRE((c.array() >= 0.0).all());
      REQUIRE(w.scalp.spheres.size() == 1);
    }
  }
  SUBCASE("strands stay outside the scalp") {
    const SyntheticWig w = make_synthetic(SyntheticStyle::straight_bob, 300, 16, 3);
    for (const Vec3& p : w.groom.points) REQUIRE(p.norm() >= kScalpRadius - 1e-9);
  }
  SUBCASE("single strand") {
    const SyntheticWig w = make_synthetic(SyntheticStyle::single_strand, 999, 10, 0);
    CHECK(w.groom.strand_count() == 1);
  }
  SUBCASE("style names") {
    CHECK(parse_style("straight-bob") == SyntheticStyle::straight_bob);
    CHECK(parse_style("wavy") == SyntheticStyle::wavy);
    CHECK(parse_style("single-strand") == SyntheticStyle::single_strand);
    CHECK_THROWS_AS(parse_style("mohawk"), Error);
    CHECK_THROWS_AS(make_synthetic(SyntheticStyle::wavy, 3, 1, 0), Error);
  }
}
