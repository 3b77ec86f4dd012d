// hairgs command-line pipeline. Talks to the library only through hairgs.h.

#include "hairgs/hairgs.h"

#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Deleter {
  void operator()(hgs_config* p) const { hgs_config_destroy(p); }
  void operator()(hgs_groom* p) const { hgs_groom_destroy(p); }
  void operator()(hgs_anim* p) const { hgs_anim_destroy(p); }
  void operator()(hgs_skin* p) const { hgs_skin_destroy(p); }
  void operator()(hgs_cameras* p) const { hgs_cameras_destroy(p); }
  void operator()(hgs_image* p) const { hgs_image_destroy(p); }
  void operator()(hgs_mask* p) const { hgs_mask_destroy(p); }
};

template <class T>
using Handle = std::unique_ptr<T, Deleter>;

struct Failure {
  hgs_status status;
};

void check(hgs_status status) {
  if (status != HGS_OK) throw Failure{status};
}

template <class T, class F>
Handle<T> make(F&& create) {
  T* raw = nullptr;
  check(create(&raw));
  return Handle<T>(raw);
}

// Exit code 1 covers problems with what the user asked for; 2 covers
// everything that went wrong while doing it.
int exit_code(hgs_status status) {
  switch (status) {
    case HGS_ERR_INVALID_INPUT:
    case HGS_ERR_CONFIG:
    case HGS_ERR_FORMAT:
    case HGS_ERR_DEGENERATE_STRAND:
      return 1;
    default:
      return 2;
  }
}

// Options shared by every subcommand: --config plus one override per key.
struct Common {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    const std::size_t n = hgs_config_key_count();
    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i].first = hgs_config_key_name(i);
      options.push_back(sub->add_option("--" + values[i].first, values[i].second, "override config key")
                            ->group("Config overrides"));
    }
  }

  Handle<hgs_config> load() const {
    Handle<hgs_config> cfg = config_path.empty() ? make<hgs_config>([](hgs_config** o) { return hgs_config_create(o); })
                                                 : make<hgs_config>([&](hgs_config** o) {
                                                     return hgs_config_load(config_path.c_str(), o);
                                                   });
    for (std::size_t i = 0; i < values.size(); ++i)
      if (options[i]->count() > 0) check(hgs_config_set(cfg.get(), values[i].first.c_str(), values[i].second.c_str()));
    check(hgs_config_validate(cfg.get()));
    hgs_set_thread_count(static_cast<unsigned>(std::stoul(get(*cfg, "threads"))));
    return cfg;
  }

  static std::string get(const hgs_config& cfg, const char* key) {
    std::size_t needed = 0;
    check(hgs_config_get(&cfg, key, nullptr, 0, &needed));
    std::string out(needed, '\0');
    check(hgs_config_get(&cfg, key, out.data(), out.size(), nullptr));
    out.pop_back();
    return out;
  }
};

std::size_t get_size(const hgs_config& cfg, const char* key) { return std::stoull(Common::get(cfg, key)); }
double get_real(const hgs_config& cfg, const char* key) { return std::stod(Common::get(cfg, key)); }

std::string require_path(const hgs_config& cfg, const char* key) {
  std::string path = Common::get(cfg, key);
  if (path.empty()) throw std::invalid_argument(std::string("missing --") + key);
  return path;
}

// Explicit output paths are used as given; defaults land in output_dir.
std::string output_path(const hgs_config& cfg, const std::string& explicit_path, const char* default_name) {
  const std::filesystem::path dir = Common::get(cfg, "output_dir");
  std::filesystem::path path = explicit_path.empty() ? dir / default_name : std::filesystem::path(explicit_path);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  return path.string();
}

std::array<double, 3> background(const hgs_config& cfg) {
  std::array<double, 3> bg{};
  std::sscanf(Common::get(cfg, "background").c_str(), "%lf %lf %lf", &bg[0], &bg[1], &bg[2]);
  return bg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Handle<hgs_groom> load_groom(const std::string& path) {
  return make<hgs_groom>([&](hgs_groom** o) { return hgs_groom_load(path.c_str(), o); });
}

Handle<hgs_anim> load_anim(const std::string& path, const hgs_config& cfg) {
  const double dt = get_real(cfg, "frame_dt");
  return make<hgs_anim>([&](hgs_anim** o) { return hgs_anim_load(path.c_str(), dt, o); });
}

std::pair<std::size_t, std::size_t> counts(const hgs_groom& g) {
  std::size_t s = 0, p = 0;
  check(hgs_groom_counts(&g, &s, &p));
  return {s, p};
}

std::string view_path(const std::string& prefix, std::size_t i, const char* ext) {
  return prefix + "_" + std::to_string(i) + ext;
}

// ---- subcommands ----

struct ResampleCmd {
  Common common;
  std::string input, out;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("input", input, "groom to resample (GRM1)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output groom");
  }
  void run() {
    auto cfg = common.load();
    auto groom = load_groom(input);
    const std::size_t n = get_size(*cfg, "points");
    auto result = make<hgs_groom>([&](hgs_groom** o) { return hgs_groom_resample(groom.get(), n, o); });
    const std::string path = output_path(*cfg, out, "resampled.grm");
    check(hgs_groom_save(result.get(), path.c_str()));
    const auto [s, p] = counts(*result);
    std::printf("resample: %zu strands x %zu points -> %s\n", s, p, path.c_str());
  }
};

struct SimulateCmd {
  Common common;
  std::string out;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("--out", out, "output animation (GAN1)");
  }
  void run() {
    auto cfg = common.load();
    auto guides = load_groom(require_path(*cfg, "guides"));
    auto anim = make<hgs_anim>([&](hgs_anim** o) { return hgs_simulate(cfg.get(), guides.get(), o); });
    const std::string path = output_path(*cfg, out, "guides.gan1");
    check(hgs_anim_save(anim.get(), path.c_str()));
    std::size_t f = 0, s = 0, p = 0;
    check(hgs_anim_counts(anim.get(), &f, &s, &p));
    std::printf("simulate: %zu frames, %zu strands x %zu points -> %s\n", f, s, p, path.c_str());
  }
};

struct SkinCmd {
  Common common;
  std::string anim_path, out, map_out;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("--anim", anim_path, "simulated guide animation (GAN1)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output dense animation (GAN1)");
    sub->add_option("--map-out", map_out, "also write the skinning map (SKN1)");
  }
  void run() {
    auto cfg = common.load();
    auto dense = load_groom(require_path(*cfg, "groom"));
    auto guides = load_anim(anim_path, *cfg);
    auto guide_rest = make<hgs_groom>([&](hgs_groom** o) { return hgs_anim_frame(guides.get(), 0, o); });
    const std::size_t k = get_size(*cfg, "skin_k");
    const double eps = get_real(*cfg, "skin_epsilon");
    auto skin = make<hgs_skin>([&](hgs_skin** o) { return hgs_skin_build(dense.get(), guide_rest.get(), k, eps, o); });
    auto result = make<hgs_anim>([&](hgs_anim** o) { return hgs_skin_apply(skin.get(), guides.get(), dense.get(), o); });
    const std::string path = output_path(*cfg, out, "dense.gan1");
    check(hgs_anim_save(result.get(), path.c_str()));
    if (!map_out.empty()) check(hgs_skin_save(skin.get(), output_path(*cfg, map_out, "").c_str()));
    std::size_t f = 0, s = 0, p = 0;
    check(hgs_anim_counts(result.get(), &f, &s, &p));
    std::printf("skin: %zu frames, %zu strands x %zu points, k=%zu -> %s\n", f, s, p, k, path.c_str());
  }
};

struct SplatCmd {
  Common common;
  std::string anim_path, prefix;
  long frame = -1;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("--anim", anim_path, "render a frame of this animation with the groom's colors")
        ->check(CLI::ExistingFile);
    sub->add_option("--frame", frame, "frame index; negative counts from the end")->default_val(-1);
    sub->add_option("--prefix", prefix, "output prefix; writes <prefix>_<i>.ppm/.f32/.mask");
  }
  void run() {
    auto cfg = common.load();
    auto groom = load_groom(require_path(*cfg, "groom"));
    auto cameras = make<hgs_cameras>([&](hgs_cameras** o) { return hgs_cameras_load(require_path(*cfg, "cameras").c_str(), o); });
    Handle<hgs_groom> posed;
    if (!anim_path.empty()) {
      auto anim = load_anim(anim_path, *cfg);
      std::size_t frames = 0;
      check(hgs_anim_counts(anim.get(), &frames, nullptr, nullptr));
      const long index = frame < 0 ? static_cast<long>(frames) + frame : frame;
      if (index < 0) throw std::invalid_argument("--frame out of range");
      posed = make<hgs_groom>([&](hgs_groom** o) { return hgs_anim_frame(anim.get(), static_cast<std::size_t>(index), o); });
      if (hgs_groom_has_colors(groom.get())) {
        const auto [s, p] = counts(*groom);
        std::vector<double> rgb(3 * s * (p - 1));
        check(hgs_groom_colors(groom.get(), rgb.data(), rgb.size()));
        check(hgs_groom_set_colors(posed.get(), rgb.data(), rgb.size()));
      }
    }
    const hgs_groom* subject = posed ? posed.get() : groom.get();
    const auto bg = background(*cfg);
    const std::string base = output_path(*cfg, prefix, "view");
    const std::size_t n = hgs_cameras_count(cameras.get());
    for (std::size_t i = 0; i < n; ++i) {
      hgs_image* image_raw = nullptr;
      hgs_mask* mask_raw = nullptr;
      check(hgs_render(subject, cameras.get(), i, bg.data(), &image_raw, &mask_raw));
      Handle<hgs_image> image(image_raw);
      Handle<hgs_mask> mask(mask_raw);
      check(hgs_image_save_ppm(image.get(), view_path(base, i, ".ppm").c_str()));
      check(hgs_image_save_f32(image.get(), view_path(base, i, ".f32").c_str()));
      check(hgs_mask_save(mask.get(), view_path(base, i, ".mask").c_str()));
    }
    std::printf("splat: %zu views -> %s_*.ppm\n", n, base.c_str());
  }
};

struct FitColorsCmd {
  Common common;
  std::string targets, out, log;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("--targets", targets, "prefix of the target views written by splat")->required();
    sub->add_option("--out", out, "output groom with fitted colors");
    sub->add_option("--log", log, "per-iteration loss CSV");
  }
  void run() {
    auto cfg = common.load();
    auto groom = load_groom(require_path(*cfg, "groom"));
    const std::string cam_path = require_path(*cfg, "cameras");
    auto cameras = make<hgs_cameras>([&](hgs_cameras** o) { return hgs_cameras_load(cam_path.c_str(), o); });
    // Image sizes come from the cameras file.
    std::vector<std::pair<int, int>> sizes;
    {
      std::FILE* f = std::fopen(cam_path.c_str(), "r");
      if (f == nullptr) throw std::runtime_error("cannot open " + cam_path);
      char line[1024];
      while (std::fgets(line, sizeof line, f) != nullptr) {
        double focal = 0, cx = 0, cy = 0;
        int w = 0, h = 0;
        if (std::sscanf(line, "%lf %lf %lf %d %d", &focal, &cx, &cy, &w, &h) == 5) sizes.emplace_back(w, h);
      }
      std::fclose(f);
    }
    const std::size_t n = hgs_cameras_count(cameras.get());
    if (sizes.size() != n) throw std::runtime_error("cannot read image sizes from " + cam_path);
    std::vector<Handle<hgs_image>> images;
    std::vector<Handle<hgs_mask>> masks;
    std::vector<const hgs_image*> image_ptrs;
    std::vector<const hgs_mask*> mask_ptrs;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [w, h] = sizes[i];
      images.push_back(make<hgs_image>(
          [&](hgs_image** o) { return hgs_image_load_f32(view_path(targets, i, ".f32").c_str(), w, h, o); }));
      masks.push_back(make<hgs_mask>(
          [&](hgs_mask** o) { return hgs_mask_load(view_path(targets, i, ".mask").c_str(), w, h, o); }));
      image_ptrs.push_back(images.back().get());
      mask_ptrs.push_back(masks.back().get());
    }
    const std::string log_path = output_path(*cfg, log, "fit_log.csv");
    double loss = 0.0;
    auto fitted = make<hgs_groom>([&](hgs_groom** o) {
      return hgs_fit_colors(cfg.get(), groom.get(), cameras.get(), image_ptrs.data(), mask_ptrs.data(), n,
                            log_path.c_str(), o, &loss);
    });
    const std::string path = output_path(*cfg, out, "fitted.grm");
    check(hgs_groom_save(fitted.get(), path.c_str()));
    std::printf("fit-colors: %zu views, final loss=%s -> %s\n", n, fmt(loss).c_str(), path.c_str());
  }
};

struct MetricsCmd {
  Common common;
  std::string input, metrics_out, tracks_out;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("input", input, "animation to analyse (GAN1)")->required()->check(CLI::ExistingFile);
    sub->add_option("--metrics-out", metrics_out, "metrics CSV (default <output_dir>/metrics.csv)");
    sub->add_option("--tracks-out", tracks_out, "per-frame PC tracks CSV (default <output_dir>/pc_tracks.csv)");
  }
  void run() {
    auto cfg = common.load();
    auto anim = load_anim(input, *cfg);
    const std::size_t k = get_size(*cfg, "components");
    double pc1 = 0.0, ts = 0.0;
    check(hgs_metrics(anim.get(), k, &pc1, &ts));
    const std::string m = output_path(*cfg, metrics_out, "metrics.csv");
    const std::string t = output_path(*cfg, tracks_out, "pc_tracks.csv");
    check(hgs_metrics_save(anim.get(), k, m.c_str(), t.c_str()));
    std::printf("metrics: pc1=%s ts=%s\n", fmt(pc1).c_str(), fmt(ts).c_str());
  }
};

struct MakeSyntheticCmd {
  Common common;
  std::string out, cameras_out;
  std::size_t camera_count = 2;
  int image_size = 256;

  void attach(CLI::App* sub) {
    common.attach(sub);
    sub->add_option("--out", out, "output groom (GRM1, with colors)");
    sub->add_option("--cameras-out", cameras_out, "also write a ring of cameras around the head");
    sub->add_option("--camera-count", camera_count, "cameras in the ring")->default_val(2)->check(CLI::Range(1, 64));
    sub->add_option("--image-size", image_size, "square image size in pixels")->default_val(256)->check(CLI::Range(8, 4096));
  }
  void run() {
    auto cfg = common.load();
    const std::string style = Common::get(*cfg, "style");
    const std::size_t strands = get_size(*cfg, "strands"), points = get_size(*cfg, "points");
    const std::uint64_t seed = std::stoull(Common::get(*cfg, "seed"));
    auto groom = make<hgs_groom>(
        [&](hgs_groom** o) { return hgs_groom_make_synthetic(style.c_str(), strands, points, seed, o); });
    const std::string path = output_path(*cfg, out, "synthetic.grm");
    check(hgs_groom_save(groom.get(), path.c_str()));
    const auto [s, p] = counts(*groom);
    std::string extra;
    if (!cameras_out.empty()) {
      auto cams = make<hgs_cameras>([](hgs_cameras** o) { return hgs_cameras_create(o); });
      const double target[3] = {0.0, -0.06, 0.0};
      const double up[3] = {0.0, 1.0, 0.0};
      const double two_pi = 6.283185307179586;
      for (std::size_t i = 0; i < camera_count; ++i) {
        const double a = two_pi * static_cast<double>(i) / static_cast<double>(camera_count);
        const double eye[3] = {0.6 * std::sin(a), 0.05, 0.6 * std::cos(a)};
        check(hgs_cameras_add_look_at(cams.get(), eye, target, up, 1.2 * image_size, image_size, image_size));
      }
      const std::string cam_path = output_path(*cfg, cameras_out, "");
      check(hgs_cameras_save(cams.get(), cam_path.c_str()));
      extra = ", " + std::to_string(camera_count) + " cameras -> " + cam_path;
    }
    std::printf("make-synthetic: %s, %zu strands x %zu points, seed %llu -> %s%s\n", style.c_str(), s, p,
                static_cast<unsigned long long>(seed), path.c_str(), extra.c_str());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hairgs: strand simulation, skinning and Gaussian splat rendering pipeline"};
  app.require_subcommand(1);

  ResampleCmd resample;
  SimulateCmd simulate;
  SkinCmd skin;
  SplatCmd splat;
  FitColorsCmd fit;
  MetricsCmd metrics;
  MakeSyntheticCmd synth;
  resample.attach(app.add_subcommand("resample", "resample every strand to --points points"));
  simulate.attach(app.add_subcommand("simulate", "simulate the guide groom (--guides)"));
  skin.attach(app.add_subcommand("skin", "drive the dense groom (--groom) with a guide animation"));
  splat.attach(app.add_subcommand("splat", "render the groom through every camera"));
  fit.attach(app.add_subcommand("fit-colors", "fit strand colors to target views"));
  metrics.attach(app.add_subcommand("metrics", "PCA explained variance and temporal smoothness"));
  synth.attach(app.add_subcommand("make-synthetic", "generate a deterministic test wig"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), app.help().c_str());
    return 1;
  }

  const std::vector<std::pair<CLI::App*, std::function<void()>>> commands = {
      {app.get_subcommand("resample"), [&] { resample.run(); }},
      {app.get_subcommand("simulate"), [&] { simulate.run(); }},
      {app.get_subcommand("skin"), [&] { skin.run(); }},
      {app.get_subcommand("splat"), [&] { splat.run(); }},
      {app.get_subcommand("fit-colors"), [&] { fit.run(); }},
      {app.get_subcommand("metrics"), [&] { metrics.run(); }},
      {app.get_subcommand("make-synthetic"), [&] { synth.run(); }},
  };
  try {
    for (const auto& [sub, run] : commands)
      if (sub->parsed()) run();
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", hgs_status_name(f.status), hgs_last_error());
    return exit_code(f.status);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
