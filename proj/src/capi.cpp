#include "hairgs/hairgs.h"

#include "hairgs/config.hpp"
#include "hairgs/error.hpp"
#include "hairgs/io.hpp"
#include "hairgs/metrics.hpp"
#include "hairgs/parallel.hpp"
#include "hairgs/synthetic.hpp"

#include <cstring>
#include <new>
#include <optional>
#include <string>

using namespace hairgs;

struct hgs_config {
  PipelineConfig value;
};
struct hgs_groom {
  Groom groom;
  std::optional<StrandColors> colors;
};
struct hgs_anim {
  GuideAnimation value;
};
struct hgs_skin {
  SkinningMap value;
};
struct hgs_cameras {
  std::vector<Camera> value;
};
struct hgs_image {
  Image value;
};
struct hgs_mask {
  Mask value;
};

namespace {

thread_local std::string last_error;

hgs_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return HGS_ERR_INVALID_INPUT;
    case ErrorCode::degenerate_strand: return HGS_ERR_DEGENERATE_STRAND;
    case ErrorCode::format: return HGS_ERR_FORMAT;
    case ErrorCode::io: return HGS_ERR_IO;
    case ErrorCode::config: return HGS_ERR_CONFIG;
    case ErrorCode::diverged: return HGS_ERR_DIVERGED;
  }
  return HGS_ERR_INTERNAL;
}

template <class F>
hgs_status guard(F&& body) noexcept {
  try {
    body();
    return HGS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HGS_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HGS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return HGS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::invalid_input, std::string(name) + " is null");
}

void need_count(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected)
    fail(ErrorCode::invalid_input, std::string(what) + ": expected " + std::to_string(expected) + " values, got " +
                                       std::to_string(got));
}

template <class T>
void give(T** out, T value) {
  *out = new T(std::move(value));
}

Vec3 vec(const double* v) { return {v[0], v[1], v[2]}; }

}  // namespace

extern "C" {

const char* hgs_version(void) { return "1.0.0"; }

const char* hgs_last_error(void) { return last_error.c_str(); }

const char* hgs_status_name(hgs_status status) {
  switch (status) {
    case HGS_OK: return "ok";
    case HGS_ERR_INVALID_INPUT: return "invalid input";
    case HGS_ERR_DEGENERATE_STRAND: return "degenerate strand";
    case HGS_ERR_FORMAT: return "format error";
    case HGS_ERR_IO: return "i/o error";
    case HGS_ERR_CONFIG: return "config error";
    case HGS_ERR_DIVERGED: return "simulation diverged";
    case HGS_ERR_OUT_OF_MEMORY: return "out of memory";
    case HGS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void hgs_set_warning_callback(hgs_warning_fn fn, void* user) { set_warning_sink(fn, user); }

void hgs_set_thread_count(unsigned count) { set_thread_count(count); }

// ---- configuration ----

hgs_status hgs_config_create(hgs_config** out) {
  return guard([&] {
    need(out, "out");
    give(out, hgs_config{});
  });
}

hgs_status hgs_config_load(const char* path, hgs_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_config{load_config(path)});
  });
}

hgs_status hgs_config_save(const hgs_config* config, const char* path) {
  return guard([&] {
    need(config, "config");
    need(path, "path");
    write_file_atomic(path, format_config(config->value));
  });
}

hgs_status hgs_config_set(hgs_config* config, const char* key, const char* value) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    set_config_value(config->value, key, value);
  });
}

hgs_status hgs_config_get(const hgs_config* config, const char* key, char* buf, size_t capacity, size_t* needed) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    const std::string value = get_config_value(config->value, key);
    if (needed != nullptr) *needed = value.size() + 1;
    if (buf != nullptr && capacity > value.size()) std::memcpy(buf, value.c_str(), value.size() + 1);
  });
}

size_t hgs_config_key_count(void) { return config_keys().size(); }

const char* hgs_config_key_name(size_t index) {
  const auto& keys = config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

hgs_status hgs_config_validate(const hgs_config* config) {
  return guard([&] {
    need(config, "config");
    validate(config->value);
  });
}

void hgs_config_destroy(hgs_config* config) { delete config; }

// ---- grooms ----

hgs_status hgs_groom_create(size_t strands, size_t points_per_strand, const double* xyz, hgs_groom** out) {
  return guard([&] {
    need(xyz, "xyz");
    need(out, "out");
    Groom g(strands, points_per_strand);
    for (std::size_t i = 0; i < g.points.size(); ++i) g.points[i] = vec(xyz + 3 * i);
    validate(g);
    give(out, hgs_groom{std::move(g), std::nullopt});
  });
}

hgs_status hgs_groom_load(const char* path, hgs_groom** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    GroomFile f = load_groom(path);
    give(out, hgs_groom{std::move(f.groom), std::move(f.colors)});
  });
}

hgs_status hgs_groom_save(const hgs_groom* groom, const char* path) {
  return guard([&] {
    need(groom, "groom");
    need(path, "path");
    save_groom(path, groom->groom, groom->colors ? &*groom->colors : nullptr);
  });
}

hgs_status hgs_groom_make_synthetic(const char* style, size_t strands, size_t points_per_strand, uint64_t seed,
                                    hgs_groom** out) {
  return guard([&] {
    need(style, "style");
    need(out, "out");
    SyntheticWig wig = make_synthetic(parse_style(style), strands, points_per_strand, seed);
    give(out, hgs_groom{std::move(wig.groom), std::move(wig.colors)});
  });
}

hgs_status hgs_groom_counts(const hgs_groom* groom, size_t* strands, size_t* points_per_strand) {
  return guard([&] {
    need(groom, "groom");
    if (strands != nullptr) *strands = groom->groom.strand_count();
    if (points_per_strand != nullptr) *points_per_strand = groom->groom.points_per_strand;
  });
}

hgs_status hgs_groom_points(const hgs_groom* groom, double* xyz, size_t count) {
  return guard([&] {
    need(groom, "groom");
    need(xyz, "xyz");
    const auto& pts = groom->groom.points;
    need_count(count, 3 * pts.size(), "groom points");
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (int c = 0; c < 3; ++c) xyz[3 * i + c] = pts[i][c];
  });
}

int hgs_groom_has_colors(const hgs_groom* groom) { return groom != nullptr && groom->colors.has_value(); }

hgs_status hgs_groom_colors(const hgs_groom* groom, double* rgb, size_t count) {
  return guard([&] {
    need(groom, "groom");
    need(rgb, "rgb");
    if (!groom->colors) fail(ErrorCode::invalid_input, "groom has no colors");
    const auto& c = groom->colors->rgb;
    need_count(count, 3 * c.size(), "groom colors");
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int k = 0; k < 3; ++k) rgb[3 * i + k] = c[i][k];
  });
}

hgs_status hgs_groom_set_colors(hgs_groom* groom, const double* rgb, size_t count) {
  return guard([&] {
    need(groom, "groom");
    need(rgb, "rgb");
    const Groom& g = groom->groom;
    StrandColors colors(g.strand_count(), g.segments_per_strand());
    need_count(count, 3 * colors.rgb.size(), "groom colors");
    for (std::size_t i = 0; i < colors.rgb.size(); ++i) colors.rgb[i] = vec(rgb + 3 * i);
    validate(colors, g);
    groom->colors = std::move(colors);
  });
}

hgs_status hgs_groom_resample(const hgs_groom* groom, size_t points_per_strand, hgs_groom** out) {
  return guard([&] {
    need(groom, "groom");
    need(out, "out");
    give(out, hgs_groom{resample_groom(groom->groom, points_per_strand), std::nullopt});
  });
}

hgs_status hgs_groom_copy(const hgs_groom* groom, hgs_groom** out) {
  return guard([&] {
    need(groom, "groom");
    need(out, "out");
    give(out, *groom);
  });
}

void hgs_groom_destroy(hgs_groom* groom) { delete groom; }

// ---- animations ----

hgs_status hgs_anim_create(const hgs_groom* const* frames, size_t count, double frame_dt, hgs_anim** out) {
  return guard([&] {
    need(frames, "frames");
    need(out, "out");
    if (!(frame_dt > 0.0)) fail(ErrorCode::invalid_input, "frame_dt must be > 0");
    GuideAnimation anim;
    anim.frame_dt = frame_dt;
    for (std::size_t i = 0; i < count; ++i) {
      need(frames[i], "frame");
      anim.frames.push_back(frames[i]->groom);
    }
    validate(anim);
    give(out, hgs_anim{std::move(anim)});
  });
}

hgs_status hgs_anim_load(const char* path, double frame_dt, hgs_anim** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_anim{load_animation(path, frame_dt)});
  });
}

hgs_status hgs_anim_save(const hgs_anim* anim, const char* path) {
  return guard([&] {
    need(anim, "anim");
    need(path, "path");
    save_animation(path, anim->value);
  });
}

hgs_status hgs_anim_counts(const hgs_anim* anim, size_t* frames, size_t* strands, size_t* points_per_strand) {
  return guard([&] {
    need(anim, "anim");
    if (frames != nullptr) *frames = anim->value.frame_count();
    if (strands != nullptr) *strands = anim->value.strand_count();
    if (points_per_strand != nullptr) *points_per_strand = anim->value.points_per_strand();
  });
}

hgs_status hgs_anim_frame(const hgs_anim* anim, size_t index, hgs_groom** out) {
  return guard([&] {
    need(anim, "anim");
    need(out, "out");
    if (index >= anim->value.frame_count())
      fail(ErrorCode::invalid_input, "frame " + std::to_string(index) + " out of range (" +
                                         std::to_string(anim->value.frame_count()) + " frames)");
    give(out, hgs_groom{anim->value.frames[index], std::nullopt});
  });
}

void hgs_anim_destroy(hgs_anim* anim) { delete anim; }

hgs_status hgs_simulate(const hgs_config* config, const hgs_groom* guides, hgs_anim** out) {
  return guard([&] {
    need(config, "config");
    need(guides, "guides");
    need(out, "out");
    const PipelineConfig& c = config->value;
    validate(c);
    const ColliderSet colliders =
        c.colliders.empty() ? default_head_collider(guides->groom) : load_colliders(c.colliders);
    const PoseTrack track = c.track.empty() ? PoseTrack{} : load_pose_track(c.track);
    give(out, hgs_anim{simulate(guides->groom, c.hair, c.sim, colliders, track, c.frame_count, c.frame_dt)});
  });
}

// ---- skinning ----

hgs_status hgs_skin_build(const hgs_groom* dense, const hgs_groom* guides, size_t k, double epsilon,
                          hgs_skin** out) {
  return guard([&] {
    need(dense, "dense");
    need(guides, "guides");
    need(out, "out");
    give(out, hgs_skin{build_skinning(dense->groom, guides->groom, k, epsilon)});
  });
}

hgs_status hgs_skin_load(const char* path, hgs_skin** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_skin{load_skinning(path)});
  });
}

hgs_status hgs_skin_save(const hgs_skin* skin, const char* path) {
  return guard([&] {
    need(skin, "skin");
    need(path, "path");
    save_skinning(path, skin->value);
  });
}

hgs_status hgs_skin_apply(const hgs_skin* skin, const hgs_anim* guides, const hgs_groom* dense_rest,
                          hgs_anim** out) {
  return guard([&] {
    need(skin, "skin");
    need(guides, "guides");
    need(dense_rest, "dense_rest");
    need(out, "out");
    give(out, hgs_anim{apply_skinning(skin->value, guides->value, dense_rest->groom)});
  });
}

void hgs_skin_destroy(hgs_skin* skin) { delete skin; }

// ---- cameras and rendering ----

hgs_status hgs_cameras_create(hgs_cameras** out) {
  return guard([&] {
    need(out, "out");
    give(out, hgs_cameras{});
  });
}

hgs_status hgs_cameras_load(const char* path, hgs_cameras** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_cameras{load_cameras(path)});
  });
}

hgs_status hgs_cameras_add_look_at(hgs_cameras* cameras, const double eye[3], const double target[3],
                                   const double up[3], double focal, int width, int height) {
  return guard([&] {
    need(cameras, "cameras");
    need(eye, "eye");
    need(target, "target");
    need(up, "up");
    Camera cam = Camera::look_at(vec(eye), vec(target), vec(up), focal, width, height);
    validate(cam);
    cameras->value.push_back(cam);
  });
}

hgs_status hgs_cameras_save(const hgs_cameras* cameras, const char* path) {
  return guard([&] {
    need(cameras, "cameras");
    need(path, "path");
    write_file_atomic(path, format_cameras(cameras->value));
  });
}

size_t hgs_cameras_count(const hgs_cameras* cameras) { return cameras == nullptr ? 0 : cameras->value.size(); }

void hgs_cameras_destroy(hgs_cameras* cameras) { delete cameras; }

hgs_status hgs_render(const hgs_groom* groom, const hgs_cameras* cameras, size_t camera, const double background[3],
                      hgs_image** image, hgs_mask** mask) {
  return guard([&] {
    need(groom, "groom");
    need(cameras, "cameras");
    need(background, "background");
    need(image, "image");
    if (camera >= cameras->value.size())
      fail(ErrorCode::invalid_input, "camera " + std::to_string(camera) + " out of range");
    const Groom& g = groom->groom;
    const StrandColors colors = groom->colors ? *groom->colors : StrandColors(g.strand_count(), g.segments_per_strand());
    RenderResult r = render_groom(g, colors, cameras->value[camera], vec(background));
    if (mask != nullptr) give(mask, hgs_mask{coverage_mask(r.weights)});
    give(image, hgs_image{std::move(r.image)});
  });
}

hgs_status hgs_image_size(const hgs_image* image, int* width, int* height) {
  return guard([&] {
    need(image, "image");
    if (width != nullptr) *width = image->value.width;
    if (height != nullptr) *height = image->value.height;
  });
}

hgs_status hgs_image_pixels(const hgs_image* image, double* rgb, size_t count) {
  return guard([&] {
    need(image, "image");
    need(rgb, "rgb");
    const auto& px = image->value.pixels;
    need_count(count, 3 * px.size(), "image pixels");
    for (std::size_t i = 0; i < px.size(); ++i)
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = px[i][c];
  });
}

hgs_status hgs_image_save_ppm(const hgs_image* image, const char* path) {
  return guard([&] {
    need(image, "image");
    need(path, "path");
    save_ppm(path, image->value);
  });
}

hgs_status hgs_image_save_f32(const hgs_image* image, const char* path) {
  return guard([&] {
    need(image, "image");
    need(path, "path");
    write_file_atomic(path, encode_planes(image->value));
  });
}

hgs_status hgs_image_load_f32(const char* path, int width, int height, hgs_image** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_image{decode_planes(read_file(path), width, height)});
  });
}

void hgs_image_destroy(hgs_image* image) { delete image; }

hgs_status hgs_mask_save(const hgs_mask* mask, const char* path) {
  return guard([&] {
    need(mask, "mask");
    need(path, "path");
    write_file_atomic(path, encode_mask(mask->value));
  });
}

hgs_status hgs_mask_load(const char* path, int width, int height, hgs_mask** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    give(out, hgs_mask{decode_mask(read_file(path), width, height)});
  });
}

void hgs_mask_destroy(hgs_mask* mask) { delete mask; }

// ---- appearance ----

hgs_status hgs_fit_colors(const hgs_config* config, const hgs_groom* groom, const hgs_cameras* cameras,
                          const hgs_image* const* targets, const hgs_mask* const* masks, size_t count,
                          const char* log_path, hgs_groom** out, double* final_loss) {
  return guard([&] {
    need(config, "config");
    need(groom, "groom");
    need(cameras, "cameras");
    need(out, "out");
    if (count > 0) {
      need(targets, "targets");
      need(masks, "masks");
    }
    if (count != cameras->value.size())
      fail(ErrorCode::invalid_input, "need one target per camera: " + std::to_string(cameras->value.size()) +
                                         " cameras, " + std::to_string(count) + " targets");
    std::vector<Image> images;
    std::vector<Mask> mask_values;
    for (std::size_t i = 0; i < count; ++i) {
      need(targets[i], "target");
      need(masks[i], "mask");
      images.push_back(targets[i]->value);
      mask_values.push_back(masks[i]->value);
    }
    FitResult r = fit_colors(groom->groom, cameras->value, images, mask_values, fit_options(config->value));
    if (log_path != nullptr) write_file_atomic(log_path, format_fit_log(r.log));
    if (final_loss != nullptr) *final_loss = r.log.empty() ? 0.0 : r.log.back().total;
    give(out, hgs_groom{groom->groom, std::move(r.colors)});
  });
}

// ---- metrics ----

hgs_status hgs_metrics(const hgs_anim* anim, size_t components, double* pc1_percent, double* ts) {
  return guard([&] {
    need(anim, "anim");
    const MotionMatrix m = motion_matrix(anim->value);
    if (pc1_percent != nullptr) *pc1_percent = explained_variance_pc1(m);
    if (ts != nullptr) *ts = temporal_smoothness(m, components);
  });
}

hgs_status hgs_metrics_save(const hgs_anim* anim, size_t components, const char* metrics_path,
                            const char* tracks_path) {
  return guard([&] {
    need(anim, "anim");
    const MotionMatrix m = motion_matrix(anim->value);
    if (metrics_path != nullptr)
      write_file_atomic(metrics_path,
                        format_metrics(explained_variance_pc1(m), temporal_smoothness(m, components), components));
    if (tracks_path != nullptr) write_file_atomic(tracks_path, format_pc_tracks(pc_std_tracks(m, components)));
  });
}

}  // extern "C"
