#ifndef HAIRGS_H
#define HAIRGS_H

/*
 * C interface to the hairgs library.
 *
 * Objects are opaque handles created by hgs_*_create/load functions and
 * released with the matching hgs_*_destroy (which accept NULL). Every
 * fallible call returns an hgs_status; on failure hgs_last_error() holds a
 * message for the calling thread until its next failing call.
 *
 * Points and colors cross the boundary as flat double arrays, strand-major,
 * three values per point (x y z or r g b).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HAIRGS_BUILDING)
#    define HGS_API __declspec(dllexport)
#  else
#    define HGS_API __declspec(dllimport)
#  endif
#else
#  define HGS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hgs_status {
  HGS_OK = 0,
  HGS_ERR_INVALID_INPUT = 1,
  HGS_ERR_DEGENERATE_STRAND = 2,
  HGS_ERR_FORMAT = 3,
  HGS_ERR_IO = 4,
  HGS_ERR_CONFIG = 5,
  HGS_ERR_DIVERGED = 6,
  HGS_ERR_OUT_OF_MEMORY = 7,
  HGS_ERR_INTERNAL = 8
} hgs_status;

typedef struct hgs_config hgs_config;
typedef struct hgs_groom hgs_groom;
typedef struct hgs_anim hgs_anim;
typedef struct hgs_skin hgs_skin;
typedef struct hgs_cameras hgs_cameras;
typedef struct hgs_image hgs_image;
typedef struct hgs_mask hgs_mask;

typedef void (*hgs_warning_fn)(const char* message, void* user);

HGS_API const char* hgs_version(void);
HGS_API const char* hgs_last_error(void);
HGS_API const char* hgs_status_name(hgs_status status);
/* NULL restores the default sink (stderr). */
HGS_API void hgs_set_warning_callback(hgs_warning_fn fn, void* user);
/* 0 uses every hardware thread. Results do not depend on this value. */
HGS_API void hgs_set_thread_count(unsigned count);

/* ---- configuration ---- */
HGS_API hgs_status hgs_config_create(hgs_config** out);
HGS_API hgs_status hgs_config_load(const char* path, hgs_config** out);
HGS_API hgs_status hgs_config_save(const hgs_config* config, const char* path);
HGS_API hgs_status hgs_config_set(hgs_config* config, const char* key, const char* value);
/* Copies the value and its terminator into buf when it fits; *needed (if
 * non-NULL) receives the size required including the terminator. */
HGS_API hgs_status hgs_config_get(const hgs_config* config, const char* key, char* buf, size_t capacity,
                                  size_t* needed);
HGS_API size_t hgs_config_key_count(void);
HGS_API const char* hgs_config_key_name(size_t index);
HGS_API hgs_status hgs_config_validate(const hgs_config* config);
HGS_API void hgs_config_destroy(hgs_config* config);

/* ---- grooms ---- */
HGS_API hgs_status hgs_groom_create(size_t strands, size_t points_per_strand, const double* xyz, hgs_groom** out);
HGS_API hgs_status hgs_groom_load(const char* path, hgs_groom** out);
/* Writes per-segment colors too when the groom carries them. */
HGS_API hgs_status hgs_groom_save(const hgs_groom* groom, const char* path);
/* style: "straight-bob", "wavy" or "single-strand". Includes colors. */
HGS_API hgs_status hgs_groom_make_synthetic(const char* style, size_t strands, size_t points_per_strand,
                                            uint64_t seed, hgs_groom** out);
HGS_API hgs_status hgs_groom_counts(const hgs_groom* groom, size_t* strands, size_t* points_per_strand);
/* count must equal 3 * strands * points_per_strand. */
HGS_API hgs_status hgs_groom_points(const hgs_groom* groom, double* xyz, size_t count);
HGS_API int hgs_groom_has_colors(const hgs_groom* groom);
/* count must equal 3 * strands * (points_per_strand - 1). */
HGS_API hgs_status hgs_groom_colors(const hgs_groom* groom, double* rgb, size_t count);
HGS_API hgs_status hgs_groom_set_colors(hgs_groom* groom, const double* rgb, size_t count);
/* Chord-length resampling; the result has no colors. */
HGS_API hgs_status hgs_groom_resample(const hgs_groom* groom, size_t points_per_strand, hgs_groom** out);
HGS_API hgs_status hgs_groom_copy(const hgs_groom* groom, hgs_groom** out);
HGS_API void hgs_groom_destroy(hgs_groom* groom);

/* ---- animations ---- */
/* Frames must share one shape; they are copied without colors. */
HGS_API hgs_status hgs_anim_create(const hgs_groom* const* frames, size_t count, double frame_dt, hgs_anim** out);
HGS_API hgs_status hgs_anim_load(const char* path, double frame_dt, hgs_anim** out);
HGS_API hgs_status hgs_anim_save(const hgs_anim* anim, const char* path);
HGS_API hgs_status hgs_anim_counts(const hgs_anim* anim, size_t* frames, size_t* strands, size_t* points_per_strand);
HGS_API hgs_status hgs_anim_frame(const hgs_anim* anim, size_t index, hgs_groom** out);
HGS_API void hgs_anim_destroy(hgs_anim* anim);

/* Simulates `guides` with the config's hair parameters, solver settings,
 * frame_count and frame_dt. The config's colliders and track paths are read
 * when set; without colliders a head sphere is fitted to the roots. */
HGS_API hgs_status hgs_simulate(const hgs_config* config, const hgs_groom* guides, hgs_anim** out);

/* ---- skinning ---- */
HGS_API hgs_status hgs_skin_build(const hgs_groom* dense, const hgs_groom* guides, size_t k, double epsilon,
                                  hgs_skin** out);
HGS_API hgs_status hgs_skin_load(const char* path, hgs_skin** out);
HGS_API hgs_status hgs_skin_save(const hgs_skin* skin, const char* path);
HGS_API hgs_status hgs_skin_apply(const hgs_skin* skin, const hgs_anim* guides, const hgs_groom* dense_rest,
                                  hgs_anim** out);
HGS_API void hgs_skin_destroy(hgs_skin* skin);

/* ---- cameras and rendering ---- */
HGS_API hgs_status hgs_cameras_load(const char* path, hgs_cameras** out);
/* focal in pixels; principal point at the image center. */
HGS_API hgs_status hgs_cameras_add_look_at(hgs_cameras* cameras, const double eye[3], const double target[3],
                                           const double up[3], double focal, int width, int height);
HGS_API hgs_status hgs_cameras_create(hgs_cameras** out);
HGS_API hgs_status hgs_cameras_save(const hgs_cameras* cameras, const char* path);
HGS_API size_t hgs_cameras_count(const hgs_cameras* cameras);
HGS_API void hgs_cameras_destroy(hgs_cameras* cameras);

/* Renders a colored groom (0.5 gray when it has none). mask may be NULL. */
HGS_API hgs_status hgs_render(const hgs_groom* groom, const hgs_cameras* cameras, size_t camera,
                              const double background[3], hgs_image** image, hgs_mask** mask);

HGS_API hgs_status hgs_image_size(const hgs_image* image, int* width, int* height);
/* count must equal 3 * width * height; row-major, interleaved rgb. */
HGS_API hgs_status hgs_image_pixels(const hgs_image* image, double* rgb, size_t count);
HGS_API hgs_status hgs_image_save_ppm(const hgs_image* image, const char* path);
HGS_API hgs_status hgs_image_save_f32(const hgs_image* image, const char* path);
HGS_API hgs_status hgs_image_load_f32(const char* path, int width, int height, hgs_image** out);
HGS_API void hgs_image_destroy(hgs_image* image);

HGS_API hgs_status hgs_mask_save(const hgs_mask* mask, const char* path);
HGS_API hgs_status hgs_mask_load(const char* path, int width, int height, hgs_mask** out);
HGS_API void hgs_mask_destroy(hgs_mask* mask);

/* ---- appearance ---- */
/* Fits per-segment colors of `groom` to one target image and mask per
 * camera using the config's fit settings. log_path (may be NULL) receives
 * the per-iteration loss CSV. *out is a copy of the groom with colors. */
HGS_API hgs_status hgs_fit_colors(const hgs_config* config, const hgs_groom* groom, const hgs_cameras* cameras,
                                  const hgs_image* const* targets, const hgs_mask* const* masks, size_t count,
                                  const char* log_path, hgs_groom** out, double* final_loss);

/* ---- metrics ---- */
/* pc1 in percent; ts over the top `components` principal components. */
HGS_API hgs_status hgs_metrics(const hgs_anim* anim, size_t components, double* pc1_percent, double* ts);
/* Writes the one-line metrics CSV and the per-frame PC/std track CSV. */
HGS_API hgs_status hgs_metrics_save(const hgs_anim* anim, size_t components, const char* metrics_path,
                                    const char* tracks_path);

#ifdef __cplusplus
}
#endif

#endif
