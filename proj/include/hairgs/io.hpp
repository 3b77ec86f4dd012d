#pragma once

#include "hairgs/animation.hpp"
#include "hairgs/appearance.hpp"
#include "hairgs/dynamics.hpp"
#include "hairgs/metrics.hpp"
#include "hairgs/skinning.hpp"
#include "hairgs/splat.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hairgs {

// All binary formats are little-endian float32/u32. Readers throw
// ErrorCode::format with the byte offset of the problem.

struct GroomFile {
  Groom groom;
  std::optional<StrandColors> colors;  ///< COL0 chunk
};

std::string encode_groom(const Groom& groom, const StrandColors* colors = nullptr);
GroomFile decode_groom(std::string_view bytes);
void save_groom(const std::string& path, const Groom& groom, const StrandColors* colors = nullptr);
GroomFile load_groom(const std::string& path);

/// GAN1 has no frame-rate field; loaded animations carry `frame_dt`.
std::string encode_animation(const GuideAnimation& anim);
GuideAnimation decode_animation(std::string_view bytes, double frame_dt);
void save_animation(const std::string& path, const GuideAnimation& anim);
GuideAnimation load_animation(const std::string& path, double frame_dt);

std::string encode_skinning(const SkinningMap& map);
SkinningMap decode_skinning(std::string_view bytes);
void save_skinning(const std::string& path, const SkinningMap& map);
SkinningMap load_skinning(const std::string& path);

/// `t,qw,qx,qy,qz,tx,ty,tz` per line; an optional header line is skipped.
PoseTrack parse_pose_track(std::string_view text);
std::string format_pose_track(const PoseTrack& track);
PoseTrack load_pose_track(const std::string& path);

/// `sphere cx cy cz r` or `capsule ax ay az bx by bz r` per line.
ColliderSet parse_colliders(std::string_view text);
std::string format_colliders(const ColliderSet& colliders);
ColliderSet load_colliders(const std::string& path);

/// `f cx cy w h r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz` per line.
std::vector<Camera> parse_cameras(std::string_view text);
std::string format_cameras(const std::vector<Camera>& cameras);
std::vector<Camera> load_cameras(const std::string& path);

/// Binary P6, maxval 255, round(255 * clamp(v, 0, 1)).
std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view bytes);
void save_ppm(const std::string& path, const Image& image);

/// Headerless float32 planes (R, G, B); size comes from the caller.
std::string encode_planes(const Image& image);
Image decode_planes(std::string_view bytes, int width, int height);
std::string encode_mask(const Mask& mask);
Mask decode_mask(std::string_view bytes, int width, int height);

std::string format_fit_log(const std::vector<FitLogEntry>& log);
std::string format_metrics(double pc1_percent, double ts, std::size_t components);
std::string format_pc_tracks(const PcTracks& tracks);

std::string read_file(const std::string& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace hairgs
