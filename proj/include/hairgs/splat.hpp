#pragma once

#include "hairgs/gaussian.hpp"
#include "hairgs/strand.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hairgs {

struct StrandColors;

/// Pinhole camera; world->camera is x_c = rotation * x + translation with
/// x right, y down, z forward. Pixel centers sit at integer coordinates.
struct Camera {
  double focal = 500.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0;
  int height = 0;

  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }

  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height);
};

void validate(const Camera& camera);

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovarianceFloor = 1e-6;
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinTransmittance = 1e-4;

struct Splat2D {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 1.0;
  std::size_t source = 0;  ///< index of the primitive this splat came from
};

/// R S S^T R^T.
Mat3 covariance3d(const Vec3& scale, const Eigen::Quaterniond& rotation);

/// Perspective projection with the first-order (Jacobian) covariance
/// approximation. Returns nullopt when the mean is at or behind the near plane.
std::optional<Splat2D> project_gaussian(const GaussianPrimitive& primitive, const Camera& camera);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  Image() = default;
  Image(int w, int h, const Vec3& fill = Vec3::Zero())
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  Vec3& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

/// Per-pixel compositing weights, CSR by pixel. weight = alpha_i * prod_{j<i}(1 - alpha_j).
struct WeightMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> offsets;  ///< pixel count + 1
  std::vector<std::uint32_t> splat;    ///< splat (or primitive) index per entry
  std::vector<double> weight;
  std::vector<double> transmittance;   ///< per pixel, what reaches the background
};

struct RasterResult {
  Image image;
  std::size_t skipped = 0;  ///< splats with an unusable covariance
};

/// Front-to-back alpha compositing of splats sorted by depth (ties by input
/// index), restricted per splat to its 3-sigma ellipse. When `weights` is
/// given it receives the per-pixel compositing weights keyed by splat index.
RasterResult rasterize(std::span<const Splat2D> splats, const Camera& camera, const Vec3& background,
                       WeightMap* weights = nullptr);

struct RenderResult {
  Image image;
  WeightMap weights;  ///< keyed by primitive index
  std::vector<GaussianPrimitive> primitives;
  std::size_t culled = 0;
  std::size_t skipped = 0;
};

RenderResult render_primitives(std::vector<GaussianPrimitive> primitives, const Camera& camera,
                               const Vec3& background);

RenderResult render_groom(const Groom& groom, const StrandColors& colors, const Camera& camera,
                          const Vec3& background);

/// Hair coverage (1 - transmittance) thresholded into a binary mask.
Mask coverage_mask(const WeightMap& weights, double threshold = 0.01);

}  // namespace hairgs
