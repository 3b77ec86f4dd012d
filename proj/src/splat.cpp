#include "hairgs/splat.hpp"

#include "hairgs/appearance.hpp"
#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace hairgs {

namespace {

constexpr int kTileSize = 16;
constexpr double kCoverageSigma = 3.0;

struct Entry {
  std::uint32_t pixel;
  std::uint32_t splat;
  double weight;
};

}  // namespace

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Camera c;
  c.focal = focal;
  c.width = width;
  c.height = height;
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;
  c.rotation.row(0) = right.transpose();
  c.rotation.row(1) = down.transpose();
  c.rotation.row(2) = forward.transpose();
  c.translation = -(c.rotation * eye);
  return c;
}

void validate(const Camera& camera) {
  if (!(camera.focal > 0.0) || !std::isfinite(camera.focal)) fail(ErrorCode::invalid_input, "camera focal must be > 0");
  if (camera.width <= 0 || camera.height <= 0) fail(ErrorCode::invalid_input, "camera image size must be positive");
  if (!camera.rotation.allFinite() || !camera.translation.allFinite() || !std::isfinite(camera.cx) ||
      !std::isfinite(camera.cy))
    fail(ErrorCode::invalid_input, "camera parameters must be finite");
  const double err = (camera.rotation.transpose() * camera.rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-9 || std::abs(camera.rotation.determinant() - 1.0) > 1e-9)
    fail(ErrorCode::invalid_input, "camera rotation is not orthonormal");
}

Mat3 covariance3d(const Vec3& scale, const Eigen::Quaterniond& rotation) {
  const Mat3 r = rotation.normalized().toRotationMatrix();
  const Mat3 m = r * scale.asDiagonal();
  Mat3 cov = m * m.transpose();
  cov.triangularView<Eigen::StrictlyLower>() = cov.transpose().triangularView<Eigen::StrictlyLower>();
  return cov;
}

std::optional<Splat2D> project_gaussian(const GaussianPrimitive& primitive, const Camera& camera) {
  const Vec3 p = camera.to_camera(primitive.mean);
  const double z = p.z();
  if (!(z > kNearPlane)) return std::nullopt;

  const Mat3 sigma = camera.rotation * covariance3d(primitive.scale, primitive.rotation) * camera.rotation.transpose();
  Eigen::Matrix<double, 2, 3> j;
  j << camera.focal / z, 0.0, -camera.focal * p.x() / (z * z),  //
      0.0, camera.focal / z, -camera.focal * p.y() / (z * z);

  Splat2D s;
  s.mean = {camera.focal * p.x() / z + camera.cx, camera.focal * p.y() / z + camera.cy};
  s.cov = j * sigma * j.transpose() + kCovarianceFloor * Eigen::Matrix2d::Identity();
  s.cov(1, 0) = s.cov(0, 1);
  s.depth = z;
  s.color = primitive.color;
  s.opacity = primitive.opacity;
  return s;
}

namespace {

int floor_int(double v) {
  const int i = static_cast<int>(v);
  return i - (v < i);
}

int ceil_int(double v) {
  const int i = static_cast<int>(v);
  return i + (v > i);
}

// Row-wise x extent of a splat's 3-sigma ellipse: center(y) +/- half(y) with
// half^2 quadratic in the row offset. `pad` covers rounding so the span is
// never narrower than the pixels the Mahalanobis test accepts.
struct RowSpan {
  double mx, my, slope, k2, k0, pad;

  RowSpan(const Eigen::Matrix2d& inverse, const Eigen::Vector2d& mean) : mx(mean.x()), my(mean.y()) {
    const double a = inverse(0, 0), b = inverse(0, 1), c = inverse(1, 1);
    slope = b / a;
    k2 = (b * b - a * c) / (a * a);
    k0 = kCoverageSigma * kCoverageSigma / a;
    pad = 1e-3 + 1e-9 * k0;
  }

  std::pair<double, double> at(double y) const {
    const double dy = y - my;
    const double half = std::sqrt(std::max(0.0, k2 * dy * dy + k0)) + pad;
    const double center = mx - slope * dy;
    return {center - half, center + half};
  }

  // Integer pixel columns in [lo, hi] that the span can touch.
  std::pair<int, int> columns(double y, int lo, int hi) const {
    const auto [left, right] = at(y);
    return {std::max(lo, ceil_int(std::max(left, lo - 1.0))), std::min(hi, floor_int(std::min(right, hi + 1.0)))};
  }
};

}  // namespace

RasterResult rasterize(std::span<const Splat2D> splats, const Camera& camera, const Vec3& background,
                       WeightMap* weights) {
  validate(camera);
  const int width = camera.width, height = camera.height;
  RasterResult result;
  result.image = Image(width, height, background);

  std::vector<std::uint32_t> order(splats.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return splats[a].depth < splats[b].depth; });

  struct Prepared {
    std::uint32_t index;
    Eigen::Matrix2d inverse;
    int x0, x1, y0, y1;
    RowSpan span;
  };
  const int tiles_x = (width + kTileSize - 1) / kTileSize;
  const int tiles_y = (height + kTileSize - 1) / kTileSize;
  std::vector<Prepared> prepared;
  prepared.reserve(order.size());
  std::vector<std::vector<std::uint32_t>> tile_lists(static_cast<std::size_t>(tiles_x) * tiles_y);

  for (std::uint32_t idx : order) {
    const Splat2D& s = splats[idx];
    const double det = s.cov.determinant();
    if (!(det > 0.0) || !std::isfinite(det) || !s.mean.allFinite() || s.cov(0, 0) <= 0.0 || s.cov(1, 1) <= 0.0) {
      ++result.skipped;
      continue;
    }
    const double rx = kCoverageSigma * std::sqrt(s.cov(0, 0));
    const double ry = kCoverageSigma * std::sqrt(s.cov(1, 1));
    const double fx0 = std::ceil(s.mean.x() - rx), fx1 = std::floor(s.mean.x() + rx);
    const double fy0 = std::ceil(s.mean.y() - ry), fy1 = std::floor(s.mean.y() + ry);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > width - 1 || fy0 > height - 1) continue;
    Prepared p{idx, s.cov.inverse(), static_cast<int>(std::max(fx0, 0.0)),
               static_cast<int>(std::min<double>(fx1, width - 1)), static_cast<int>(std::max(fy0, 0.0)),
               static_cast<int>(std::min<double>(fy1, height - 1)), RowSpan(s.cov.inverse(), s.mean)};
    const auto slot = static_cast<std::uint32_t>(prepared.size());
    // Per band of tile rows, the ellipse's x extent: the right edge is
    // concave in y and peaks at y_right, the left edge is convex with its
    // minimum at y_left, so clamping those rows into the band bounds it.
    const double y_right = s.mean.y() + kCoverageSigma * s.cov(0, 1) / std::sqrt(s.cov(0, 0));
    const double y_left = 2.0 * s.mean.y() - y_right;
    for (int ty = p.y0 / kTileSize; ty <= p.y1 / kTileSize; ++ty) {
      const double band_lo = std::max(p.y0, ty * kTileSize), band_hi = std::min(p.y1, ty * kTileSize + kTileSize - 1);
      const int x_lo = p.span.columns(std::clamp(y_left, band_lo, band_hi), p.x0, p.x1).first;
      const int x_hi = p.span.columns(std::clamp(y_right, band_lo, band_hi), p.x0, p.x1).second;
      for (int tx = x_lo / kTileSize; tx <= x_hi / kTileSize && x_lo <= x_hi; ++tx)
        tile_lists[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(slot);
    }
    prepared.push_back(p);
  }

  std::vector<std::vector<Entry>> tile_entries(weights ? tile_lists.size() : 0);
  std::vector<double> transmittance(weights ? static_cast<std::size_t>(width) * height : 0, 1.0);

  // Splat-major within a tile: each splat visits only the pixels of its
  // 3-sigma ellipse row span, while every pixel still composites its splats
  // in depth order.
  constexpr double kCutoff = kCoverageSigma * kCoverageSigma;
  parallel_for(tile_lists.size(), [&](std::size_t t) {
    const int tx = static_cast<int>(t % tiles_x), ty = static_cast<int>(t / tiles_x);
    const int xb = tx * kTileSize, xe = std::min(width, xb + kTileSize);
    const int yb = ty * kTileSize, ye = std::min(height, yb + kTileSize);
    const int tile_w = xe - xb;
    std::array<double, kTileSize * kTileSize> trans;
    std::array<Vec3, kTileSize * kTileSize> color;
    std::array<std::uint32_t, kTileSize> done{};  // bit x - xb set once a pixel is saturated
    trans.fill(1.0);
    color.fill(Vec3::Zero());
    const std::uint32_t full_row = (1u << tile_w) - 1u;
    int open_rows = ye - yb;

    for (std::uint32_t slot : tile_lists[t]) {
      if (open_rows == 0) break;
      const Prepared& p = prepared[slot];
      const Splat2D& s = splats[p.index];
      for (int y = std::max(p.y0, yb); y <= std::min(p.y1, ye - 1); ++y) {
        std::uint32_t& row_done = done[static_cast<std::size_t>(y - yb)];
        if (row_done == full_row) continue;
        const auto [x0, x1] = p.span.columns(y, std::max(p.x0, xb), std::min(p.x1, xe - 1));
        if (x0 > x1) continue;
        const std::uint32_t span_bits = ((2u << (x1 - x0)) - 1u) << (x0 - xb);
        if ((row_done & span_bits) == span_bits) continue;
        const double dy = y - s.mean.y();
        const double qa = p.inverse(0, 0), qb = 2.0 * p.inverse(0, 1) * dy, qc = p.inverse(1, 1) * dy * dy;
        for (int x = x0; x <= x1; ++x) {
          if (row_done >> (x - xb) & 1u) continue;
          const int k = (y - yb) * tile_w + (x - xb);
          const double dx = x - s.mean.x();
          const double maha = (qa * dx + qb) * dx + qc;
          if (maha > kCutoff) continue;
          const double alpha = std::min(kMaxAlpha, s.opacity * std::exp(-0.5 * maha));
          const double w = alpha * trans[k];
          color[k] += w * s.color;
          if (weights) tile_entries[t].push_back({static_cast<std::uint32_t>(y * width + x), p.index, w});
          trans[k] *= 1.0 - alpha;
          if (trans[k] < kMinTransmittance) {
            row_done |= 1u << (x - xb);
            open_rows -= row_done == full_row;
          }
        }
      }
    }
    for (int y = yb; y < ye; ++y)
      for (int x = xb; x < xe; ++x) {
        const int k = (y - yb) * tile_w + (x - xb);
        result.image.at(x, y) = color[k] + trans[k] * background;
        if (weights) transmittance[static_cast<std::size_t>(y) * width + x] = trans[k];
      }
  });

  if (weights) {
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    WeightMap& wm = *weights;
    wm.width = width;
    wm.height = height;
    wm.offsets.assign(pixels + 1, 0);
    for (const auto& entries : tile_entries)
      for (const Entry& e : entries) ++wm.offsets[e.pixel + 1];
    std::partial_sum(wm.offsets.begin(), wm.offsets.end(), wm.offsets.begin());
    wm.splat.assign(wm.offsets.back(), 0);
    wm.weight.assign(wm.offsets.back(), 0.0);
    std::vector<std::uint32_t> cursor(wm.offsets.begin(), wm.offsets.end() - 1);
    for (const auto& entries : tile_entries)
      for (const Entry& e : entries) {
        const std::uint32_t at = cursor[e.pixel]++;
        wm.splat[at] = e.splat;
        wm.weight[at] = e.weight;
      }
    wm.transmittance = std::move(transmittance);
  }
  return result;
}

RenderResult render_primitives(std::vector<GaussianPrimitive> primitives, const Camera& camera,
                               const Vec3& background) {
  validate(camera);
  RenderResult out;
  std::vector<std::optional<Splat2D>> projected(primitives.size());
  parallel_for(primitives.size(), [&](std::size_t i) { projected[i] = project_gaussian(primitives[i], camera); });
  std::vector<Splat2D> splats;
  splats.reserve(primitives.size());
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    if (!projected[i]) {
      ++out.culled;
      continue;
    }
    projected[i]->source = i;
    splats.push_back(*projected[i]);
  }
  RasterResult raster = rasterize(splats, camera, background, &out.weights);
  for (std::uint32_t& s : out.weights.splat) s = static_cast<std::uint32_t>(splats[s].source);
  out.image = std::move(raster.image);
  out.skipped = raster.skipped;
  out.primitives = std::move(primitives);
  return out;
}

RenderResult render_groom(const Groom& groom, const StrandColors& colors, const Camera& camera,
                          const Vec3& background) {
  return render_primitives(strand_gaussians(groom, colors).primitives, camera, background);
}

Mask coverage_mask(const WeightMap& weights, double threshold) {
  Mask m;
  m.width = weights.width;
  m.height = weights.height;
  m.values.resize(weights.transmittance.size());
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = 1.0 - weights.transmittance[i] > threshold ? 1.0 : 0.0;
  return m;
}

}  // namespace hairgs
