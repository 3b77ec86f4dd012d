#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hairgs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A set of strands with a uniform point count, stored strand-major.
/// Point 0 of every strand is the root (scalp attachment). Units are meters.
struct Groom {
  std::size_t points_per_strand = 0;
  std::vector<Vec3> points;

  Groom() = default;
  Groom(std::size_t strands, std::size_t points_per_strand)
      : points_per_strand(points_per_strand), points(strands * points_per_strand, Vec3::Zero()) {}

  std::size_t strand_count() const { return points_per_strand == 0 ? 0 : points.size() / points_per_strand; }
  std::size_t segments_per_strand() const { return points_per_strand == 0 ? 0 : points_per_strand - 1; }

  std::span<const Vec3> strand(std::size_t i) const {
    return {points.data() + i * points_per_strand, points_per_strand};
  }
  std::span<Vec3> strand(std::size_t i) { return {points.data() + i * points_per_strand, points_per_strand}; }

  const Vec3& root(std::size_t i) const { return points[i * points_per_strand]; }

  friend bool operator==(const Groom&, const Groom&) = default;
};

/// Throws invalid_input unless the groom has >= 2 points per strand, a
/// consistent point buffer and finite coordinates.
void validate(const Groom& groom);

/// Orthonormal segment frame; rotation columns are [tangent normal binormal].
struct SegmentFrame {
  Vec3 tangent;
  Vec3 normal;
  Vec3 binormal;

  Mat3 rotation() const {
    Mat3 r;
    r.col(0) = tangent;
    r.col(1) = normal;
    r.col(2) = binormal;
    return r;
  }
};

double arc_length(std::span<const Vec3> strand);

/// Chord-length resampling: output point j sits at arc fraction j/(n-1) of the
/// input polyline. Endpoints are copied exactly.
std::vector<Vec3> resample_strand(std::span<const Vec3> strand, std::size_t n);

Groom resample_groom(const Groom& groom, std::size_t n);

/// One frame per segment. The normal follows the discrete curvature direction;
/// nearly straight stretches use a fixed reference axis, and consecutive
/// normals are kept on the same side so binormals never flip.
std::vector<SegmentFrame> tnb_frames(std::span<const Vec3> strand);

/// Below this curvature magnitude the normal uses the reference-axis fallback.
inline constexpr double kCurvatureEpsilon = 1e-8;

struct Neighbor {
  std::size_t index;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// k nearest reference points for each query point, ascending distance with
/// ties broken by ascending reference index.
std::vector<std::vector<Neighbor>> knn_points(std::span<const Vec3> query, std::span<const Vec3> reference,
                                              std::size_t k);

/// knn_points over the strand roots of two grooms.
std::vector<std::vector<Neighbor>> knn_roots(const Groom& query, const Groom& reference, std::size_t k);

std::vector<Vec3> roots_of(const Groom& groom);

}  // namespace hairgs
