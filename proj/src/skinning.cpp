#include "hairgs/skinning.hpp"

#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"

#include <cmath>
#include <string>

namespace hairgs {

SkinningMap build_skinning(const Groom& dense, const Groom& guides, std::size_t k, double epsilon) {
  if (guides.strand_count() == 0) fail(ErrorCode::invalid_input, "skinning needs at least one guide strand");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::invalid_input, "epsilon must be >= 0");
  validate(dense);
  validate(guides);
  const auto neighbors = knn_roots(dense, guides, k);

  SkinningMap map;
  map.k = k;
  map.epsilon = epsilon;
  map.guide_indices.resize(dense.strand_count() * k);
  map.weights.resize(dense.strand_count() * k);
  for (std::size_t i = 0; i < dense.strand_count(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 1.0 / (neighbors[i][j].distance + epsilon);
      map.guide_indices[i * k + j] = static_cast<std::uint32_t>(neighbors[i][j].index);
      map.weights[i * k + j] = w;
      sum += w;
    }
    if (!std::isfinite(sum))
      fail(ErrorCode::invalid_input, "dense strand " + std::to_string(i) + " coincides with a guide root and epsilon is 0");
    for (std::size_t j = 0; j < k; ++j) map.weights[i * k + j] /= sum;
  }
  return map;
}

Vec3 guide_displacement(const Groom& current, const Groom& previous, std::size_t strand, double u) {
  const std::size_t segments = current.points_per_strand - 1;
  const double s = u * static_cast<double>(segments);
  std::size_t lo = static_cast<std::size_t>(std::floor(s));
  if (lo >= segments) lo = segments - 1;
  const double t = s - static_cast<double>(lo);
  const auto cur = current.strand(strand);
  const auto prev = previous.strand(strand);
  const Vec3 d0 = cur[lo] - prev[lo];
  const Vec3 d1 = cur[lo + 1] - prev[lo + 1];
  if (t == 0.0) return d0;
  if (t == 1.0) return d1;
  return (1.0 - t) * d0 + t * d1;
}

GuideAnimation apply_skinning(const SkinningMap& map, const GuideAnimation& guides, const Groom& dense_rest) {
  validate(dense_rest);
  validate(guides);
  if (guides.frames.empty()) fail(ErrorCode::invalid_input, "guide animation has no frames");
  if (map.dense_count() != dense_rest.strand_count())
    fail(ErrorCode::invalid_input, "skinning map covers " + std::to_string(map.dense_count()) +
                                       " dense strands but the rest groom has " +
                                       std::to_string(dense_rest.strand_count()));
  const std::size_t guide_count = guides.strand_count();
  for (std::uint32_t g : map.guide_indices)
    if (g >= guide_count)
      fail(ErrorCode::invalid_input, "skinning map references guide " + std::to_string(g) + " but frame 0 has " +
                                         std::to_string(guide_count) + " guides");
  if (guides.points_per_strand() < 2) fail(ErrorCode::invalid_input, "guide frames need >= 2 points per strand");

  const std::size_t pps = dense_rest.points_per_strand;
  const std::size_t k = map.k;
  GuideAnimation out;
  out.frame_dt = guides.frame_dt;
  out.frames.reserve(guides.frames.size());
  out.frames.push_back(dense_rest);

  for (std::size_t f = 1; f < guides.frames.size(); ++f) {
    const Groom& cur = guides.frames[f];
    const Groom& prev = guides.frames[f - 1];
    Groom next = out.frames.back();
    parallel_for(dense_rest.strand_count(), [&](std::size_t i) {
      auto dst = next.strand(i);
      for (std::size_t p = 0; p < pps; ++p) {
        const double u = static_cast<double>(p) / static_cast<double>(pps - 1);
        Vec3 delta = Vec3::Zero();
        for (std::size_t j = 0; j < k; ++j)
          delta += map.weights[i * k + j] * guide_displacement(cur, prev, map.guide_indices[i * k + j], u);
        if (!delta.isZero(0.0)) dst[p] += delta;
      }
    });
    out.frames.push_back(std::move(next));
  }
  return out;
}

}  // namespace hairgs
