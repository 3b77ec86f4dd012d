#pragma once

#include "hairgs/animation.hpp"
#include "hairgs/strand.hpp"

#include <cstdint>
#include <vector>

namespace hairgs {

/// Inverse-distance weights binding each dense strand to its k nearest guides
/// (by root position at rest). Dense point j corresponds to guide arc
/// parameter u = j / (dense_points - 1).
struct SkinningMap {
  std::size_t k = 0;
  double epsilon = 1e-8;
  std::vector<std::uint32_t> guide_indices;  ///< dense_count * k
  std::vector<double> weights;               ///< dense_count * k, each row sums to 1

  std::size_t dense_count() const { return k == 0 ? 0 : weights.size() / k; }
};

inline constexpr std::size_t kDefaultSkinningNeighbors = 10;
inline constexpr double kDefaultSkinningEpsilon = 1e-8;

/// w = 1 / (d + epsilon), normalized per dense strand.
SkinningMap build_skinning(const Groom& dense, const Groom& guides, std::size_t k = kDefaultSkinningNeighbors,
                           double epsilon = kDefaultSkinningEpsilon);

/// Displacement of guide `strand` between two frames, sampled at arc
/// parameter u by linear interpolation between guide points.
Vec3 guide_displacement(const Groom& current, const Groom& previous, std::size_t strand, double u);

/// D_0 = dense_rest; D_t = D_{t-1} + sum_j w_j (S_t(j) - S_{t-1}(j)) at each
/// dense point's arc parameter.
GuideAnimation apply_skinning(const SkinningMap& map, const GuideAnimation& guides, const Groom& dense_rest);

}  // namespace hairgs
