#pragma once

#include "hairgs/strand.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace hairgs {

/// Thickness of a strand-segment Gaussian across the strand (meters).
inline constexpr double kStrandThickness = 1e-4;

/// Number of SH values stored per primitive: four bands, three channels.
inline constexpr std::size_t kShValues = 48;

struct GaussianPrimitive {
  Vec3 mean = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity = 1.0;
  Vec3 color = Vec3::Zero();
  /// Band 0 holds the color; higher bands are stored but not shaded.
  std::optional<std::array<double, kShValues>> sh;
  std::uint32_t strand = 0;
  std::uint32_t segment = 0;
};

}  // namespace hairgs
