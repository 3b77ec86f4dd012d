#pragma once

#include "hairgs/appearance.hpp"
#include "hairgs/dynamics.hpp"
#include "hairgs/strand.hpp"

#include <cstdint>
#include <string_view>

namespace hairgs {

enum class SyntheticStyle { straight_bob, wavy, single_strand };

SyntheticStyle parse_style(std::string_view name);

/// Scalp sphere the synthetic wigs grow from (y up, meters).
inline constexpr double kScalpRadius = 0.1;

struct SyntheticWig {
  Groom groom;
  StrandColors colors;   ///< smooth color field over the scalp
  ColliderSet scalp;     ///< the scalp sphere
};

/// Deterministic test wig: roots on the upper scalp hemisphere, strands that
/// follow the head and then fall. `strands` is ignored for single-strand.
SyntheticWig make_synthetic(SyntheticStyle style, std::size_t strands, std::size_t points, std::uint64_t seed);

}  // namespace hairgs
