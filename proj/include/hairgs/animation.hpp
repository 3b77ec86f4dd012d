#pragma once

#include "hairgs/strand.hpp"

#include <vector>

namespace hairgs {

/// Sequence of same-shaped grooms sampled every frame_dt seconds.
struct GuideAnimation {
  double frame_dt = 1.0 / 30.0;
  std::vector<Groom> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t strand_count() const { return frames.empty() ? 0 : frames.front().strand_count(); }
  std::size_t points_per_strand() const { return frames.empty() ? 0 : frames.front().points_per_strand; }
};

/// Throws invalid_input if frames differ in shape.
void validate(const GuideAnimation& anim);

}  // namespace hairgs
