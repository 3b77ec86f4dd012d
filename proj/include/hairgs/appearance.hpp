#pragma once

#include "hairgs/gaussian.hpp"
#include "hairgs/splat.hpp"
#include "hairgs/strand.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hairgs {

/// One rgb triple per strand segment, strand-major.
struct StrandColors {
  std::size_t segments_per_strand = 0;
  std::vector<Vec3> rgb;

  StrandColors() = default;
  StrandColors(std::size_t strands, std::size_t segments, const Vec3& fill = Vec3::Constant(0.5))
      : segments_per_strand(segments), rgb(strands * segments, fill) {}

  std::size_t strand_count() const { return segments_per_strand == 0 ? 0 : rgb.size() / segments_per_strand; }
  std::span<const Vec3> strand(std::size_t i) const {
    return {rgb.data() + i * segments_per_strand, segments_per_strand};
  }
  std::span<Vec3> strand(std::size_t i) { return {rgb.data() + i * segments_per_strand, segments_per_strand}; }

  friend bool operator==(const StrandColors&, const StrandColors&) = default;
};

/// Throws invalid_input unless the colors match the groom's strand/segment shape.
void validate(const StrandColors& colors, const Groom& groom);

/// Directed neighbor lists, N(i) per strand.
struct StrandGraph {
  std::vector<std::vector<std::uint32_t>> neighbors;

  std::size_t size() const { return neighbors.size(); }
};

inline constexpr std::size_t kDefaultGraphNeighbors = 5;

/// k nearest strands by root distance, excluding the strand itself.
StrandGraph build_strand_graph(const Groom& groom, std::size_t k = kDefaultGraphNeighbors);

struct GaussianSet {
  std::vector<GaussianPrimitive> primitives;
  std::vector<std::size_t> skipped_strands;  ///< degenerate strands that produced nothing
};

/// One elongated Gaussian per non-degenerate segment: mean at the midpoint,
/// scale (length, kStrandThickness, kStrandThickness), rotation [T N B].
GaussianSet strand_gaussians(const Groom& groom, const StrandColors& colors);

/// sum_i sum_{j in N(i)} |c_i - c_j|^2 over directed pairs as stored.
double consistency_loss(const StrandColors& colors, const StrandGraph& graph);
StrandColors consistency_gradient(const StrandColors& colors, const StrandGraph& graph);

/// Largest step for which gradient descent on the consistency loss cannot
/// increase it: 1 / (2 max_i (out_degree_i + in_degree_i)), i.e. 1/(4k) on a
/// regular graph.
double diffusion_step_bound(const StrandGraph& graph);

/// Gradient descent on the consistency loss over strands with fixed[i] == 0;
/// colors stay clamped to [0,1]. `losses`, if given, receives the loss before
/// each step and after the last.
StrandColors diffuse_colors(const StrandColors& colors, const StrandGraph& graph, std::span<const std::uint8_t> fixed,
                            std::size_t steps, double step_size, std::vector<double>* losses = nullptr);

/// Masked L1 photometric loss over fixed geometry. Rendering is linear in the
/// colors, so the weight maps are computed once and reused.
class PhotometricObjective {
 public:
  PhotometricObjective(const Groom& groom, std::span<const Camera> cameras, std::span<const Image> targets,
                       std::span<const Mask> masks, const Vec3& background);

  double loss(const StrandColors& colors) const;
  /// Exact subgradient (sign of zero residual taken as 0).
  StrandColors gradient(const StrandColors& colors) const;

  /// Per strand: 1 if any masked pixel sees one of its segments.
  const std::vector<std::uint8_t>& observed() const { return observed_; }
  bool empty_mask() const { return empty_mask_; }

 private:
  struct View {
    WeightMap weights;
    std::vector<Vec3> base;  ///< background term per pixel
    const Image* target;
    const Mask* mask;
  };
  Image render(const View& view, const StrandColors& colors) const;

  std::size_t strands_ = 0;
  std::size_t segments_ = 0;
  std::vector<std::uint32_t> primitive_slot_;  ///< primitive -> strand * segments + segment
  std::vector<View> views_;
  std::vector<std::uint8_t> observed_;
  bool empty_mask_ = true;
};

struct FitOptions {
  double lambda_consistency = 0.01;
  std::size_t iterations = 600;
  double phase_fraction = 3.0 / 50.0;  ///< photometric-only share of the iterations
  double learning_rate = 0.05;
  double final_learning_rate = 5e-4;
  std::size_t graph_neighbors = kDefaultGraphNeighbors;
  Vec3 background = Vec3::Zero();
  Vec3 initial_color = Vec3::Constant(0.5);
};

struct FitLogEntry {
  std::size_t iter;
  double loss_rgb;
  double loss_consistency;
  double total;
};

struct FitResult {
  StrandColors colors;
  std::vector<FitLogEntry> log;
  std::vector<std::uint8_t> observed;
};

/// Optimizes strand colors only (Adam, exponentially decaying rate). The
/// consistency term joins after phase_fraction of the iterations.
FitResult fit_colors(const Groom& groom, std::span<const Camera> cameras, std::span<const Image> targets,
                     std::span<const Mask> masks, const FitOptions& options);

}  // namespace hairgs
