#pragma once

#include "hairgs/animation.hpp"
#include "hairgs/strand.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hairgs {

/// Hair system parameters with the default hair-system values.
///
/// Resistances are dimensionless stiffnesses saturating at kRigidResistance.
/// twist_resistance and static_cling are accepted but have no effect: a
/// polyline carries no twist degree of freedom and there is no cling model.
struct HairParams {
  double mass = 2.0;
  double drag = 0.65;
  double tangential_drag = 0.096;
  double damp = 0.25;
  double stretch_damp = 1.0;
  double stretch_resistance = 600.0;
  double compression_resistance = 600.0;
  double bend_resistance = 10.0;
  double twist_resistance = 1.718;
  int extra_bend_links = 1;
  double start_curve_attract = 2.0;
  bool self_collide = true;
  double friction = 0.51087;
  double stickiness = 0.51087;
  double dynamics_weight = 1.0;
  double static_cling = 0.025;
};

void validate(const HairParams& params);

struct SimConfig {
  double dt = 1.0 / 60.0;  ///< step length; each step runs `substeps` substeps
  int substeps = 10;
  int solver_iters = 10;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  Vec3 wind_direction = Vec3::UnitX();
  double wind_strength = 0.0;        ///< force per unit mass
  double wind_gust_frequency = 0.0;  ///< Hz; 0 means constant wind
  double collision_radius = 0.002;   ///< particle radius for self-collision
  int collision_passes = 2;          ///< self-collision passes per substep
};

void validate(const SimConfig& config);

/// Resistance value that maps to a rigid constraint.
inline constexpr double kRigidResistance = 600.0;
/// Spring rate (1/s^2) per unit of start_curve_attract.
inline constexpr double kAttractRate = 100.0;

/// Per-iteration projection factor for a resistance so that `iters`
/// iterations reach the same total correction regardless of the count.
double projection_factor(double resistance, int iters);

struct RigidTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_inverse(const Vec3& p) const { return rotation.conjugate() * (p - translation); }

  /// Slerp/lerp; t == 0 and t == 1 return the endpoints exactly.
  static RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double t);
};

struct PoseKey {
  double time = 0.0;
  RigidTransform pose;
};

/// Rigid head motion as keyframes. Sampling clamps outside the keyed range;
/// an empty track is the identity.
struct PoseTrack {
  std::vector<PoseKey> keys;

  RigidTransform at(double time) const;
};

void validate(const PoseTrack& track);

struct Sphere {
  Vec3 center;
  double radius;
};

struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius;
};

/// Colliders expressed in the head frame.
struct ColliderSet {
  std::vector<Sphere> spheres;
  std::vector<Capsule> capsules;

  bool empty() const { return spheres.empty() && capsules.empty(); }
};

void validate(const ColliderSet& colliders);

/// Sphere sitting just inside the guide roots: least-squares sphere fit,
/// radius shrunk to 0.95 of the closest root distance.
ColliderSet default_head_collider(const Groom& guides);

struct SimState {
  std::size_t points_per_strand = 0;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Vec3> rest_local;    ///< rest pose in the head frame
  std::vector<std::uint8_t> pinned;
  std::vector<double> rest_lengths;  ///< per segment, strand-major
  RigidTransform head_pose;
  ColliderSet colliders;
  double time = 0.0;

  std::size_t particle_count() const { return positions.size(); }
  std::size_t strand_count() const { return points_per_strand == 0 ? 0 : positions.size() / points_per_strand; }

  friend bool operator==(const SimState& a, const SimState& b);
};

SimState init_sim(const Groom& guides, const HairParams& params, const ColliderSet& colliders);

/// Advance one step of config.dt, moving the head from pose_begin to pose_end.
SimState step(SimState state, const HairParams& params, const SimConfig& config, const RigidTransform& pose_begin,
              const RigidTransform& pose_end);
void advance(SimState& state, const HairParams& params, const SimConfig& config, const RigidTransform& pose_begin,
             const RigidTransform& pose_end);

using IterationObserver = std::function<void(int iteration, std::span<const Vec3> positions)>;

/// Gauss-Seidel sweeps: stretch, bend, root pinning, collider projection.
/// Returns per-particle contact flags from the last collider pass.
std::vector<std::uint8_t> solve_constraints(SimState& state, const HairParams& params, int iters,
                                            const IterationObserver& observer = {});

/// Pushes apart particles closer than 2*radius (ignoring same-strand pairs
/// within 2 indices). Pinned particles do not move. Passes repeat until no
/// pair overlaps or `max_passes` is reached. Returns the passes that moved
/// something.
inline constexpr int kMaxCollisionPasses = 64;
int self_collisions(std::span<Vec3> positions, std::size_t points_per_strand, std::span<const std::uint8_t> pinned,
                    double radius, int max_passes = kMaxCollisionPasses);
int self_collisions(SimState& state, double radius, int max_passes = kMaxCollisionPasses);

/// Largest |length - rest| / rest over all stretch constraints.
double max_stretch_residual(std::span<const Vec3> positions, std::size_t points_per_strand,
                            std::span<const double> rest_lengths);

double kinetic_energy(const SimState& state, double mass);

GuideAnimation simulate(const Groom& guides, const HairParams& params, const SimConfig& config,
                        const ColliderSet& colliders, const PoseTrack& track, std::size_t frame_count,
                        double frame_dt);

}  // namespace hairgs
