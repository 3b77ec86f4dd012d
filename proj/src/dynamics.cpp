#include "hairgs/dynamics.hpp"

#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"
#include "spatial_grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hairgs {

namespace {

bool finite(const Vec3& p) { return p.allFinite(); }

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::invalid_input, message);
}

struct WorldColliders {
  std::vector<Sphere> spheres;
  std::vector<Capsule> capsules;
};

WorldColliders to_world(const ColliderSet& set, const RigidTransform& pose) {
  WorldColliders w;
  for (const Sphere& s : set.spheres) w.spheres.push_back({pose.apply(s.center), s.radius});
  for (const Capsule& c : set.capsules) w.capsules.push_back({pose.apply(c.a), pose.apply(c.b), c.radius});
  return w;
}

// Projects p out of every collider; returns true on contact and the last
// contact normal in `normal`.
bool project_out(Vec3& p, const WorldColliders& colliders, Vec3& normal) {
  bool contact = false;
  for (const Sphere& s : colliders.spheres) {
    const Vec3 d = p - s.center;
    const double dist = d.norm();
    if (dist < s.radius) {
      normal = dist > 0.0 ? Vec3(d / dist) : Vec3::UnitZ();
      p = s.center + s.radius * normal;
      contact = true;
    }
  }
  for (const Capsule& c : colliders.capsules) {
    const Vec3 axis = c.b - c.a;
    const double len2 = axis.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - c.a).dot(axis) / len2, 0.0, 1.0) : 0.0;
    const Vec3 closest = c.a + t * axis;
    const Vec3 d = p - closest;
    const double dist = d.norm();
    if (dist < c.radius) {
      normal = dist > 0.0 ? Vec3(d / dist) : Vec3::UnitZ();
      p = closest + c.radius * normal;
      contact = true;
    }
  }
  return contact;
}

// Outward normal of the collider surface nearest to p.
Vec3 contact_normal(const Vec3& p, const WorldColliders& colliders) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::Zero();
  auto consider = [&](const Vec3& center, double radius) {
    const Vec3 off = p - center;
    const double dist = off.norm();
    const double gap = std::abs(dist - radius);
    if (dist > 0.0 && gap < best) {
      best = gap;
      normal = off / dist;
    }
  };
  for (const Sphere& s : colliders.spheres) consider(s.center, s.radius);
  for (const Capsule& c : colliders.capsules) {
    const Vec3 axis = c.b - c.a;
    const double len2 = axis.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - c.a).dot(axis) / len2, 0.0, 1.0) : 0.0;
    consider(c.a + t * axis, c.radius);
  }
  return normal;
}

// Moves a and b toward separation `target` along their difference.
void project_distance(Vec3& a, Vec3& b, double wa, double wb, double target, double factor) {
  const double wsum = wa + wb;
  if (wsum <= 0.0 || factor <= 0.0) return;
  const Vec3 d = b - a;
  const double len = d.norm();
  if (!(len > 0.0)) return;
  const Vec3 corr = (factor * (len - target) / (len * wsum)) * d;
  a += wa * corr;
  b -= wb * corr;
}

Vec3 local_tangent(std::span<const Vec3> x, std::size_t i) {
  if (x.size() < 2) return Vec3::Zero();
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const std::size_t hi = std::min(i + 1, x.size() - 1);
  const Vec3 d = x[hi] - x[lo];
  const double len = d.norm();
  return len > 0.0 ? Vec3(d / len) : Vec3::Zero();
}

std::vector<double> bend_rest(std::span<const Vec3> rest, std::size_t pps, int extra_links) {
  std::vector<double> out;
  const std::size_t strands = pps == 0 ? 0 : rest.size() / pps;
  for (std::size_t s = 0; s < strands; ++s)
    for (int l = 1; l <= extra_links; ++l)
      for (std::size_t i = 0; i + 1 + static_cast<std::size_t>(l) < pps; ++i)
        out.push_back((rest[s * pps + i + 1 + l] - rest[s * pps + i]).norm());
  return out;
}

}  // namespace

void validate(const GuideAnimation& anim) {
  for (std::size_t f = 0; f < anim.frames.size(); ++f) {
    const Groom& g = anim.frames[f];
    if (g.points_per_strand != anim.frames.front().points_per_strand ||
        g.points.size() != anim.frames.front().points.size())
      fail(ErrorCode::invalid_input, "animation frame " + std::to_string(f) + " has a different shape than frame 0");
  }
}

void validate(const HairParams& p) {
  require(std::isfinite(p.mass) && p.mass > 0.0, "mass must be > 0");
  for (double v : {p.drag, p.tangential_drag, p.stretch_damp, p.stretch_resistance, p.compression_resistance,
                   p.bend_resistance, p.twist_resistance, p.start_curve_attract, p.static_cling})
    require(std::isfinite(v) && v >= 0.0, "hair parameters must be finite and >= 0");
  for (double v : {p.damp, p.friction, p.stickiness, p.dynamics_weight})
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "damp, friction, stickiness and dynamics_weight must be in [0,1]");
  require(p.extra_bend_links >= 0, "extra_bend_links must be >= 0");
}

void validate(const SimConfig& c) {
  require(std::isfinite(c.dt) && c.dt > 0.0, "dt must be > 0");
  require(c.substeps >= 1, "substeps must be >= 1");
  require(c.solver_iters >= 1, "solver_iters must be >= 1");
  require(finite(c.gravity), "gravity must be finite");
  require(std::isfinite(c.wind_strength) && c.wind_strength >= 0.0, "wind_strength must be >= 0");
  require(std::isfinite(c.wind_gust_frequency) && c.wind_gust_frequency >= 0.0, "wind_gust_frequency must be >= 0");
  if (c.wind_strength > 0.0)
    require(std::abs(c.wind_direction.norm() - 1.0) < 1e-6, "wind_direction must be a unit vector");
  require(std::isfinite(c.collision_radius) && c.collision_radius > 0.0, "collision_radius must be > 0");
  require(c.collision_passes >= 1, "collision_passes must be >= 1");
}

double projection_factor(double resistance, int iters) {
  const double s = std::clamp(resistance / kRigidResistance, 0.0, 1.0);
  if (s >= 1.0) return 1.0;
  return 1.0 - std::pow(1.0 - s, 1.0 / static_cast<double>(std::max(iters, 1)));
}

RigidTransform RigidTransform::interpolate(const RigidTransform& a, const RigidTransform& b, double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  return {a.rotation.slerp(t, b.rotation).normalized(), a.translation + t * (b.translation - a.translation)};
}

RigidTransform PoseTrack::at(double time) const {
  if (keys.empty()) return {};
  if (time <= keys.front().time) return keys.front().pose;
  if (time >= keys.back().time) return keys.back().pose;
  auto hi = std::upper_bound(keys.begin(), keys.end(), time, [](double t, const PoseKey& k) { return t < k.time; });
  auto lo = hi - 1;
  const double u = (time - lo->time) / (hi->time - lo->time);
  return RigidTransform::interpolate(lo->pose, hi->pose, u);
}

void validate(const PoseTrack& track) {
  for (std::size_t i = 0; i < track.keys.size(); ++i) {
    const PoseKey& k = track.keys[i];
    require(std::isfinite(k.time) && finite(k.pose.translation) && k.pose.rotation.coeffs().allFinite(),
            "pose key " + std::to_string(i) + " is not finite");
    require(std::abs(k.pose.rotation.norm() - 1.0) <= 1e-9,
            "pose key " + std::to_string(i) + " quaternion is not unit-norm");
    if (i > 0) require(k.time > track.keys[i - 1].time, "pose key times must be strictly increasing");
  }
}

void validate(const ColliderSet& colliders) {
  for (const Sphere& s : colliders.spheres)
    require(finite(s.center) && std::isfinite(s.radius) && s.radius > 0.0, "sphere collider needs radius > 0");
  for (const Capsule& c : colliders.capsules)
    require(finite(c.a) && finite(c.b) && std::isfinite(c.radius) && c.radius > 0.0,
            "capsule collider needs radius > 0");
}

ColliderSet default_head_collider(const Groom& guides) {
  const std::vector<Vec3> roots = roots_of(guides);
  ColliderSet out;
  if (roots.size() < 4) {
    warn("too few guide roots for a head collider fit; simulating without colliders");
    return out;
  }
  // |p|^2 = 2 p.c + (r^2 - |c|^2)
  Eigen::MatrixXd a(roots.size(), 4);
  Eigen::VectorXd b(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) << 2.0 * roots[i].transpose(), 1.0;
    b(static_cast<Eigen::Index>(i)) = roots[i].squaredNorm();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) {
    warn("guide roots are coplanar; simulating without a head collider");
    return out;
  }
  const Eigen::Vector4d sol = qr.solve(b);
  const Vec3 center = sol.head<3>();
  double closest = std::numeric_limits<double>::infinity();
  for (const Vec3& r : roots) closest = std::min(closest, (r - center).norm());
  if (!(closest > 0.0) || !std::isfinite(closest)) {
    warn("head collider fit failed; simulating without colliders");
    return out;
  }
  out.spheres.push_back({center, 0.95 * closest});
  return out;
}

bool operator==(const SimState& a, const SimState& b) {
  auto same_colliders = [](const ColliderSet& x, const ColliderSet& y) {
    if (x.spheres.size() != y.spheres.size() || x.capsules.size() != y.capsules.size()) return false;
    for (std::size_t i = 0; i < x.spheres.size(); ++i)
      if (x.spheres[i].center != y.spheres[i].center || x.spheres[i].radius != y.spheres[i].radius) return false;
    for (std::size_t i = 0; i < x.capsules.size(); ++i)
      if (x.capsules[i].a != y.capsules[i].a || x.capsules[i].b != y.capsules[i].b ||
          x.capsules[i].radius != y.capsules[i].radius)
        return false;
    return true;
  };
  return a.points_per_strand == b.points_per_strand && a.positions == b.positions && a.velocities == b.velocities &&
         a.rest_local == b.rest_local && a.pinned == b.pinned && a.rest_lengths == b.rest_lengths &&
         a.head_pose.rotation.coeffs() == b.head_pose.rotation.coeffs() &&
         a.head_pose.translation == b.head_pose.translation && a.time == b.time &&
         same_colliders(a.colliders, b.colliders);
}

SimState init_sim(const Groom& guides, const HairParams& params, const ColliderSet& colliders) {
  validate(guides);
  validate(params);
  validate(colliders);
  SimState s;
  s.points_per_strand = guides.points_per_strand;
  s.positions = guides.points;
  s.velocities.assign(guides.points.size(), Vec3::Zero());
  s.pinned.assign(guides.points.size(), 0);
  s.colliders = colliders;

  const WorldColliders world = to_world(colliders, s.head_pose);
  std::size_t projected = 0;
  for (std::size_t i = 0; i < guides.strand_count(); ++i) {
    const std::size_t r = i * s.points_per_strand;
    s.pinned[r] = 1;
    Vec3 n;
    if (project_out(s.positions[r], world, n)) ++projected;
  }
  if (projected > 0) warn(std::to_string(projected) + " guide roots were inside a collider and moved to its surface");
  s.rest_local = s.positions;

  const std::size_t pps = s.points_per_strand;
  s.rest_lengths.reserve(guides.strand_count() * (pps - 1));
  for (std::size_t i = 0; i < guides.strand_count(); ++i)
    for (std::size_t j = 0; j + 1 < pps; ++j)
      s.rest_lengths.push_back((s.rest_local[i * pps + j + 1] - s.rest_local[i * pps + j]).norm());
  return s;
}

std::vector<std::uint8_t> solve_constraints(SimState& state, const HairParams& params, int iters,
                                            const IterationObserver& observer) {
  if (iters < 1) fail(ErrorCode::invalid_input, "solver needs at least one iteration");
  const std::size_t pps = state.points_per_strand;
  const std::size_t strands = state.strand_count();
  const double f_stretch = projection_factor(params.stretch_resistance, iters);
  const double f_compress = projection_factor(params.compression_resistance, iters);
  const double f_bend = projection_factor(params.bend_resistance, iters);
  const int links = pps >= 3 ? params.extra_bend_links : 0;
  const std::vector<double> bend_lengths = bend_rest(state.rest_local, pps, links);
  const std::size_t bends_per_strand = strands == 0 ? 0 : bend_lengths.size() / strands;
  const WorldColliders world = to_world(state.colliders, state.head_pose);
  std::vector<std::uint8_t> contact(state.positions.size(), 0);

  auto weight = [&](std::size_t i) { return state.pinned[i] ? 0.0 : 1.0; };

  for (int it = 0; it < iters; ++it) {
    parallel_for(strands, [&](std::size_t s) {
      const std::size_t base = s * pps;
      Vec3* x = state.positions.data() + base;
      for (std::size_t j = 0; j + 1 < pps; ++j) {
        const double rest = state.rest_lengths[s * (pps - 1) + j];
        const double len = (x[j + 1] - x[j]).norm();
        project_distance(x[j], x[j + 1], weight(base + j), weight(base + j + 1), rest,
                         len > rest ? f_stretch : f_compress);
      }
      std::size_t b = s * bends_per_strand;
      for (int l = 1; l <= links; ++l)
        for (std::size_t j = 0; j + 1 + static_cast<std::size_t>(l) < pps; ++j, ++b) {
          const std::size_t k = j + 1 + static_cast<std::size_t>(l);
          project_distance(x[j], x[k], weight(base + j), weight(base + k), bend_lengths[b], f_bend);
        }
      for (std::size_t j = 0; j < pps; ++j) {
        if (state.pinned[base + j]) {
          x[j] = state.head_pose.apply(state.rest_local[base + j]);
        } else {
          Vec3 n;
          if (project_out(x[j], world, n)) contact[base + j] = 1;
        }
      }
    });
    if (observer) observer(it, state.positions);
  }
  return contact;
}

double max_stretch_residual(std::span<const Vec3> positions, std::size_t pps, std::span<const double> rest_lengths) {
  double worst = 0.0;
  if (pps < 2) return worst;
  const std::size_t strands = positions.size() / pps;
  for (std::size_t s = 0; s < strands; ++s)
    for (std::size_t j = 0; j + 1 < pps; ++j) {
      const double rest = rest_lengths[s * (pps - 1) + j];
      const double len = (positions[s * pps + j + 1] - positions[s * pps + j]).norm();
      worst = std::max(worst, std::abs(len - rest) / rest);
    }
  return worst;
}

int self_collisions(std::span<Vec3> positions, std::size_t pps, std::span<const std::uint8_t> pinned, double radius,
                    int max_passes) {
  if (!(radius > 0.0)) fail(ErrorCode::invalid_input, "self-collision radius must be > 0");
  if (max_passes < 1) fail(ErrorCode::invalid_input, "self-collision needs at least one pass");
  if (positions.empty() || pps == 0) return 0;
  const double min_dist = 2.0 * radius;
  const double tol = 1e-12 * min_dist;

  auto excluded = [&](std::size_t i, std::size_t j) {
    if (pinned[i] && pinned[j]) return true;
    if (i / pps != j / pps) return false;
    const std::size_t a = i % pps, b = j % pps;
    return (a > b ? a - b : b - a) <= 2;
  };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  int pass = 0;
  for (; pass < max_passes; ++pass) {
    const detail::CellGrid grid(positions, min_dist);
    pairs.clear();
    const double limit = (min_dist - tol) * (min_dist - tol);
    grid.for_each_near_pair([&](std::size_t i, std::size_t j) {
      if (i > j) std::swap(i, j);
      if ((positions[j] - positions[i]).squaredNorm() < limit && !excluded(i, j)) pairs.emplace_back(i, j);
    });
    if (pairs.empty()) break;
    std::sort(pairs.begin(), pairs.end());
    for (auto [i, j] : pairs) {
      const Vec3 d = positions[j] - positions[i];
      const double dist = d.norm();
      if (dist >= min_dist - tol) continue;
      const Vec3 n = dist > 0.0 ? Vec3(d / dist) : Vec3::UnitZ();
      const double wi = pinned[i] ? 0.0 : 1.0, wj = pinned[j] ? 0.0 : 1.0;
      const double push = (min_dist - dist) / (wi + wj);
      positions[i] -= wi * push * n;
      positions[j] += wj * push * n;
    }
  }
  return pass;
}

int self_collisions(SimState& state, double radius, int max_passes) {
  return self_collisions(state.positions, state.points_per_strand, state.pinned, radius, max_passes);
}

double kinetic_energy(const SimState& state, double mass) {
  double e = 0.0;
  for (const Vec3& v : state.velocities) e += 0.5 * mass * v.squaredNorm();
  return e;
}

void advance(SimState& state, const HairParams& params, const SimConfig& config, const RigidTransform& pose_begin,
             const RigidTransform& pose_end) {
  validate(config);
  const std::size_t n = state.particle_count();
  const std::size_t pps = state.points_per_strand;
  const double h = config.dt / static_cast<double>(config.substeps);
  const double damping = std::clamp(1.0 - params.damp * h, 0.0, 1.0);
  const double stretch_damping = std::clamp(params.stretch_damp * h, 0.0, 1.0);
  const double attract = kAttractRate * params.start_curve_attract;
  const double m = params.mass;

  std::vector<Vec3> old_positions(n), predicted(n);
  for (int sub = 0; sub < config.substeps; ++sub) {
    const double t = state.time + static_cast<double>(sub) * h;
    const RigidTransform pose =
        sub + 1 == config.substeps
            ? pose_end
            : RigidTransform::interpolate(pose_begin, pose_end, static_cast<double>(sub + 1) / config.substeps);
    state.head_pose = pose;

    Vec3 wind = config.wind_strength * config.wind_direction;
    if (config.wind_gust_frequency > 0.0)
      wind *= 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * config.wind_gust_frequency * t));

    old_positions = state.positions;
    parallel_for(state.strand_count(), [&](std::size_t s) {
      const std::size_t base = s * pps;
      const std::span<const Vec3> strand(old_positions.data() + base, pps);
      for (std::size_t j = 0; j < pps; ++j) {
        const std::size_t i = base + j;
        Vec3& x = state.positions[i];
        Vec3& v = state.velocities[i];
        const Vec3 target = pose.apply(state.rest_local[i]);
        if (state.pinned[i]) {
          x = target;
          v = (x - old_positions[i]) / h;
          predicted[i] = x;
          continue;
        }
        const Vec3 tangent = local_tangent(strand, j);
        const Vec3 v_tan = v.dot(tangent) * tangent;
        const Vec3 v_norm = v - v_tan;
        const Vec3 force = m * config.gravity + m * wind -
                           m * (params.tangential_drag * v_tan + params.drag * v_norm) +
                           m * attract * (target - x);
        v += (force / m) * h;
        x += v * h;
        predicted[i] = x;
      }
    });

    std::vector<std::uint8_t> contact = solve_constraints(state, params, config.solver_iters);

    if (params.dynamics_weight < 1.0) {
      for (std::size_t i = 0; i < n; ++i)
        if (!state.pinned[i])
          state.positions[i] = params.dynamics_weight * state.positions[i] +
                               (1.0 - params.dynamics_weight) * pose.apply(state.rest_local[i]);
    }
    if (params.self_collide) self_collisions(state, config.collision_radius, config.collision_passes);

    const WorldColliders world = to_world(state.colliders, pose);
    std::vector<Vec3> normals(n, Vec3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
      if (state.pinned[i]) {
        state.positions[i] = pose.apply(state.rest_local[i]);
        continue;
      }
      Vec3 nrm;
      if (project_out(state.positions[i], world, nrm)) contact[i] = 1;
      if (contact[i]) normals[i] = contact_normal(state.positions[i], world);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (state.pinned[i]) continue;
      Vec3& v = state.velocities[i];
      v += (state.positions[i] - predicted[i]) / h;
      v *= damping;
      if (contact[i] && normals[i].squaredNorm() > 0.0) {
        const Vec3& nrm = normals[i];
        const double vn = v.dot(nrm);
        Vec3 v_normal = vn * nrm;
        Vec3 v_tangent = v - v_normal;
        v_tangent *= 1.0 - params.friction;
        if (vn > 0.0) v_normal *= 1.0 - params.stickiness;
        v = v_normal + v_tangent;
      }
    }
    if (stretch_damping > 0.0 && pps >= 2) {
      for (std::size_t s = 0; s < state.strand_count(); ++s)
        for (std::size_t j = 0; j + 1 < pps; ++j) {
          const std::size_t a = s * pps + j, b = a + 1;
          const double wa = state.pinned[a] ? 0.0 : 1.0, wb = state.pinned[b] ? 0.0 : 1.0;
          if (wa + wb <= 0.0) continue;
          const Vec3 d = state.positions[b] - state.positions[a];
          const double len = d.norm();
          if (!(len > 0.0)) continue;
          const Vec3 axis = d / len;
          const double rel = (state.velocities[b] - state.velocities[a]).dot(axis);
          const Vec3 impulse = (stretch_damping * rel / (wa + wb)) * axis;
          state.velocities[a] += wa * impulse;
          state.velocities[b] -= wb * impulse;
        }
    }

    for (std::size_t i = 0; i < n; ++i)
      if (!finite(state.positions[i]) || !finite(state.velocities[i]))
        fail(ErrorCode::diverged, "simulation diverged at substep " + std::to_string(sub) + ", particle " +
                                      std::to_string(i));
  }
  state.time += config.dt;
}

SimState step(SimState state, const HairParams& params, const SimConfig& config, const RigidTransform& pose_begin,
              const RigidTransform& pose_end) {
  advance(state, params, config, pose_begin, pose_end);
  return state;
}

GuideAnimation simulate(const Groom& guides, const HairParams& params, const SimConfig& config,
                        const ColliderSet& colliders, const PoseTrack& track, std::size_t frame_count,
                        double frame_dt) {
  validate(config);
  validate(track);
  if (!(frame_dt > 0.0) || !std::isfinite(frame_dt)) fail(ErrorCode::invalid_input, "frame_dt must be > 0");
  if (frame_count < 1) fail(ErrorCode::invalid_input, "frame_count must be >= 1");

  SimState state = init_sim(guides, params, colliders);
  const RigidTransform pose0 = track.at(0.0);
  for (std::size_t i = 0; i < state.particle_count(); ++i) state.positions[i] = pose0.apply(state.rest_local[i]);
  state.head_pose = pose0;

  // Whole steps of config.dt per frame when frame_dt is a multiple of it,
  // otherwise the frame is split into equal steps no longer than config.dt.
  const double ratio = frame_dt / config.dt;
  std::size_t steps = static_cast<std::size_t>(std::llround(ratio));
  SimConfig cfg = config;
  if (steps == 0 || std::abs(static_cast<double>(steps) - ratio) > 1e-9 * ratio) {
    steps = static_cast<std::size_t>(std::ceil(ratio));
    cfg.dt = frame_dt / static_cast<double>(steps);
  }

  GuideAnimation anim;
  anim.frame_dt = frame_dt;
  anim.frames.reserve(frame_count);
  Groom frame(guides.strand_count(), guides.points_per_strand);
  frame.points = state.positions;
  anim.frames.push_back(frame);

  for (std::size_t f = 1; f < frame_count; ++f) {
    for (std::size_t s = 0; s < steps; ++s) {
      const double t0 = static_cast<double>(f - 1) * frame_dt + static_cast<double>(s) * cfg.dt;
      const double t1 = s + 1 == steps ? static_cast<double>(f) * frame_dt : t0 + cfg.dt;
      state.time = t0;
      try {
        advance(state, params, cfg, track.at(t0), track.at(t1));
      } catch (const Error& e) {
        throw Error(e.code(), "frame " + std::to_string(f) + ": " + e.what());
      }
    }
    frame.points = state.positions;
    anim.frames.push_back(frame);
  }
  return anim;
}

}  // namespace hairgs
