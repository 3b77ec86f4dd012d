#pragma once

// Helpers and reference implementations shared by the test binaries. The
// oracles here are written independently of src/ (straightforward loops, no
// shared code paths) so they can catch mistakes in the optimized versions.

#include "hairgs/animation.hpp"
#include "hairgs/appearance.hpp"
#include "hairgs/splat.hpp"
#include "hairgs/strand.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hairgs::test {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline Vec3 random_vec(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  } while (q.norm() < 0.1 || q.norm() > 1.0);
  q.normalize();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
}

inline Groom make_groom(const std::vector<std::vector<Vec3>>& strands) {
  Groom g(strands.size(), strands.front().size());
  for (std::size_t i = 0; i < strands.size(); ++i)
    std::copy(strands[i].begin(), strands[i].end(), g.strand(i).begin());
  return g;
}

inline std::vector<Vec3> line(const Vec3& a, const Vec3& b, std::size_t n) {
  std::vector<Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = a + (b - a) * (static_cast<double>(i) / static_cast<double>(n - 1));
  return pts;
}

// Random smooth hanging strands with roots scattered on a plane patch.
inline Groom random_groom(std::mt19937_64& rng, std::size_t strands, std::size_t points, double length = 0.2) {
  Groom g(strands, points);
  for (std::size_t s = 0; s < strands; ++s) {
    const Vec3 root(uniform(rng, -0.1, 0.1), 0.0, uniform(rng, -0.1, 0.1));
    const double bend = uniform(rng, -2.0, 2.0), phase = uniform(rng, 0, 6.28);
    auto strand = g.strand(s);
    for (std::size_t j = 0; j < points; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(points - 1);
      strand[j] = root + length * Vec3(0.1 * std::sin(bend * u + phase) - 0.1 * std::sin(phase), -u,
                                       0.05 * bend * u * u);
    }
  }
  return g;
}

inline double max_abs_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return worst;
}

// ---- oracles ----

// Exhaustive k nearest neighbors with (distance, index) ordering.
inline std::vector<std::vector<Neighbor>> brute_knn(const std::vector<Vec3>& query, const std::vector<Vec3>& ref,
                                                    std::size_t k) {
  std::vector<std::vector<Neighbor>> out;
  for (const Vec3& q : query) {
    std::vector<Neighbor> all;
    for (std::size_t j = 0; j < ref.size(); ++j) all.push_back({j, (q - ref[j]).norm()});
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    });
    all.resize(k);
    out.push_back(all);
  }
  return out;
}

// Directed double loop over the stored neighbor lists.
inline double naive_consistency(const StrandColors& c, const StrandGraph& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.neighbors.size(); ++i)
    for (std::uint32_t j : g.neighbors[i])
      for (std::size_t s = 0; s < c.segments_per_strand; ++s)
        for (int ch = 0; ch < 3; ++ch) {
          const double d = c.rgb[i * c.segments_per_strand + s][ch] - c.rgb[j * c.segments_per_strand + s][ch];
          total += d * d;
        }
  return total;
}

// Minimizer of the consistency loss with the fixed strands held: solves the
// symmetrized Laplacian system for the free strands, one channel/segment at
// a time, with a dense LU factorization.
inline StrandColors laplacian_solve(const StrandColors& c, const StrandGraph& g, const std::vector<std::uint8_t>& fixed) {
  const std::size_t n = g.neighbors.size();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t j : g.neighbors[i]) {
      lap(i, i) += 1;
      lap(j, j) += 1;
      lap(i, j) -= 1;
      lap(j, i) -= 1;
    }
  std::vector<Eigen::Index> free_ids, fixed_ids;
  for (std::size_t i = 0; i < n; ++i) (fixed[i] ? fixed_ids : free_ids).push_back(static_cast<Eigen::Index>(i));
  const auto nf = static_cast<Eigen::Index>(free_ids.size());
  Eigen::MatrixXd a(nf, nf);
  for (Eigen::Index r = 0; r < nf; ++r)
    for (Eigen::Index q = 0; q < nf; ++q) a(r, q) = lap(free_ids[r], free_ids[q]);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  StrandColors out = c;
  for (std::size_t s = 0; s < c.segments_per_strand; ++s)
    for (int ch = 0; ch < 3; ++ch) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
      for (Eigen::Index r = 0; r < nf; ++r)
        for (Eigen::Index f : fixed_ids) rhs[r] -= lap(free_ids[r], f) * c.rgb[f * c.segments_per_strand + s][ch];
      const Eigen::VectorXd x = lu.solve(rhs);
      for (Eigen::Index r = 0; r < nf; ++r) out.rgb[free_ids[r] * c.segments_per_strand + s][ch] = x[r];
    }
  return out;
}

// Per-pixel compositing written from the definition: sort by depth (stable),
// then walk the splats front to back at this one pixel.
inline Vec3 reference_pixel(const std::vector<Splat2D>& splats, double px, double py, const Vec3& bg) {
  std::vector<std::size_t> order(splats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return splats[a].depth < splats[b].depth; });
  Vec3 color = Vec3::Zero();
  double t = 1.0;
  for (std::size_t idx : order) {
    const Splat2D& s = splats[idx];
    const Eigen::Vector2d d(px - s.mean.x(), py - s.mean.y());
    const double m = d.dot(s.cov.inverse() * d);
    if (m > 9.0) continue;
    // Bounding-box test as well: the 3-sigma ellipse's axis-aligned extent.
    if (std::abs(d.x()) > 3.0 * std::sqrt(s.cov(0, 0)) || std::abs(d.y()) > 3.0 * std::sqrt(s.cov(1, 1))) continue;
    const double alpha = std::min(kMaxAlpha, s.opacity * std::exp(-0.5 * m));
    color += s.color * alpha * t;
    t *= 1.0 - alpha;
    if (t < kMinTransmittance) break;
  }
  return color + t * bg;
}

// Sample covariance of exactly projected samples of a 3D Gaussian.
inline Eigen::Matrix2d monte_carlo_cov2d(const Vec3& mean, const Mat3& cov, const Camera& cam, std::size_t samples,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::LLT<Mat3> llt(cov);
  const Mat3 l = llt.matrixL();
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sum2 = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 x = mean + l * Vec3(normal(rng), normal(rng), normal(rng));
    const Vec3 c = cam.to_camera(x);
    const Eigen::Vector2d p(cam.focal * c.x() / c.z() + cam.cx, cam.focal * c.y() / c.z() + cam.cy);
    sum += p;
    sum2 += p * p.transpose();
  }
  const double n = static_cast<double>(samples);
  const Eigen::Vector2d mu = sum / n;
  return (sum2 - n * mu * mu.transpose()) / (n - 1.0);
}

// PCA straight from the definition: covariance of time-centered frames,
// eigenvalues by a dense symmetric solver, sorted descending.
inline std::vector<double> covariance_spectrum(const GuideAnimation& anim) {
  const auto t = static_cast<Eigen::Index>(anim.frames.size());
  const auto d = static_cast<Eigen::Index>(3 * anim.frames.front().points.size());
  Eigen::MatrixXd x(t, d);
  for (Eigen::Index f = 0; f < t; ++f)
    for (std::size_t p = 0; p < anim.frames[f].points.size(); ++p)
      for (int c = 0; c < 3; ++c) x(f, static_cast<Eigen::Index>(3 * p + c)) = anim.frames[f].points[p][c];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(t - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.rbegin(), ev.rend());
  for (double& v : ev) v = std::max(v, 0.0);
  return ev;
}

struct OracleWeights {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

// Inverse-distance weights from a full sort of every guide root distance.
inline OracleWeights oracle_weights(const Vec3& root, const std::vector<Vec3>& guide_roots, std::size_t k, double eps) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t g = 0; g < guide_roots.size(); ++g) all.push_back({(root - guide_roots[g]).norm(), g});
  std::sort(all.begin(), all.end());
  OracleWeights out;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out.index.push_back(all[j].second);
    out.weight.push_back(1.0 / (all[j].first + eps));
    total += out.weight.back();
  }
  for (double& w : out.weight) w /= total;
  return out;
}

// Value of a guide polyline at normalized parameter u, by index position.
inline Vec3 sample(std::span<const Vec3> pts, double u) {
  const double x = u * static_cast<double>(pts.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(x), pts.size() - 2);
  const double t = x - static_cast<double>(i);
  return pts[i] + t * (pts[i + 1] - pts[i]);
}

}  // namespace hairgs::test
