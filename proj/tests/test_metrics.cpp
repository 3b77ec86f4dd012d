#include "hairgs/dynamics.hpp"
#include "hairgs/error.hpp"
#include "hairgs/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

using namespace hairgs;
using hairgs::test::random_rotation;
using hairgs::test::random_vec;

namespace {

GuideAnimation animate(const Groom& rest, std::size_t frames, const std::function<Vec3(const Vec3&, std::size_t)>& f) {
  GuideAnimation a;
  for (std::size_t t = 0; t < frames; ++t) {
    Groom g = rest;
    for (Vec3& p : g.points) p = f(p, t);
    a.frames.push_back(g);
  }
  return a;
}

// Projection of each centered frame on the top eigenvectors of the dense
// covariance, then the mean step length.
double oracle_ts(const GuideAnimation& anim, std::size_t components) {
  const auto t = static_cast<Eigen::Index>(anim.frames.size());
  const auto d = static_cast<Eigen::Index>(3 * anim.frames[0].points.size());
  Eigen::MatrixXd x(t, d);
  for (Eigen::Index f = 0; f < t; ++f)
    for (Eigen::Index c = 0; c < d; ++c) x(f, c) = anim.frames[f].points[c / 3][c % 3];
  x.rowwise() -= x.colwise().mean();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
  const Eigen::MatrixXd basis = es.eigenvectors().rightCols(static_cast<Eigen::Index>(components));
  const Eigen::MatrixXd z = x * basis;
  double total = 0.0;
  for (Eigen::Index f = 1; f < t; ++f) total += (z.row(f) - z.row(f - 1)).norm();
  return total / static_cast<double>(t - 1) / std::sqrt(static_cast<double>(anim.frames[0].points.size()));
}

}  // namespace

TEST_CASE("motion matrix layout") {
  std::mt19937_64 rng(1);
  const Groom g = test::random_groom(rng, 3, 4);
  GuideAnimation a = animate(g, 5, [](const Vec3& p, std::size_t t) -> Vec3 { return p + Vec3(t, 0, 0); });
  a.frame_dt = 0.5;
  const MotionMatrix m = motion_matrix(a);
  CHECK(m.frames() == 5);
  CHECK(m.particles() == 12);
  CHECK(m.rows(2, 3 * 7 + 1) == a.frames[2].points[7].y());
  CHECK(m.times[4] == 2.0);
  CHECK_THROWS_AS(explained_variance_pc1(motion_matrix(GuideAnimation{})), Error);
}

TEST_CASE("explained variance") {
  std::mt19937_64 rng(2);
  const Groom g = test::random_groom(rng, 20, 8);

  SUBCASE("static animation") {
    const GuideAnimation a = animate(g, 10, [](const Vec3& p, std::size_t) -> Vec3 { return p; });
    const MotionMatrix m = motion_matrix(a);
    CHECK(explained_variance_pc1(m) == 100.0);
    CHECK(temporal_smoothness(m) == 0.0);
    const PcTracks tr = pc_std_tracks(m);
    CHECK(tr.running_std.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear translation is rank one") {
    const Vec3 d(0.01, -0.02, 0.004);
    const GuideAnimation a = animate(g, 30, [&](const Vec3& p, std::size_t t) -> Vec3 { return p + static_cast<double>(t) * d; });
    const MotionMatrix m = motion_matrix(a);
    CHECK(std::abs(explained_variance_pc1(m) - 100.0) < 1e-6);
    const PcTracks tr = pc_std_tracks(m);
    const double first = tr.running_std.col(0).maxCoeff();
    CHECK(first > 0.0);
    CHECK(tr.running_std.col(1).maxCoeff() < 1e-9 * first);
    CHECK(tr.running_std.col(2).maxCoeff() < 1e-9 * first);
  }
  SUBCASE("planar circular motion splits evenly") {
    const GuideAnimation a = animate(g, 64, [](const Vec3& p, std::size_t t) -> Vec3 {
      const double phase = 2 * std::numbers::pi * static_cast<double>(t) / 64.0;
      return p + 0.05 * Vec3(std::cos(phase), std::sin(phase), 0);
    });
    const MotionMatrix m = motion_matrix(a);
    const double pc1 = explained_variance_pc1(m);
    CHECK(std::abs(pc1 - 50.0) < 0.5);
    const auto spectrum = test::covariance_spectrum(a);
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    CHECK(std::abs(pc1 - 100.0 * spectrum[0] / total) < 1e-9);
  }
  SUBCASE("matches the dense spectrum on random motion") {
    GuideAnimation a;
    Groom cur = g;
    for (int t = 0; t < 25; ++t) {
      for (Vec3& p : cur.points) p += random_vec(rng, -0.01, 0.01);
      a.frames.push_back(cur);
    }
    const MotionMatrix m = motion_matrix(a);
    const auto spectrum = test::covariance_spectrum(a);
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    const std::vector<double> shares = explained_variance(m);
    REQUIRE(shares.size() >= 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(shares[i] - 100.0 * spectrum[i] / total) < 1e-9);
    CHECK(std::abs(std::accumulate(shares.begin(), shares.end(), 0.0) - 100.0) < 1e-6);
    CHECK(explained_variance_pc1(m) == shares[0]);

    const Mat3 r = random_rotation(rng).toRotationMatrix();
    const MotionMatrix rotated =
        motion_matrix(animate(g, 25, [&](const Vec3&, std::size_t) -> Vec3 { return Vec3::Zero(); }));
    GuideAnimation turned = a, scaled = a;
    for (Groom& f : turned.frames)
      for (Vec3& p : f.points) p = r * p + Vec3(1, 2, 3);
    for (Groom& f : scaled.frames)
      for (Vec3& p : f.points) p *= 3.5;
    CHECK(std::abs(explained_variance_pc1(motion_matrix(turned)) - shares[0]) < 1e-9);
    CHECK(std::abs(explained_variance_pc1(motion_matrix(scaled)) - shares[0]) < 1e-9);
    CHECK(explained_variance_pc1(rotated) == 100.0);

    const double ts = temporal_smoothness(m);
    CHECK(std::abs(ts - oracle_ts(a, 3)) < 1e-9 * ts);
    GuideAnimation shifted = a;
    for (Groom& f : shifted.frames)
      for (Vec3& p : f.points) p += Vec3(5, -2, 0.3);
    CHECK(std::abs(temporal_smoothness(motion_matrix(shifted)) - ts) < 1e-9 * ts);
    CHECK(std::abs(temporal_smoothness(m, 5) - oracle_ts(a, 5)) < 1e-9 * ts);
  }
  SUBCASE("fewer than two frames") {
    const GuideAnimation a = animate(g, 1, [](const Vec3& p, std::size_t) -> Vec3 { return p; });
    const MotionMatrix m = motion_matrix(a);
    CHECK_THROWS_AS(explained_variance_pc1(m), Error);
    CHECK_THROWS_AS(temporal_smoothness(m), Error);
    CHECK_THROWS_AS(pc_std_tracks(m), Error);
  }
}

TEST_CASE("temporal smoothness of uniform translation") {
  std::mt19937_64 rng(3);
  const Groom g = test::random_groom(rng, 10, 6);
  const Vec3 d(0.003, 0.001, -0.002);
  auto run = [&](double speed) {
    return motion_matrix(
        animate(g, 20, [&](const Vec3& p, std::size_t t) -> Vec3 { return p + speed * static_cast<double>(t) * d; }));
  };
  const double ts = temporal_smoothness(run(1.0));
  // Each step moves every particle by d, so the projected step is |d| sqrt(P).
  CHECK(std::abs(ts - d.norm()) < 1e-12);
  CHECK(std::abs(temporal_smoothness(run(2.0)) - 2.0 * ts) < 1e-9 * ts);
}

TEST_CASE("pc tracks") {
  std::mt19937_64 rng(4);
  const Groom g = test::random_groom(rng, 8, 5);
  GuideAnimation a;
  Groom cur = g;
  for (int t = 0; t < 12; ++t) {
    for (Vec3& p : cur.points) p += random_vec(rng, -0.01, 0.01);
    a.frames.push_back(cur);
  }
  const MotionMatrix m = motion_matrix(a);
  const PcTracks tr = pc_std_tracks(m, 3);
  REQUIRE(tr.projection.rows() == 12);
  REQUIRE(tr.projection.cols() == 3);
  REQUIRE(tr.running_std.rows() == 12);
  CHECK(tr.running_std.row(0).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index c = 0; c < 3; ++c) {
    // Population std of the projections over frames [0, t].
    const Eigen::VectorXd col = tr.projection.col(c);
    for (Eigen::Index t = 0; t < 12; ++t) {
      const Eigen::VectorXd head = col.head(t + 1);
      const double mean = head.mean();
      const double var = (head.array() - mean).square().mean();
      CHECK(tr.running_std(t, c) == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    }
  }
  // Component variances are descending.
  const MotionPca pca = motion_pca(m);
  for (Eigen::Index i = 1; i < pca.variances.size(); ++i) CHECK(pca.variances[i] <= pca.variances[i - 1]);
}

TEST_CASE("simulated motion is less rigid than its rigid copy") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<Vec3>> strands;
  for (int i = 0; i < 40; ++i) {
    Vec3 d = random_vec(rng);
    d.y() = std::abs(d.y()) + 0.2;
    d.normalize();
    strands.push_back(test::line(0.1 * d, 0.1 * d + Vec3(0.03 * d.x(), -0.15, 0.03 * d.z()), 12));
  }
  const Groom g = test::make_groom(strands);
  PoseTrack track;
  for (int k = 0; k <= 8; ++k) {
    const double angle = 0.25 * std::sin(k * std::numbers::pi / 2.0);
    track.keys.push_back({0.25 * k, {Eigen::Quaterniond(Eigen::AngleAxisd(angle, Vec3::UnitX())), Vec3::Zero()}});
  }
  SimConfig c;
  c.wind_strength = 4.0;
  c.wind_gust_frequency = 1.5;
  const GuideAnimation sim = simulate(g, HairParams{}, c, default_head_collider(g), track, 61, 1.0 / 30.0);
  GuideAnimation rigid = sim;
  for (std::size_t f = 0; f < rigid.frame_count(); ++f) {
    const RigidTransform pose = track.at(static_cast<double>(f) * sim.frame_dt);
    for (std::size_t i = 0; i < g.points.size(); ++i) rigid.frames[f].points[i] = pose.apply(g.points[i]);
  }
  const double pc_sim = explained_variance_pc1(motion_matrix(sim));
  const double pc_rigid = explained_variance_pc1(motion_matrix(rigid));
  MESSAGE("PC1 simulated " << pc_sim << " rigid " << pc_rigid);
  CHECK(pc_sim < pc_rigid);
}
