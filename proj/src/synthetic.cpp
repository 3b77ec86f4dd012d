#include "hairgs/synthetic.hpp"

#include "hairgs/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace hairgs {

namespace {

constexpr double kCapAngle = 65.0 * std::numbers::pi / 180.0;
constexpr double kLift = 0.01;          // hair rises this far off the scalp
constexpr double kLiftLength = 0.03;    // ...over this much arc length
constexpr double kWaveAmplitude = 0.008;
constexpr double kWaveLength = 0.05;

// Bit-exact across standard libraries, unlike std::uniform_real_distribution.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Vec3> grow(double theta0, double phi, double length, bool wavy) {
  const Vec3 side(-std::sin(phi), 0.0, std::cos(phi));
  auto on_sphere = [&](double theta, double radius) {
    return Vec3(radius * std::sin(theta) * std::cos(phi), radius * std::cos(theta),
                radius * std::sin(theta) * std::sin(phi));
  };
  constexpr int kSteps = 400;
  const double ds = length / kSteps;
  std::vector<Vec3> pts;
  pts.reserve(kSteps + 1);
  double theta = theta0;
  double fall_start = -1.0;
  Vec3 fall_origin = Vec3::Zero();
  pts.push_back(on_sphere(theta, kScalpRadius));
  for (int i = 1; i <= kSteps; ++i) {
    const double s = i * ds;
    const double radius = kScalpRadius + kLift * std::min(1.0, s / kLiftLength);
    if (theta < 0.5 * std::numbers::pi) {
      theta = std::min(0.5 * std::numbers::pi, theta + ds / radius);
      pts.push_back(on_sphere(theta, radius));
      continue;
    }
    if (fall_start < 0.0) {
      fall_start = s - ds;
      fall_origin = pts.back();
    }
    const double along = s - fall_start;
    Vec3 p = fall_origin - along * Vec3::UnitY();
    if (wavy) p += kWaveAmplitude * std::sin(2.0 * std::numbers::pi * along / kWaveLength) * side;
    pts.push_back(p);
  }
  return pts;
}

Vec3 field_color(double theta, double phi, double u) {
  const Vec3 base(0.36, 0.23, 0.13);
  const Vec3 tint(0.10 * std::cos(phi), 0.06 * std::sin(phi), 0.05 * std::cos(theta));
  return (base + tint + Vec3::Constant(0.12 * u)).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

SyntheticStyle parse_style(std::string_view name) {
  if (name == "straight-bob") return SyntheticStyle::straight_bob;
  if (name == "wavy") return SyntheticStyle::wavy;
  if (name == "single-strand") return SyntheticStyle::single_strand;
  fail(ErrorCode::invalid_input, "unknown synthetic style '" + std::string(name) + "'");
}

SyntheticWig make_synthetic(SyntheticStyle style, std::size_t strands, std::size_t points, std::uint64_t seed) {
  if (points < 2) fail(ErrorCode::invalid_input, "synthetic strands need at least 2 points");
  if (style == SyntheticStyle::single_strand) strands = 1;
  if (strands < 1) fail(ErrorCode::invalid_input, "synthetic wig needs at least one strand");

  std::mt19937_64 rng(seed);
  SyntheticWig wig;
  wig.groom = Groom(strands, points);
  wig.colors = StrandColors(strands, points - 1);
  wig.scalp.spheres.push_back({Vec3::Zero(), kScalpRadius});

  for (std::size_t i = 0; i < strands; ++i) {
    double theta = std::numbers::pi / 6.0, phi = 0.0, length = 0.25;
    if (style != SyntheticStyle::single_strand) {
      const double cos_theta = 1.0 - uniform(rng) * (1.0 - std::cos(kCapAngle));
      theta = std::acos(cos_theta);
      phi = 2.0 * std::numbers::pi * uniform(rng);
      length = 0.25 * (0.9 + 0.2 * uniform(rng));
    }
    const auto dense = grow(theta, phi, length, style == SyntheticStyle::wavy);
    const auto pts = resample_strand(dense, points);
    std::copy(pts.begin(), pts.end(), wig.groom.strand(i).begin());
    auto rgb = wig.colors.strand(i);
    for (std::size_t j = 0; j < rgb.size(); ++j)
      rgb[j] = field_color(theta, phi, (static_cast<double>(j) + 0.5) / static_cast<double>(rgb.size()));
  }
  return wig;
}

}  // namespace hairgs
