#include "hairgs/strand.hpp"

#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"
#include "spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hairgs {

namespace {

bool finite(const Vec3& p) { return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z()); }

void require_finite(std::span<const Vec3> strand) {
  for (std::size_t i = 0; i < strand.size(); ++i)
    if (!finite(strand[i])) fail(ErrorCode::invalid_input, "non-finite coordinate at point " + std::to_string(i));
}

Vec3 fallback_normal(const Vec3& tangent) {
  const Vec3 ref = std::abs(tangent.y()) > 0.9 ? Vec3::UnitZ() : Vec3::UnitY();
  return (ref - ref.dot(tangent) * tangent).normalized();
}

bool less_neighbor(const Neighbor& a, const Neighbor& b) {
  return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
}

std::vector<Neighbor> knn_brute(const Vec3& q, std::span<const Vec3> reference, std::size_t k) {
  std::vector<Neighbor> all(reference.size());
  for (std::size_t j = 0; j < reference.size(); ++j) all[j] = {j, (q - reference[j]).norm()};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less_neighbor);
  all.resize(k);
  return all;
}

}  // namespace

void validate(const Groom& groom) {
  if (groom.points_per_strand < 2) fail(ErrorCode::invalid_input, "groom needs at least 2 points per strand");
  if (groom.points.size() % groom.points_per_strand != 0)
    fail(ErrorCode::invalid_input, "groom point buffer is not a whole number of strands");
  for (std::size_t i = 0; i < groom.points.size(); ++i)
    if (!finite(groom.points[i]))
      fail(ErrorCode::invalid_input, "non-finite coordinate in strand " + std::to_string(i / groom.points_per_strand));
}

double arc_length(std::span<const Vec3> strand) {
  if (strand.size() < 2) fail(ErrorCode::invalid_input, "strand needs at least 2 points");
  require_finite(strand);
  double length = 0.0;
  for (std::size_t i = 1; i < strand.size(); ++i) length += (strand[i] - strand[i - 1]).norm();
  return length;
}

std::vector<Vec3> resample_strand(std::span<const Vec3> strand, std::size_t n) {
  if (n < 2) fail(ErrorCode::invalid_input, "resample needs n >= 2");
  const double total = arc_length(strand);
  if (!(total > 0.0)) fail(ErrorCode::degenerate_strand, "zero-length strand cannot be resampled");

  std::vector<double> cumulative(strand.size(), 0.0);
  for (std::size_t i = 1; i < strand.size(); ++i)
    cumulative[i] = cumulative[i - 1] + (strand[i] - strand[i - 1]).norm();

  std::vector<Vec3> out(n);
  out.front() = strand.front();
  out.back() = strand.back();
  std::size_t seg = 0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(n - 1);
    while (seg + 2 < strand.size() && cumulative[seg + 1] < s) ++seg;
    const double span = cumulative[seg + 1] - cumulative[seg];
    const double t = span > 0.0 ? std::clamp((s - cumulative[seg]) / span, 0.0, 1.0) : 0.0;
    out[j] = strand[seg] + t * (strand[seg + 1] - strand[seg]);
  }
  return out;
}

Groom resample_groom(const Groom& groom, std::size_t n) {
  validate(groom);
  Groom out(groom.strand_count(), n);
  for (std::size_t i = 0; i < groom.strand_count(); ++i) {
    try {
      const auto pts = resample_strand(groom.strand(i), n);
      std::copy(pts.begin(), pts.end(), out.strand(i).begin());
    } catch (const Error& e) {
      throw Error(e.code(), "strand " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SegmentFrame> tnb_frames(std::span<const Vec3> strand) {
  if (strand.size() < 2) fail(ErrorCode::invalid_input, "strand needs at least 2 points");
  require_finite(strand);
  const std::size_t segments = strand.size() - 1;

  std::vector<Vec3> tangents(segments);
  std::vector<bool> valid(segments);
  for (std::size_t i = 0; i < segments; ++i) {
    const Vec3 d = strand[i + 1] - strand[i];
    const double len = d.norm();
    valid[i] = len > std::numeric_limits<double>::min();
    if (valid[i]) {
      tangents[i] = d / len;
    } else if (i == 0) {
      fail(ErrorCode::degenerate_strand, "leading zero-length segment");
    } else {
      tangents[i] = tangents[i - 1];
    }
  }

  std::vector<SegmentFrame> frames(segments);
  for (std::size_t i = 0; i < segments; ++i) {
    if (!valid[i]) {
      frames[i] = frames[i - 1];
      continue;
    }
    const Vec3& t = tangents[i];
    const Vec3& prev = tangents[i == 0 ? 0 : i - 1];
    const Vec3& next = tangents[i + 1 < segments ? i + 1 : i];
    const Vec3 turn = next - prev;
    const Vec3 across = turn - turn.dot(t) * t;

    SegmentFrame& f = frames[i];
    f.tangent = t;
    f.normal = across.norm() < kCurvatureEpsilon ? fallback_normal(t) : across.normalized();
    if (i > 0 && f.normal.dot(frames[i - 1].normal) < 0.0) f.normal = -f.normal;
    f.binormal = t.cross(f.normal);
  }
  return frames;
}

std::vector<std::vector<Neighbor>> knn_points(std::span<const Vec3> query, std::span<const Vec3> reference,
                                              std::size_t k) {
  if (reference.empty()) fail(ErrorCode::invalid_input, "knn: empty reference set");
  if (k < 1 || k > reference.size())
    fail(ErrorCode::invalid_input, "knn: k=" + std::to_string(k) + " outside [1, " +
                                       std::to_string(reference.size()) + "]");
  for (const Vec3& p : reference)
    if (!finite(p)) fail(ErrorCode::invalid_input, "knn: non-finite reference point");
  for (const Vec3& p : query)
    if (!finite(p)) fail(ErrorCode::invalid_input, "knn: non-finite query point");

  std::vector<std::vector<Neighbor>> result(query.size());
  constexpr std::size_t kBruteForceLimit = 64;
  if (reference.size() <= kBruteForceLimit) {
    for (std::size_t q = 0; q < query.size(); ++q) result[q] = knn_brute(query[q], reference, k);
    return result;
  }

  Vec3 lo = reference[0], hi = reference[0];
  for (const Vec3& p : reference) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) {
    for (std::size_t q = 0; q < query.size(); ++q) result[q] = knn_brute(query[q], reference, k);
    return result;
  }
  // About two points per occupied cell for volumetric sets; surface sets
  // (scalp roots) get somewhat more.
  const double per_axis = std::max(1.0, std::ceil(std::cbrt(static_cast<double>(reference.size()) / 2.0)));
  const detail::CellGrid grid(reference, extent / per_axis);
  constexpr std::int64_t kMaxRing = 48;

  parallel_for(query.size(), [&](std::size_t q) {
    const Vec3& p = query[q];
    const detail::Cell c = grid.cell_of(p);
    const std::int64_t ring_limit = std::max({(c - grid.lower()).cwiseAbs().maxCoeff(),
                                              (grid.upper() - c).cwiseAbs().maxCoeff()});
    if (ring_limit > kMaxRing) {
      result[q] = knn_brute(p, reference, k);
      return;
    }
    std::vector<Neighbor> found;
    for (std::int64_t r = 0; r <= ring_limit; ++r) {
      for (std::int64_t dx = -r; dx <= r; ++dx)
        for (std::int64_t dy = -r; dy <= r; ++dy)
          for (std::int64_t dz = -r; dz <= r; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            grid.for_each_in_cell(c + detail::Cell(dx, dy, dz), [&](std::size_t j) {
              found.push_back({j, (p - reference[j]).norm()});
            });
          }
      if (found.size() >= k) {
        std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k - 1), found.end(),
                         less_neighbor);
        // Anything outside the searched shells is at least r cells away.
        if (found[k - 1].distance < static_cast<double>(r) * grid.cell_size()) break;
      }
    }
    std::sort(found.begin(), found.end(), less_neighbor);
    found.resize(k);
    result[q] = std::move(found);
  });
  return result;
}

std::vector<Vec3> roots_of(const Groom& groom) {
  std::vector<Vec3> roots(groom.strand_count());
  for (std::size_t i = 0; i < roots.size(); ++i) roots[i] = groom.root(i);
  return roots;
}

std::vector<std::vector<Neighbor>> knn_roots(const Groom& query, const Groom& reference, std::size_t k) {
  return knn_points(roots_of(query), roots_of(reference), k);
}

}  // namespace hairgs
