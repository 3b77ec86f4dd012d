#pragma once

// Scenes and small utilities reused by the unit tests and the acceptance
// runner.

#include "hairgs/appearance.hpp"
#include "hairgs/error.hpp"
#include "hairgs/splat.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace hairgs::test {

struct WarningCounter {
  int count = 0;
  std::string last;
  WarningCounter() {
    set_warning_sink(
        [](const char* msg, void* user) {
          auto* self = static_cast<WarningCounter*>(user);
          ++self->count;
          self->last = msg;
        },
        this);
  }
  ~WarningCounter() { set_warning_sink(nullptr, nullptr); }
};

inline StrandColors random_colors(std::mt19937_64& rng, std::size_t strands, std::size_t segments) {
  StrandColors c(strands, segments);
  for (Vec3& v : c.rgb) v = random_vec(rng, 0, 1);
  return c;
}

inline StrandGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  StrandGraph g;
  g.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    while (g.neighbors[i].size() < k) {
      const auto j = static_cast<std::uint32_t>(rng() % n);
      if (j != i && std::find(g.neighbors[i].begin(), g.neighbors[i].end(), j) == g.neighbors[i].end())
        g.neighbors[i].push_back(j);
    }
  return g;
}

// A row of vertical strands facing two cameras that only see the middle part.
struct Curtain {
  Groom groom;
  StrandColors truth;
  std::vector<Camera> cameras;
};

inline Curtain make_curtain(std::size_t strands) {
  Curtain c;
  c.groom = Groom(strands, 50);
  c.truth = StrandColors(strands, 49);
  const double spacing = 0.006;
  for (std::size_t s = 0; s < strands; ++s) {
    const double x = (static_cast<double>(s) - 0.5 * static_cast<double>(strands - 1)) * spacing;
    const auto pts = c.groom.strand(s);
    for (std::size_t j = 0; j < 50; ++j) {
      const double u = static_cast<double>(j) / 49.0;
      pts[j] = Vec3(x + 0.002 * std::sin(6.0 * u), 0.05 - 0.1 * u, 0.001 * std::cos(5.0 * u + x));
    }
    for (std::size_t j = 0; j < 49; ++j) {
      const double u = static_cast<double>(j) / 48.0;
      c.truth.strand(s)[j] = Vec3(0.45 + 1.2 * x + 0.1 * u, 0.35 - 0.1 * u, 0.2 + 0.8 * std::abs(x));
    }
  }
  for (double yaw : {-0.12, 0.12}) {
    const Vec3 eye(0.5 * std::sin(yaw), 0.0, 0.5 * std::cos(yaw));
    c.cameras.push_back(Camera::look_at(eye, Vec3(0.02 * std::sin(yaw), 0, 0), Vec3(0, 1, 0), 2000.0, 400, 440));
  }
  return c;
}

}  // namespace hairgs::test
