#include "hairgs/appearance.hpp"

#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hairgs {

namespace {

Vec3 clamp01(const Vec3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_graph(const StrandColors& colors, const StrandGraph& graph) {
  if (graph.size() != colors.strand_count())
    fail(ErrorCode::invalid_input, "strand graph has " + std::to_string(graph.size()) + " nodes but colors have " +
                                       std::to_string(colors.strand_count()) + " strands");
  for (const auto& list : graph.neighbors)
    for (std::uint32_t j : list)
      if (j >= graph.size()) fail(ErrorCode::invalid_input, "strand graph references strand " + std::to_string(j));
}

std::string index_list(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size() && i < 20; ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  if (idx.size() > 20) s += ",...";
  return s;
}

}  // namespace

void validate(const StrandColors& colors, const Groom& groom) {
  if (colors.segments_per_strand != groom.segments_per_strand() || colors.strand_count() != groom.strand_count() ||
      colors.rgb.size() != groom.strand_count() * groom.segments_per_strand())
    fail(ErrorCode::invalid_input, "strand colors do not match the groom shape");
  for (const Vec3& c : colors.rgb)
    if (!c.allFinite()) fail(ErrorCode::invalid_input, "strand colors must be finite");
}

StrandGraph build_strand_graph(const Groom& groom, std::size_t k) {
  const std::size_t n = groom.strand_count();
  if (k < 1 || k >= n)
    fail(ErrorCode::invalid_input,
         "strand graph needs 1 <= k < strand count (k=" + std::to_string(k) + ", strands=" + std::to_string(n) + ")");
  const auto nn = knn_roots(groom, groom, k + 1);
  StrandGraph g;
  g.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Neighbor& nb : nn[i]) {
      if (nb.index == i || g.neighbors[i].size() == k) continue;
      g.neighbors[i].push_back(static_cast<std::uint32_t>(nb.index));
    }
  }
  return g;
}

GaussianSet strand_gaussians(const Groom& groom, const StrandColors& colors) {
  validate(groom);
  validate(colors, groom);
  GaussianSet out;
  out.primitives.reserve(groom.strand_count() * groom.segments_per_strand());
  for (std::size_t s = 0; s < groom.strand_count(); ++s) {
    const auto pts = groom.strand(s);
    std::vector<SegmentFrame> frames;
    try {
      frames = tnb_frames(pts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_strand) throw;
      out.skipped_strands.push_back(s);
      continue;
    }
    const auto rgb = colors.strand(s);
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
      const Vec3 d = pts[j + 1] - pts[j];
      const double length = d.norm();
      if (!(length > 0.0)) continue;
      GaussianPrimitive g;
      g.mean = 0.5 * (pts[j] + pts[j + 1]);
      g.scale = Vec3(length, kStrandThickness, kStrandThickness);
      g.rotation = Eigen::Quaterniond(frames[j].rotation()).normalized();
      g.opacity = 1.0;
      g.color = rgb[j];
      g.sh.emplace();
      g.sh->fill(0.0);
      for (int c = 0; c < 3; ++c) (*g.sh)[static_cast<std::size_t>(c)] = rgb[j][c];
      g.strand = static_cast<std::uint32_t>(s);
      g.segment = static_cast<std::uint32_t>(j);
      out.primitives.push_back(g);
    }
  }
  if (!out.skipped_strands.empty())
    warn("skipped " + std::to_string(out.skipped_strands.size()) +
         " degenerate strands: " + index_list(out.skipped_strands));
  return out;
}

double consistency_loss(const StrandColors& colors, const StrandGraph& graph) {
  require_graph(colors, graph);
  double loss = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto ci = colors.strand(i);
    for (std::uint32_t j : graph.neighbors[i]) {
      const auto cj = colors.strand(j);
      for (std::size_t s = 0; s < ci.size(); ++s) loss += (ci[s] - cj[s]).squaredNorm();
    }
  }
  return loss;
}

StrandColors consistency_gradient(const StrandColors& colors, const StrandGraph& graph) {
  require_graph(colors, graph);
  StrandColors g(colors.strand_count(), colors.segments_per_strand, Vec3::Zero());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto ci = colors.strand(i);
    auto gi = g.strand(i);
    for (std::uint32_t j : graph.neighbors[i]) {
      const auto cj = colors.strand(j);
      auto gj = g.strand(j);
      for (std::size_t s = 0; s < ci.size(); ++s) {
        const Vec3 d = 2.0 * (ci[s] - cj[s]);
        gi[s] += d;
        gj[s] -= d;
      }
    }
  }
  return g;
}

double diffusion_step_bound(const StrandGraph& graph) {
  std::vector<std::size_t> degree(graph.size(), 0);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    degree[i] += graph.neighbors[i].size();
    for (std::uint32_t j : graph.neighbors[i]) ++degree[j];
  }
  const std::size_t max_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
  return max_degree == 0 ? 0.0 : 1.0 / (2.0 * static_cast<double>(max_degree));
}

StrandColors diffuse_colors(const StrandColors& colors, const StrandGraph& graph, std::span<const std::uint8_t> fixed,
                            std::size_t steps, double step_size, std::vector<double>* losses) {
  require_graph(colors, graph);
  if (fixed.size() != colors.strand_count())
    fail(ErrorCode::invalid_input, "fixed mask length does not match the strand count");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) fail(ErrorCode::invalid_input, "step_size must be > 0");
  if (std::none_of(fixed.begin(), fixed.end(), [](std::uint8_t f) { return f != 0; }))
    warn("diffuse_colors: no fixed strands; colors converge to each component's mean");

  StrandColors c = colors;
  for (Vec3& v : c.rgb) v = clamp01(v);
  for (std::size_t it = 0; it < steps; ++it) {
    if (losses) losses->push_back(consistency_loss(c, graph));
    const StrandColors g = consistency_gradient(c, graph);
    for (std::size_t i = 0; i < c.strand_count(); ++i) {
      if (fixed[i]) continue;
      auto ci = c.strand(i);
      const auto gi = g.strand(i);
      for (std::size_t s = 0; s < ci.size(); ++s) ci[s] = clamp01(ci[s] - step_size * gi[s]);
    }
  }
  if (losses) losses->push_back(consistency_loss(c, graph));
  return c;
}

PhotometricObjective::PhotometricObjective(const Groom& groom, std::span<const Camera> cameras,
                                           std::span<const Image> targets, std::span<const Mask> masks,
                                           const Vec3& background)
    : strands_(groom.strand_count()), segments_(groom.segments_per_strand()) {
  if (cameras.empty()) fail(ErrorCode::invalid_input, "color fitting needs at least one camera");
  if (targets.size() != cameras.size() || masks.size() != cameras.size())
    fail(ErrorCode::invalid_input, "need exactly one target image and one mask per camera");
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    validate(cameras[c]);
    const int w = cameras[c].width, h = cameras[c].height;
    const auto pixels = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (targets[c].width != w || targets[c].height != h || targets[c].pixels.size() != pixels)
      fail(ErrorCode::invalid_input, "target image " + std::to_string(c) + " does not match its camera resolution");
    if (masks[c].width != w || masks[c].height != h || masks[c].values.size() != pixels)
      fail(ErrorCode::invalid_input, "hair mask " + std::to_string(c) + " does not match its camera resolution");
  }

  const GaussianSet set = strand_gaussians(groom, StrandColors(strands_, segments_));
  primitive_slot_.reserve(set.primitives.size());
  for (const GaussianPrimitive& g : set.primitives)
    primitive_slot_.push_back(static_cast<std::uint32_t>(g.strand * segments_ + g.segment));

  observed_.assign(strands_, 0);
  views_.reserve(cameras.size());
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    RenderResult r = render_primitives(set.primitives, cameras[c], background);
    View v;
    v.weights = std::move(r.weights);
    v.base.resize(v.weights.transmittance.size());
    for (std::size_t p = 0; p < v.base.size(); ++p) v.base[p] = v.weights.transmittance[p] * background;
    v.target = &targets[c];
    v.mask = &masks[c];
    for (std::size_t p = 0; p < v.base.size(); ++p) {
      if (v.mask->values[p] == 0.0) continue;
      empty_mask_ = false;
      for (std::uint32_t e = v.weights.offsets[p]; e < v.weights.offsets[p + 1]; ++e)
        if (v.weights.weight[e] > 0.0) observed_[primitive_slot_[v.weights.splat[e]] / segments_] = 1;
    }
    views_.push_back(std::move(v));
  }
}

Image PhotometricObjective::render(const View& view, const StrandColors& colors) const {
  Image img(view.weights.width, view.weights.height);
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    Vec3 c = Vec3::Zero();
    for (std::uint32_t e = view.weights.offsets[p]; e < view.weights.offsets[p + 1]; ++e)
      c += view.weights.weight[e] * colors.rgb[primitive_slot_[view.weights.splat[e]]];
    img.pixels[p] = c + view.base[p];
  }
  return img;
}

double PhotometricObjective::loss(const StrandColors& colors) const {
  double total = 0.0;
  for (const View& v : views_) {
    const Image img = render(v, colors);
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      total += v.mask->values[p] * (img.pixels[p] - v.target->pixels[p]).cwiseAbs().sum();
  }
  return total;
}

StrandColors PhotometricObjective::gradient(const StrandColors& colors) const {
  StrandColors g(strands_, segments_, Vec3::Zero());
  for (const View& v : views_) {
    const Image img = render(v, colors);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      const double m = v.mask->values[p];
      if (m == 0.0) continue;
      const Vec3 r = img.pixels[p] - v.target->pixels[p];
      const Vec3 s(m * sign(r.x()), m * sign(r.y()), m * sign(r.z()));
      for (std::uint32_t e = v.weights.offsets[p]; e < v.weights.offsets[p + 1]; ++e)
        g.rgb[primitive_slot_[v.weights.splat[e]]] += v.weights.weight[e] * s;
    }
  }
  return g;
}

FitResult fit_colors(const Groom& groom, std::span<const Camera> cameras, std::span<const Image> targets,
                     std::span<const Mask> masks, const FitOptions& options) {
  validate(groom);
  if (options.iterations < 1) fail(ErrorCode::invalid_input, "fit needs at least one iteration");
  if (!(options.lambda_consistency >= 0.0) || !(options.learning_rate > 0.0) || !(options.final_learning_rate > 0.0) ||
      !(options.phase_fraction >= 0.0 && options.phase_fraction <= 1.0))
    fail(ErrorCode::invalid_input, "invalid fit options");

  const PhotometricObjective objective(groom, cameras, targets, masks, options.background);
  const std::size_t strands = groom.strand_count();
  const std::size_t k = std::min(options.graph_neighbors, strands > 0 ? strands - 1 : 0);
  const StrandGraph graph = k >= 1 ? build_strand_graph(groom, k) : StrandGraph{std::vector<std::vector<std::uint32_t>>(strands)};

  const bool consistency_only = objective.empty_mask();
  double lambda = options.lambda_consistency;
  if (consistency_only) {
    warn("all hair masks are empty; fitting with the consistency term only");
    if (lambda == 0.0) lambda = 1.0;
  }
  const auto switch_iter = static_cast<std::size_t>(std::floor(options.phase_fraction * options.iterations));

  FitResult result;
  result.colors = StrandColors(strands, groom.segments_per_strand(), clamp01(options.initial_color));
  result.observed = objective.observed();
  StrandColors& c = result.colors;
  std::vector<Vec3> m1(c.rgb.size(), Vec3::Zero()), m2(c.rgb.size(), Vec3::Zero());
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  const double n = static_cast<double>(std::max<std::size_t>(options.iterations - 1, 1));

  for (std::size_t it = 0; it < options.iterations; ++it) {
    const bool with_consistency = consistency_only || it >= switch_iter;
    const double lr = options.learning_rate *
                      std::pow(options.final_learning_rate / options.learning_rate, static_cast<double>(it) / n);
    const double l_rgb = consistency_only ? 0.0 : objective.loss(c);
    const double l_con = consistency_loss(c, graph);
    const double total = l_rgb + (with_consistency ? lambda * l_con : 0.0);
    if (!std::isfinite(total)) fail(ErrorCode::diverged, "color fit produced a non-finite loss at iteration " + std::to_string(it));
    result.log.push_back({it, l_rgb, l_con, total});

    StrandColors g = consistency_only ? StrandColors(strands, c.segments_per_strand, Vec3::Zero()) : objective.gradient(c);
    if (with_consistency) {
      const StrandColors gc = consistency_gradient(c, graph);
      for (std::size_t i = 0; i < g.rgb.size(); ++i) g.rgb[i] += lambda * gc.rgb[i];
    }
    const double t = static_cast<double>(it + 1);
    const double bc1 = 1.0 - std::pow(beta1, t), bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < c.rgb.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * g.rgb[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * g.rgb[i].cwiseProduct(g.rgb[i]);
      const Vec3 mhat = m1[i] / bc1;
      const Vec3 vhat = m2[i] / bc2;
      c.rgb[i] = clamp01(c.rgb[i] - lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + adam_eps).matrix()));
    }
  }
  return result;
}

}  // namespace hairgs
