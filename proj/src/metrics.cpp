#include "hairgs/metrics.hpp"

#include "hairgs/error.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace hairgs {

namespace {

void require_frames(const MotionMatrix& motion) {
  if (motion.rows.rows() < 2) fail(ErrorCode::invalid_input, "motion analysis needs at least 2 frames");
  if (motion.rows.cols() == 0 || motion.rows.cols() % 3 != 0)
    fail(ErrorCode::invalid_input, "motion rows must hold xyz triples");
  if (!motion.rows.allFinite()) fail(ErrorCode::invalid_input, "motion matrix has non-finite entries");
}

}  // namespace

MotionMatrix motion_matrix(const GuideAnimation& anim) {
  validate(anim);
  MotionMatrix m;
  if (anim.frames.empty()) return m;
  const auto cols = static_cast<Eigen::Index>(anim.frames.front().points.size() * 3);
  m.rows.resize(static_cast<Eigen::Index>(anim.frames.size()), cols);
  for (std::size_t f = 0; f < anim.frames.size(); ++f) {
    const auto& pts = anim.frames[f].points;
    for (std::size_t p = 0; p < pts.size(); ++p)
      m.rows.block<1, 3>(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(3 * p)) = pts[p].transpose();
    m.times.push_back(static_cast<double>(f) * anim.frame_dt);
  }
  return m;
}

// Thin SVD of the centered T x 3P matrix: the squared singular values are the
// covariance spectrum and U * S gives each frame's coordinates, accurate even
// for components with tiny variance.
MotionPca motion_pca(const MotionMatrix& motion) {
  require_frames(motion);
  const Eigen::Index t = motion.rows.rows();
  // Offsetting by frame 0 first makes a static sequence center to exact zeros.
  const Eigen::MatrixXd offset = motion.rows.rowwise() - motion.rows.row(0);
  const Eigen::RowVectorXd mean = offset.colwise().mean();
  const Eigen::MatrixXd centered = offset.rowwise() - mean;
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);

  const Eigen::Index k = svd.singularValues().size();
  MotionPca pca;
  pca.variances = Eigen::VectorXd::Zero(t);
  pca.projections = Eigen::MatrixXd::Zero(t, t);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double sigma = svd.singularValues()(c);
    pca.variances(c) = sigma * sigma / static_cast<double>(t - 1);
    pca.projections.col(c) = svd.matrixU().col(c) * sigma;
  }
  return pca;
}

std::vector<double> explained_variance(const MotionMatrix& motion) {
  const MotionPca pca = motion_pca(motion);
  const double total = pca.variances.sum();
  std::vector<double> out(static_cast<std::size_t>(pca.variances.size()), 0.0);
  if (!(total > 0.0)) {
    out.front() = 100.0;
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 100.0 * pca.variances(static_cast<Eigen::Index>(i)) / total;
  return out;
}

double explained_variance_pc1(const MotionMatrix& motion) { return explained_variance(motion).front(); }

double temporal_smoothness(const MotionMatrix& motion, std::size_t components) {
  if (components < 1) fail(ErrorCode::invalid_input, "temporal smoothness needs >= 1 component");
  const MotionPca pca = motion_pca(motion);
  const Eigen::Index t = pca.projections.rows();
  const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(components), pca.projections.cols());
  const Eigen::MatrixXd z = pca.projections.leftCols(k);
  double sum = 0.0;
  for (Eigen::Index i = 1; i < t; ++i) sum += (z.row(i) - z.row(i - 1)).norm();
  return sum / static_cast<double>(t - 1) / std::sqrt(static_cast<double>(motion.particles()));
}

PcTracks pc_std_tracks(const MotionMatrix& motion, std::size_t components) {
  if (components < 1) fail(ErrorCode::invalid_input, "pc tracks need >= 1 component");
  const MotionPca pca = motion_pca(motion);
  const Eigen::Index t = pca.projections.rows();
  const auto k = static_cast<Eigen::Index>(components);
  PcTracks tracks;
  tracks.projection = Eigen::MatrixXd::Zero(t, k);
  const Eigen::Index avail = std::min(k, pca.projections.cols());
  tracks.projection.leftCols(avail) = pca.projections.leftCols(avail);
  tracks.running_std = Eigen::MatrixXd::Zero(t, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) {
      const double v = tracks.projection(i, c);
      const double delta = v - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v - mean);
      tracks.running_std(i, c) = std::sqrt(std::max(0.0, m2 / static_cast<double>(i + 1)));
    }
  }
  return tracks;
}

}  // namespace hairgs
