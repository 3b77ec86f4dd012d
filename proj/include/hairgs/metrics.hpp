#pragma once

#include "hairgs/animation.hpp"

#include <Eigen/Core>

#include <vector>

namespace hairgs {

/// One row per frame: flattened xyz of every particle.
struct MotionMatrix {
  Eigen::MatrixXd rows;
  std::vector<double> times;

  std::size_t frames() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t particles() const { return static_cast<std::size_t>(rows.cols() / 3); }
};

MotionMatrix motion_matrix(const GuideAnimation& anim);

/// Principal components of the time-centered motion, largest first.
struct MotionPca {
  Eigen::VectorXd variances;    ///< eigenvalues of the frame covariance
  Eigen::MatrixXd projections;  ///< frames x components, coordinates of each centered frame
};

MotionPca motion_pca(const MotionMatrix& motion);

/// 100 * lambda_1 / sum(lambda). Motion without variance scores 100.
double explained_variance_pc1(const MotionMatrix& motion);

/// Per-component share of the total variance, in percent.
std::vector<double> explained_variance(const MotionMatrix& motion);

/// Mean frame-to-frame distance in the space of the top `components` PCs,
/// divided by sqrt(particle count).
double temporal_smoothness(const MotionMatrix& motion, std::size_t components = 3);

struct PcTracks {
  Eigen::MatrixXd projection;  ///< frames x components
  Eigen::MatrixXd running_std; ///< frames x components, population std over frames [0, t]
};

PcTracks pc_std_tracks(const MotionMatrix& motion, std::size_t components = 3);

}  // namespace hairgs
