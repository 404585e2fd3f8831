#pragma once

// Constant-velocity Kalman filters for a track's centre position
// [x_c, y_c, vx, vy] and its size [w, h, vw, vh]. Both use the same
// 4-state layout and a frame step of 1.

#include "hamtrack/core.hpp"

#include <Eigen/Core>

namespace hamtrack {

struct KalmanState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();
};

/// Standard deviations in pixels. Callers usually scale them by object
/// height, see noise_for_height().
struct KalmanNoise {
  double process_pos = 0.0;
  double process_vel = 0.0;
  double measurement = 0.0;
};

KalmanNoise noise_for_height(double height, const TrackerConfig& cfg);

/// Position from the box centre, zero velocity. Initial position std is
/// 2*process_pos, velocity std 10*process_vel (uninformed).
KalmanState init_motion(const BBox& box, const KalmanNoise& noise);
KalmanState init_shape(const BBox& box, const KalmanNoise& noise);

/// x' = F x, P' = F P F^T + Q.
KalmanState predict(const KalmanState& state, const KalmanNoise& noise);

/// Standard correction with H = [I 0] and R = measurement^2 I. Throws
/// std::invalid_argument on a non-finite measurement. A singular innovation
/// covariance (certain prior, noise-free sensor) uses its pseudo-inverse.
KalmanState update(const KalmanState& state, const Eigen::Vector2d& measurement,
                   const KalmanNoise& noise);

/// Floors the size components of a shape state at 1 px.
KalmanState clamp_shape(KalmanState state);

}  // namespace hamtrack
