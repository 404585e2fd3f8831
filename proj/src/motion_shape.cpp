#include "hamtrack/motion_shape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>

namespace hamtrack {

namespace {

const Eigen::Matrix4d& transition() {
  static const Eigen::Matrix4d f = [] {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m(0, 2) = 1.0;
    m(1, 3) = 1.0;
    return m;
  }();
  return f;
}

KalmanState init_from(double a, double b, const KalmanNoise& noise) {
  KalmanState s;
  s.mean << a, b, 0.0, 0.0;
  const double pos_var = 4.0 * noise.process_pos * noise.process_pos;
  const double vel_var = 100.0 * noise.process_vel * noise.process_vel;
  s.cov = Eigen::Vector4d(pos_var, pos_var, vel_var, vel_var).asDiagonal();
  return s;
}

Eigen::Matrix4d symmetrized(const Eigen::Matrix4d& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

KalmanNoise noise_for_height(double height, const TrackerConfig& cfg) {
  return {cfg.process_pos_std * height, cfg.process_vel_std * height,
          cfg.measurement_std * height};
}

KalmanState init_motion(const BBox& box, const KalmanNoise& noise) {
  return init_from(box.center_x(), box.center_y(), noise);
}

KalmanState init_shape(const BBox& box, const KalmanNoise& noise) {
  return init_from(box.w, box.h, noise);
}

KalmanState predict(const KalmanState& state, const KalmanNoise& noise) {
  const Eigen::Matrix4d& f = transition();
  const double qp = noise.process_pos * noise.process_pos;
  const double qv = noise.process_vel * noise.process_vel;
  const Eigen::Matrix4d q = Eigen::Vector4d(qp, qp, qv, qv).asDiagonal();

  KalmanState out;
  out.mean = f * state.mean;
  out.cov = symmetrized(f * state.cov * f.transpose() + q);
  return out;
}

KalmanState update(const KalmanState& state, const Eigen::Vector2d& measurement,
                   const KalmanNoise& noise) {
  if (!measurement.allFinite()) {
    throw std::invalid_argument("kalman update: measurement must be finite");
  }
  const Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Identity();
  const double r = noise.measurement * noise.measurement;

  const Eigen::Matrix2d s = h * state.cov * h.transpose() + r * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d s_inv = s.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::Matrix<double, 4, 2> gain = state.cov * h.transpose() * s_inv;

  KalmanState out;
  out.mean = state.mean + gain * (measurement - h * state.mean);
  out.cov = symmetrized((Eigen::Matrix4d::Identity() - gain * h) * state.cov);
  return out;
}

KalmanState clamp_shape(KalmanState state) {
  state.mean(0) = std::max(state.mean(0), 1.0);
  state.mean(1) = std::max(state.mean(1), 1.0);
  return state;
}

}  // namespace hamtrack
