#include "hamtrack/affinity.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace hamtrack {

double shape_affinity(double pred_w, double pred_h, const BBox& z, double xi) {
  if (!(pred_w > 0.0) || !(pred_h > 0.0) || !(z.w > 0.0) || !(z.h > 0.0)) {
    throw std::invalid_argument("shape_affinity: dimensions must be positive");
  }
  const double dh = std::abs(pred_h - z.h) / (pred_h + z.h);
  const double dw = std::abs(pred_w - z.w) / (pred_w + z.w);
  return std::exp(-xi * (dh + dw));
}

double motion_affinity(const Eigen::Vector2d& pred_pos, const Eigen::Vector2d& z_pos,
                       const Eigen::Matrix2d& sigma, double eta) {
  const Eigen::LLT<Eigen::Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success || !(sigma.determinant() > 0.0)) {
    throw std::invalid_argument("motion_affinity: sigma not positive-definite");
  }
  const Eigen::Vector2d d = z_pos - pred_pos;
  const double mahalanobis_sq = d.dot(llt.solve(d));
  return std::exp(-eta * mahalanobis_sq);
}

AffinityMatrix build_sm_matrix(std::span<const PredictedBox> tracks,
                               std::span<const Detection> detections, const TrackerConfig& cfg) {
  const auto n_tracks = static_cast<Eigen::Index>(tracks.size());
  const auto n_dets = static_cast<Eigen::Index>(detections.size());

  AffinityMatrix m;
  m.values = Eigen::MatrixXd::Zero(n_tracks, n_dets);
  m.gate_mask = BoolMatrix::Constant(n_tracks, n_dets, false);
  for (Eigen::Index i = 0; i < n_tracks; ++i) {
    const PredictedBox& t = tracks[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n_dets; ++j) {
      const BBox& z = detections[static_cast<std::size_t>(j)].bbox;
      const double shape = shape_affinity(t.w, t.h, z, cfg.xi);
      const double motion =
          motion_affinity(t.center, {z.center_x(), z.center_y()}, cfg.sigma, cfg.eta);
      m.values(i, j) = shape * motion;
      m.gate_mask(i, j) = m.values(i, j) > cfg.tau_asc;
    }
  }
  return m;
}

AffinityMatrix fuse_appearance(const AffinityMatrix& sm, const AppearanceFn& appearance) {
  AffinityMatrix out;
  out.values = Eigen::MatrixXd::Zero(sm.rows(), sm.cols());
  out.gate_mask = sm.gate_mask;
  for (Eigen::Index i = 0; i < sm.rows(); ++i) {
    for (Eigen::Index j = 0; j < sm.cols(); ++j) {
      if (!sm.gate_mask(i, j)) continue;
      double a = 1.0;
      if (appearance) {
        a = appearance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        ++out.appearance_evals;
        if (!(a >= 0.0 && a <= 1.0)) {
          throw std::runtime_error(
              fmt::format("appearance affinity {} outside [0,1] at ({}, {})", a, i, j));
        }
      }
      out.values(i, j) = sm.values(i, j) * a;
    }
  }
  return out;
}

AffinityMatrix fuse_appearance(const AffinityMatrix& sm,
                               std::span<const AppearanceMemory* const> tracks,
                               std::span<const AppearanceDescriptor* const> detections,
                               const Scorer& scorer, bool use_ham) {
  if (tracks.size() != static_cast<std::size_t>(sm.rows()) ||
      detections.size() != static_cast<std::size_t>(sm.cols())) {
    throw std::invalid_argument("fuse_appearance: matrix and input sizes disagree");
  }
  return fuse_appearance(sm, [&](std::size_t i, std::size_t j) {
    return use_ham ? ham(*tracks[i], *detections[j], scorer)
                   : baseline_appearance(*tracks[i], *detections[j], scorer);
  });
}

}  // namespace hamtrack
