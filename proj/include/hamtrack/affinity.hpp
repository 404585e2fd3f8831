#pragma once

#include "hamtrack/appearance.hpp"
#include "hamtrack/core.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>

namespace hamtrack {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Track x detection scores in [0,1]. Entries whose gate flag is false are
/// exactly zero.
struct AffinityMatrix {
  Eigen::MatrixXd values;
  BoolMatrix gate_mask;
  std::size_t appearance_evals = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::size_t gated_in() const { return static_cast<std::size_t>(gate_mask.count()); }
};

/// Predicted track state as seen by the affinity cues.
struct PredictedBox {
  Eigen::Vector2d center;
  double w = 1.0;
  double h = 1.0;
};

/// exp(-xi * (|h_p - h_z| / (h_p + h_z) + |w_p - w_z| / (w_p + w_z))).
/// Throws std::invalid_argument on non-positive sizes.
double shape_affinity(double pred_w, double pred_h, const BBox& z, double xi);

/// exp(-eta * d^T sigma^-1 d) with d = z_pos - pred_pos. Throws
/// std::invalid_argument if sigma is not positive-definite.
double motion_affinity(const Eigen::Vector2d& pred_pos, const Eigen::Vector2d& z_pos,
                       const Eigen::Matrix2d& sigma, double eta);

/// Shape-motion matrix: values(i,j) = S(i,j) * M(i,j); gate(i,j) = values > tau_asc.
/// Unlike the fused matrix, values below the gate are kept here.
AffinityMatrix build_sm_matrix(std::span<const PredictedBox> tracks,
                               std::span<const Detection> detections, const TrackerConfig& cfg);

/// Appearance score for (track row, detection column).
using AppearanceFn = std::function<double(std::size_t, std::size_t)>;

/// Final matrix: gated-in cells become sm * appearance(i, j), others 0. The
/// appearance callback is invoked exactly once per gated-in cell; a null
/// callback means appearance is unused (score 1, no evaluations counted).
/// Throws std::runtime_error if the callback returns a value outside [0,1].
AffinityMatrix fuse_appearance(const AffinityMatrix& sm, const AppearanceFn& appearance);

/// Same, scoring each gated-in pair with ham() or, when use_ham is false,
/// baseline_appearance(). Spans are indexed by row and column.
AffinityMatrix fuse_appearance(const AffinityMatrix& sm,
                               std::span<const AppearanceMemory* const> tracks,
                               std::span<const AppearanceDescriptor* const> detections,
                               const Scorer& scorer, bool use_ham);

}  // namespace hamtrack
