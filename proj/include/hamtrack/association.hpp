#pragma once

#include "hamtrack/affinity.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <utility>
#include <vector>

namespace hamtrack {

struct Match {
  std::size_t track = 0;
  std::size_t detection = 0;
  double affinity = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Every track index and every detection index appears exactly once across
/// the three lists.
struct Assignment {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Maximum-weight one-to-one matching (Hungarian / Kuhn-Munkres, O(n^3)).
/// Rectangular inputs leave the surplus side unmatched. Returns
/// (row, column) pairs sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> hungarian_max(const Eigen::MatrixXd& values);

/// Optimal matching on the fused matrix followed by demotion of every pair
/// that is gated out or whose affinity is below tau_asc.
Assignment associate(const AffinityMatrix& matrix, double tau_asc);

}  // namespace hamtrack
