#include "hamtrack/association.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hamtrack {

namespace {

// Shortest augmenting path formulation on an n x m cost matrix with n <= m
// (rows are all assigned). Potentials u, v and the 1-based column owner p
// follow the classic e-maxx layout.
std::vector<int> solve_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> hungarian_max(const Eigen::MatrixXd& values) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (values.rows() == 0 || values.cols() == 0) return pairs;
  if (!values.allFinite()) throw std::invalid_argument("hungarian_max: values must be finite");

  // Maximize by minimizing (max - value); the solver wants rows <= cols.
  const bool transposed = values.rows() > values.cols();
  const Eigen::MatrixXd oriented = transposed ? Eigen::MatrixXd(values.transpose()) : values;
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(oriented.rows(), oriented.cols(),
                                                         oriented.maxCoeff()) - oriented;

  const std::vector<int> assignment = solve_min_cost(cost);
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    const auto c = static_cast<std::size_t>(assignment[r]);
    pairs.emplace_back(transposed ? c : r, transposed ? r : c);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

Assignment associate(const AffinityMatrix& matrix, double tau_asc) {
  const auto n_tracks = static_cast<std::size_t>(matrix.rows());
  const auto n_dets = static_cast<std::size_t>(matrix.cols());
  std::vector<char> track_used(n_tracks, 0), det_used(n_dets, 0);

  Assignment out;
  for (const auto& [i, j] : hungarian_max(matrix.values)) {
    const auto ei = static_cast<Eigen::Index>(i);
    const auto ej = static_cast<Eigen::Index>(j);
    const double a = matrix.values(ei, ej);
    const bool gated = matrix.gate_mask.size() == 0 || matrix.gate_mask(ei, ej);
    if (!gated || a < tau_asc) continue;
    out.matches.push_back({i, j, a});
    track_used[i] = 1;
    det_used[j] = 1;
  }
  for (std::size_t i = 0; i < n_tracks; ++i) {
    if (!track_used[i]) out.unmatched_tracks.push_back(i);
  }
  for (std::size_t j = 0; j < n_dets; ++j) {
    if (!det_used[j]) out.unmatched_detections.push_back(j);
  }
  return out;
}

}  // namespace hamtrack
