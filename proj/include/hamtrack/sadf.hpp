#pragma once

// Scene-adaptive detection filtering. Detector confidences are modelled
// as two Gaussians, one over the last 10 frames and one over the whole
// sequence so far. The scene-adaptive threshold is the p_d-quantile of
// their beta-weighted CDF mixture, blended with a fixed threshold that
// dominates the first frames:
//
//   tau_t = (1 - rho^t) * tau_sa + rho^t * tau_const

#include "hamtrack/core.hpp"

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace hamtrack {

/// Welford accumulator. std() is the sample (n-1) deviation, 0 below two
/// samples.
class RunningStats {
 public:
  void push(double x);
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const;
  double stddev() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct GaussianModel {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Normal CDF; a zero deviation degenerates to a unit step at the mean.
double gaussian_cdf(double x, const GaussianModel& g);

/// Root of beta * F10(tau) + (1 - beta) * Fall(tau) = p_d by bisection on
/// [min(mu) - 10 max(sigma), max(mu) + 10 max(sigma)].
double solve_tau_sa(const GaussianModel& recent, const GaussianModel& all, double beta, double p_d);

class SadfState {
 public:
  static constexpr std::size_t kRecentFrames = 10;

  /// Records the raw (unfiltered) confidences of frame t. Throws
  /// std::invalid_argument unless t == frame() + 1.
  void observe_frame(std::span<const double> confidences, int t);

  int frame() const { return t_; }
  const RunningStats& all() const { return all_; }
  const std::deque<std::vector<double>>& recent_frames() const { return recent_; }
  bool has_samples() const { return all_.count() > 0; }

  /// Sample statistics over the buffered recent frames.
  GaussianModel recent_model() const;
  GaussianModel all_model() const { return {all_.mean(), all_.stddev()}; }

 private:
  std::deque<std::vector<double>> recent_;
  RunningStats all_;
  int t_ = 0;
};

struct SadfThreshold {
  double tau_sa = 0.0;
  double tau_t = 0.0;
};

/// Current threshold. Without any observed confidence both fields equal
/// tau_const; if only the recent window is empty the global model is used
/// for both terms.
SadfThreshold threshold(const SadfState& state, const TrackerConfig& cfg);

/// Keeps detections with confidence >= tau, preserving order.
std::vector<Detection> filter_detections(std::span<const Detection> detections, double tau);

}  // namespace hamtrack
