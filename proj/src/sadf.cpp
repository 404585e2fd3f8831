#include "hamtrack/sadf.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hamtrack {

void RunningStats::push(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const {
  return count_ < 2 ? 0.0 : std::max(m2_, 0.0) / static_cast<double>(count_ - 1);
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

double gaussian_cdf(double x, const GaussianModel& g) {
  if (!(g.stddev > 0.0)) return x >= g.mean ? 1.0 : 0.0;
  return 0.5 * std::erfc(-(x - g.mean) / (g.stddev * std::sqrt(2.0)));
}

double solve_tau_sa(const GaussianModel& recent, const GaussianModel& all, double beta, double p_d) {
  auto mixed = [&](double tau) {
    return beta * gaussian_cdf(tau, recent) + (1.0 - beta) * gaussian_cdf(tau, all);
  };

  const double spread = std::max({recent.stddev, all.stddev, 0.0});
  // A zero spread still needs a non-degenerate bracket around the step.
  const double pad = spread > 0.0 ? 10.0 * spread : 1.0;
  double lo = std::min(recent.mean, all.mean) - pad;
  double hi = std::max(recent.mean, all.mean) + pad;

  if (mixed(lo) >= p_d) return lo;
  if (mixed(hi) < p_d) return hi;

  // Invariant: mixed(lo) < p_d <= mixed(hi).
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = mixed(mid);
    if (std::abs(f - p_d) <= 1e-12) return mid;
    if (f < p_d) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

void SadfState::observe_frame(std::span<const double> confidences, int t) {
  if (t != t_ + 1) {
    throw std::invalid_argument(
        fmt::format("sadf: expected frame {} but got {}", t_ + 1, t));
  }
  t_ = t;
  recent_.emplace_back(confidences.begin(), confidences.end());
  while (recent_.size() > kRecentFrames) recent_.pop_front();
  for (double c : confidences) all_.push(c);
}

GaussianModel SadfState::recent_model() const {
  RunningStats stats;
  for (const auto& frame : recent_) {
    for (double c : frame) stats.push(c);
  }
  return {stats.mean(), stats.stddev()};
}

SadfThreshold threshold(const SadfState& state, const TrackerConfig& cfg) {
  if (!state.has_samples()) return {cfg.tau_const, cfg.tau_const};

  const GaussianModel all = state.all_model();
  bool recent_empty = true;
  for (const auto& frame : state.recent_frames()) recent_empty = recent_empty && frame.empty();
  const GaussianModel recent = recent_empty ? all : state.recent_model();

  const double tau_sa = solve_tau_sa(recent, all, cfg.beta, cfg.p_d);
  const double decay = std::pow(cfg.rho, state.frame());
  return {tau_sa, (1.0 - decay) * tau_sa + decay * cfg.tau_const};
}

std::vector<Detection> filter_detections(std::span<const Detection> detections, double tau) {
  std::vector<Detection> kept;
  for (const auto& d : detections) {
    if (d.confidence >= tau) kept.push_back(d);
  }
  return kept;
}

}  // namespace hamtrack
