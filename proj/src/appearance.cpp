#include "hamtrack/appearance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hamtrack {

namespace {

void require_same_shape(const AppearanceDescriptor& a, const AppearanceDescriptor& b,
                        DescriptorKind kind, const char* who) {
  if (a.kind() != kind || b.kind() != kind) {
    throw std::invalid_argument(fmt::format("{}: descriptor kind mismatch", who));
  }
  if (a.size() != b.size()) {
    throw std::invalid_argument(
        fmt::format("{}: length mismatch ({} vs {})", who, a.size(), b.size()));
  }
}

double checked(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw std::runtime_error(fmt::format("appearance scorer returned {} outside [0,1]", score));
  }
  return score;
}

}  // namespace

double score_histogram(const AppearanceDescriptor& a, const AppearanceDescriptor& b) {
  require_same_shape(a, b, DescriptorKind::kHistogram, "score_histogram");
  const auto av = a.values();
  const auto bv = b.values();
  double bc = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) bc += std::sqrt(av[k] * bv[k]);
  return std::clamp(bc, 0.0, 1.0);
}

double score_embedding(const AppearanceDescriptor& a, const AppearanceDescriptor& b) {
  require_same_shape(a, b, DescriptorKind::kEmbedding, "score_embedding");
  const auto av = a.values();
  const auto bv = b.values();
  double dot = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) dot += av[k] * bv[k];
  return std::clamp(0.5 * (1.0 + dot), 0.0, 1.0);
}

double score_auto(const AppearanceDescriptor& a, const AppearanceDescriptor& b) {
  if (a.kind() != b.kind()) throw std::invalid_argument("score: descriptor kind mismatch");
  return a.kind() == DescriptorKind::kHistogram ? score_histogram(a, b) : score_embedding(a, b);
}

AppearanceDescriptor update_histogram(const AppearanceDescriptor& prev,
                                      const AppearanceDescriptor& matched, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument(fmt::format("update_histogram: alpha {} outside [0,1]", alpha));
  }
  require_same_shape(prev, matched, DescriptorKind::kHistogram, "update_histogram");
  const auto pv = prev.values();
  const auto mv = matched.values();
  std::vector<double> blended(pv.size());
  for (std::size_t k = 0; k < pv.size(); ++k) blended[k] = alpha * mv[k] + (1.0 - alpha) * pv[k];
  return AppearanceDescriptor::histogram(std::move(blended));
}

std::vector<double> history_weights(const AppearanceMemory& memory) {
  if (memory.history.empty()) throw std::invalid_argument("history_weights: empty history");
  double total = 0.0;
  for (const auto& entry : memory.history) total += entry.conf;
  if (!(total > 0.0)) throw std::invalid_argument("history_weights: all confidences are zero");

  std::vector<double> weights;
  weights.reserve(memory.history.size());
  for (const auto& entry : memory.history) weights.push_back(entry.conf / total);
  return weights;
}

double baseline_appearance(const AppearanceMemory& memory, const AppearanceDescriptor& z,
                           const Scorer& scorer) {
  return checked(scorer(memory.recent, z));
}

double ham(const AppearanceMemory& memory, const AppearanceDescriptor& z, const Scorer& scorer) {
  const double recent = checked(scorer(memory.recent, z));
  if (memory.history.empty()) return recent;

  const double cr = std::clamp(memory.recent_conf, 0.0, 1.0);
  if (cr == 1.0) return recent;

  const auto weights = history_weights(memory);
  double historical = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    historical += weights[n] * checked(scorer(memory.history[n].descriptor, z));
  }
  return std::clamp(cr * recent + (1.0 - cr) * historical, 0.0, 1.0);
}

HistoryPolicy history_policy(const TrackerConfig& cfg) {
  return {cfg.tau_conf, cfg.hist_max, cfg.hist_window};
}

AppearanceMemory maybe_store_history(AppearanceMemory memory, const AppearanceDescriptor& descriptor,
                                     double match_affinity, int frame, const HistoryPolicy& policy) {
  const double conf = std::clamp(match_affinity, 0.0, 1.0);
  memory.recent = descriptor;
  memory.recent_conf = conf;

  if (match_affinity > policy.tau_conf) {
    memory.history.push_back({descriptor, conf, frame});
  }
  while (!memory.history.empty() && frame - memory.history.front().frame > policy.hist_window) {
    memory.history.pop_front();
  }
  while (memory.history.size() > static_cast<std::size_t>(policy.hist_max)) {
    memory.history.pop_front();
  }
  return memory;
}

}  // namespace hamtrack
