#pragma once

#include "hamtrack/core.hpp"

#include <deque>
#include <functional>
#include <vector>

namespace hamtrack {

struct HistoryEntry {
  AppearanceDescriptor descriptor;
  double conf = 0.0;  // affinity of the match that admitted the entry
  int frame = 1;
};

/// Appearance state of one track: the most recently matched descriptor with
/// its matching confidence, plus a bounded history of reliable matches
/// (oldest first).
struct AppearanceMemory {
  AppearanceDescriptor recent;
  double recent_conf = 1.0;
  std::deque<HistoryEntry> history{};
};

/// Similarity in [0,1]; score(a, a) == 1 and symmetric.
using Scorer = std::function<double(const AppearanceDescriptor&, const AppearanceDescriptor&)>;

/// Bhattacharyya coefficient sum_k sqrt(a_k * b_k).
double score_histogram(const AppearanceDescriptor& a, const AppearanceDescriptor& b);

/// (1 + cos(a, b)) / 2 for unit embeddings.
double score_embedding(const AppearanceDescriptor& a, const AppearanceDescriptor& b);

/// Dispatches on descriptor kind; throws std::invalid_argument on mixed kinds.
double score_auto(const AppearanceDescriptor& a, const AppearanceDescriptor& b);

/// Elementwise alpha * matched + (1 - alpha) * prev, renormalized.
AppearanceDescriptor update_histogram(const AppearanceDescriptor& prev,
                                      const AppearanceDescriptor& matched, double alpha);

/// w_n = c_n / sum_k c_k. Throws std::invalid_argument on an empty history
/// or when every confidence is zero.
std::vector<double> history_weights(const AppearanceMemory& memory);

/// Historical appearance matching:
///   c_r * s(recent, z) + (1 - c_r) * sum_n w_n * s(hist_n, z)
/// Falls back to s(recent, z) when the history is empty. Throws
/// std::runtime_error if the scorer leaves [0,1].
double ham(const AppearanceMemory& memory, const AppearanceDescriptor& z, const Scorer& scorer);

/// Recent-appearance-only score s(recent, z).
double baseline_appearance(const AppearanceMemory& memory, const AppearanceDescriptor& z,
                           const Scorer& scorer);

struct HistoryPolicy {
  double tau_conf = 0.6;
  int hist_max = 10;
  int hist_window = 15;
};

HistoryPolicy history_policy(const TrackerConfig& cfg);

/// Refreshes recent/recent_conf with the matched descriptor; appends a
/// history entry iff match_affinity > tau_conf; then evicts entries older
/// than hist_window frames and finally the oldest until at most hist_max
/// remain.
AppearanceMemory maybe_store_history(AppearanceMemory memory, const AppearanceDescriptor& descriptor,
                                     double match_affinity, int frame, const HistoryPolicy& policy);

}  // namespace hamtrack
