#pragma once

// Deterministic synthetic scenes: piecewise-linear object paths, occlusion
// spans, detector noise (drops, jitter, merged and fragmented boxes, false
// positives), regime-switching confidences and per-object embeddings that
// get corrupted around occlusions.

#include "hamtrack/io_mot.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace hamtrack {

/// xoshiro256** seeded through splitmix64. Both are fixed, published
/// algorithms, so a seed gives the same stream on every platform.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one draw per call, two uniforms).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
};

struct Waypoint {
  int frame = 1;
  double x = 0.0;  // box centre
  double y = 0.0;
};

/// Object alive from the first to the last waypoint frame, centre linearly
/// interpolated in between.
struct ObjectSpec {
  std::vector<Waypoint> path;
  double w = 30.0;
  double h = 60.0;
};

struct OcclusionEvent {
  std::size_t object = 0;
  int start = 1;
  int end = 1;
  /// Object hiding it; its appearance leaks into the corrupted descriptors.
  std::optional<std::size_t> occluder;
};

struct NoiseModel {
  double drop_prob = 0.0;
  double jitter_std = 0.0;
  double merge_prob = 0.0;      // per overlapping pair and frame
  double fragment_prob = 0.0;   // per detection
  double fp_rate = 0.0;         // probability of one false positive per frame
  double fp_conf_shift = 0.0;   // false positives draw from mean - shift
};

struct ConfidenceRegime {
  int start = 1;
  double mean = 50.0;
  double stddev = 0.0;
};

struct DescriptorModel {
  int dim = 16;
  double noise_std = 0.0;
  /// Weight of the occluder's appearance in corrupted descriptors.
  double corruption = 0.0;
  /// Frames before and after an occlusion span in which the occluded
  /// object's descriptor is corrupted.
  int corrupt_margin = 0;
  /// Weight of the hidden object's appearance in the occluder's descriptor
  /// during the span.
  double occluder_leak = 0.0;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  int n_frames = 100;
  int width = 640;
  int height = 480;
  std::vector<ObjectSpec> objects;
  std::vector<OcclusionEvent> occlusions;
  NoiseModel noise;
  std::vector<ConfidenceRegime> regimes{ConfidenceRegime{}};
  DescriptorModel descriptor;
};

/// Bookkeeping identity: det rows = live - occluded - dropped - merged + false_positives.
struct GenerationStats {
  long live = 0;
  long occluded = 0;
  long dropped = 0;
  long merged = 0;
  long fragments = 0;
  long false_positives = 0;
};

struct Scenario {
  TrackBoxesByFrame gt;          // ids are object index + 1
  DetectionsByFrame detections;  // descriptors attached
  EmbeddingTable embeddings;     // same descriptors keyed by (frame, ordinal)
  GenerationStats stats;
};

/// Throws ConfigError naming the offending key (e.g. `event.2.span`).
void validate_scenario(const ScenarioSpec& spec);

Scenario generate(const ScenarioSpec& spec);

/// Flat-colour rendering of the visible ground-truth boxes of one frame.
Image render_frame(const ScenarioSpec& spec, const Scenario& scenario, int frame);

/// Parses the key-value scenario format (see scenarios/*.scn). Throws
/// ConfigError naming the key on bad input; does not validate ranges.
ScenarioSpec parse_scenario_text(std::string_view text);

/// Sample mean and std (n-1) of detection confidences in frames [first, last].
/// Throws std::invalid_argument when the span holds no detection.
std::pair<double, double> regime_stats(const DetectionsByFrame& detections, int first, int last);

/// n objects on separate horizontal lanes moving at constant velocity for
/// the whole sequence. No noise, no occlusion.
ScenarioSpec make_lanes_scenario(std::uint64_t seed, int n_objects, int n_frames);

/// Pairs of objects whose paths cross, the rear one hidden for 3-8 frames
/// around the crossing, with descriptor corruption around each occlusion.
ScenarioSpec make_crossing_scenario(std::uint64_t seed, int n_pairs, int n_frames);

}  // namespace hamtrack
