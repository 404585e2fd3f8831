#pragma once

#include "hamtrack/affinity.hpp"
#include "hamtrack/appearance.hpp"
#include "hamtrack/core.hpp"
#include "hamtrack/io_mot.hpp"
#include "hamtrack/motion_shape.hpp"
#include "hamtrack/sadf.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace hamtrack {

/// Supplies appearance descriptors for detections of one frame. `ordinal`
/// is the detection's position in the frame's raw (pre-filter) list.
class AppearanceSource {
 public:
  virtual ~AppearanceSource() = default;
  virtual std::optional<AppearanceDescriptor> describe(const Detection& detection,
                                                       std::size_t ordinal) = 0;
  /// False when the source never yields descriptors.
  virtual bool provides_appearance() const { return true; }
};

/// Shape and motion only; appearance affinity is fixed at 1.
class NoAppearance final : public AppearanceSource {
 public:
  std::optional<AppearanceDescriptor> describe(const Detection&, std::size_t) override {
    return std::nullopt;
  }
  bool provides_appearance() const override { return false; }
};

/// Uses Detection::descriptor when the detection carries one.
class InlineAppearance final : public AppearanceSource {
 public:
  std::optional<AppearanceDescriptor> describe(const Detection& detection,
                                               std::size_t) override {
    return detection.descriptor;
  }
};

/// Looks descriptors up by (frame, ordinal). Missing keys yield no
/// descriptor and are counted.
class EmbeddingAppearance final : public AppearanceSource {
 public:
  explicit EmbeddingAppearance(EmbeddingTable table) : table_(std::move(table)) {}
  std::optional<AppearanceDescriptor> describe(const Detection& detection,
                                               std::size_t ordinal) override;
  std::size_t misses() const { return misses_; }

 private:
  EmbeddingTable table_;
  std::size_t misses_ = 0;
};

/// Colour histograms cut from `<dir>/%06d.ppm`. Each frame is decoded at most
/// once and only when a surviving detection asks for it.
class FrameHistogramAppearance final : public AppearanceSource {
 public:
  explicit FrameHistogramAppearance(std::filesystem::path frames_dir)
      : dir_(std::move(frames_dir)) {}
  std::optional<AppearanceDescriptor> describe(const Detection& detection,
                                               std::size_t ordinal) override;

 private:
  std::filesystem::path dir_;
  int cached_frame_ = 0;
  Image cached_;
};

enum class TrackStatus { kTentative, kConfirmed, kDead };

struct Track {
  int id = 0;
  KalmanState motion;
  KalmanState shape;
  std::optional<AppearanceMemory> appearance;
  TrackStatus status = TrackStatus::kTentative;
  int hit_streak = 0;
  int misses = 0;
  BBox last_box;
  int birth_frame = 1;

  /// Predicted (or current) state as seen by the affinity cues.
  PredictedBox predicted() const;
};

struct FrameDiagnostics {
  int births = 0;
  int deaths = 0;
  std::size_t gated_pairs = 0;
  std::size_t appearance_evals = 0;
  std::size_t candidate_pairs = 0;
  std::size_t n_raw = 0;
  std::size_t n_kept = 0;
  double tau_sa = 0.0;
  double tau_t = 0.0;
};

struct FrameResult {
  int frame = 0;
  std::vector<TrackBox> tracks;  // one per emitted live track
  FrameDiagnostics diagnostics;

  friend bool operator==(const FrameResult& a, const FrameResult& b);
};

/// Online tracker for one sequence. Each step() filters detections,
/// predicts every live track, associates on the gated shape/motion/
/// appearance affinity and then updates, confirms, kills and spawns tracks.
class Tracker {
 public:
  /// Throws ConfigError if cfg fails validate_config().
  explicit Tracker(TrackerConfig cfg);

  /// Processes one frame. Frames must strictly increase; skipped frame
  /// numbers are processed as empty frames. Throws std::invalid_argument on
  /// an out-of-order frame or a detection labelled with another frame.
  FrameResult step(int frame, std::span<const Detection> detections, AppearanceSource& source);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return cfg_; }
  int last_frame() const { return last_frame_; }

 private:
  FrameResult process(int frame, std::span<const Detection> detections, AppearanceSource& source);
  Track spawn(const Detection& detection, std::optional<AppearanceDescriptor> descriptor,
              int frame);

  TrackerConfig cfg_;
  SadfState sadf_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
};

/// Runs frames 1..max(frame) through a fresh tracker.
std::vector<FrameResult> run_sequence(const DetectionsByFrame& detections, AppearanceSource& source,
                                      const TrackerConfig& cfg);

/// Tracker output regrouped as result-file rows.
TrackBoxesByFrame to_track_boxes(const std::vector<FrameResult>& results);

}  // namespace hamtrack
