#include "hamtrack/tracker.hpp"

#include "hamtrack/association.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hamtrack {

std::optional<AppearanceDescriptor> EmbeddingAppearance::describe(const Detection& detection,
                                                                  std::size_t ordinal) {
  if (const auto* d = table_.find(detection.frame, ordinal)) return *d;
  ++misses_;
  return std::nullopt;
}

std::optional<AppearanceDescriptor> FrameHistogramAppearance::describe(const Detection& detection,
                                                                       std::size_t) {
  if (cached_frame_ != detection.frame) {
    const auto path = dir_ / fmt::format("{:06d}.ppm", detection.frame);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open frame image {}", path.string()));
    cached_ = read_ppm(in);
    cached_frame_ = detection.frame;
  }
  try {
    return histogram_from_patch(cached_, detection.bbox);
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // box entirely outside the image
  }
}

PredictedBox Track::predicted() const {
  return {motion.mean.head<2>(), std::max(shape.mean(0), 1.0), std::max(shape.mean(1), 1.0)};
}

bool operator==(const FrameResult& a, const FrameResult& b) {
  if (a.frame != b.frame || a.tracks.size() != b.tracks.size()) return false;
  for (std::size_t k = 0; k < a.tracks.size(); ++k) {
    const auto& x = a.tracks[k];
    const auto& y = b.tracks[k];
    if (x.frame != y.frame || x.id != y.id || !(x.box == y.box)) return false;
  }
  const auto& p = a.diagnostics;
  const auto& q = b.diagnostics;
  return p.births == q.births && p.deaths == q.deaths && p.gated_pairs == q.gated_pairs &&
         p.appearance_evals == q.appearance_evals && p.candidate_pairs == q.candidate_pairs &&
         p.n_raw == q.n_raw && p.n_kept == q.n_kept && p.tau_sa == q.tau_sa &&
         p.tau_t == q.tau_t;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) {
  const auto errors = validate_config(cfg_);
  if (!errors.empty()) {
    const auto& first = errors.front();
    throw ConfigError(first.substr(0, first.find(' ')), first);
  }
}

FrameResult Tracker::step(int frame, std::span<const Detection> detections,
                          AppearanceSource& source) {
  if (frame <= last_frame_) {
    throw std::invalid_argument(
        fmt::format("frame {} is not after previous frame {}", frame, last_frame_));
  }
  for (const auto& d : detections) {
    if (d.frame != frame) {
      throw std::invalid_argument(
          fmt::format("detection labelled frame {} passed for frame {}", d.frame, frame));
    }
    if (!std::isfinite(d.confidence) || !(d.bbox.w > 0.0) || !(d.bbox.h > 0.0)) {
      throw std::invalid_argument(fmt::format("malformed detection in frame {}", frame));
    }
  }
  while (last_frame_ + 1 < frame) process(last_frame_ + 1, {}, source);
  return process(frame, detections, source);
}

Track Tracker::spawn(const Detection& detection, std::optional<AppearanceDescriptor> descriptor,
                     int frame) {
  const KalmanNoise noise = noise_for_height(detection.bbox.h, cfg_);
  Track t;
  t.id = next_id_++;
  t.motion = init_motion(detection.bbox, noise);
  t.shape = init_shape(detection.bbox, noise);
  if (descriptor) t.appearance = AppearanceMemory{std::move(*descriptor), 1.0, {}};
  t.status = cfg_.confirm_hits <= 1 ? TrackStatus::kConfirmed : TrackStatus::kTentative;
  t.hit_streak = 1;
  t.last_box = detection.bbox;
  t.birth_frame = frame;
  return t;
}

FrameResult Tracker::process(int frame, std::span<const Detection> detections,
                             AppearanceSource& source) {
  last_frame_ = frame;
  FrameResult result;
  result.frame = frame;
  FrameDiagnostics& diag = result.diagnostics;

  // 1. Detection filtering. Statistics see every raw confidence.
  std::vector<double> confidences;
  confidences.reserve(detections.size());
  for (const auto& d : detections) confidences.push_back(d.confidence);
  sadf_.observe_frame(confidences, frame);
  const SadfThreshold thr = threshold(sadf_, cfg_);
  diag.tau_sa = thr.tau_sa;
  switch (cfg_.filter) {
    case FilterMode::kSadf: diag.tau_t = thr.tau_t; break;
    case FilterMode::kConst: diag.tau_t = cfg_.tau_const; break;
    case FilterMode::kNone: diag.tau_t = -std::numeric_limits<double>::infinity(); break;
  }

  std::vector<Detection> kept;
  std::vector<std::size_t> ordinals;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    if (detections[k].confidence >= diag.tau_t) {
      kept.push_back(detections[k]);
      ordinals.push_back(k);
    }
  }
  diag.n_raw = detections.size();
  diag.n_kept = kept.size();

  // Descriptors are fetched once, on first use.
  std::vector<std::optional<std::optional<AppearanceDescriptor>>> descriptors(kept.size());
  auto descriptor = [&](std::size_t j) -> const std::optional<AppearanceDescriptor>& {
    if (!descriptors[j]) descriptors[j] = source.describe(kept[j], ordinals[j]);
    return *descriptors[j];
  };

  // 2. Predict motion and shape of every live track.
  std::vector<PredictedBox> predicted;
  predicted.reserve(tracks_.size());
  for (auto& t : tracks_) {
    const KalmanNoise noise = noise_for_height(std::max(t.shape.mean(1), 1.0), cfg_);
    t.motion = predict(t.motion, noise);
    t.shape = clamp_shape(predict(t.shape, noise));
    predicted.push_back(t.predicted());
  }

  // 3-4. Gated affinity.
  const AffinityMatrix sm = build_sm_matrix(predicted, kept, cfg_);
  AppearanceFn appearance;
  if (source.provides_appearance()) {
    appearance = [&](std::size_t i, std::size_t j) {
      const auto& memory = tracks_[i].appearance;
      const auto& z = descriptor(j);
      if (!memory || !z || memory->recent.kind() != z->kind()) return 1.0;
      return cfg_.use_ham ? ham(*memory, *z, score_auto)
                          : baseline_appearance(*memory, *z, score_auto);
    };
  }
  const AffinityMatrix fused = fuse_appearance(sm, appearance);
  diag.candidate_pairs = static_cast<std::size_t>(sm.values.size());
  diag.gated_pairs = sm.gated_in();
  diag.appearance_evals = fused.appearance_evals;

  // 5. Association.
  const Assignment assignment = associate(fused, cfg_.tau_asc);

  auto emit = [&](const Track& t, const BBox& box) { result.tracks.push_back({frame, t.id, box}); };
  const bool warmup = frame <= cfg_.confirm_hits;
  const HistoryPolicy policy = history_policy(cfg_);

  // 6. Matched tracks.
  for (const Match& m : assignment.matches) {
    Track& t = tracks_[m.track];
    const Detection& d = kept[m.detection];
    const KalmanNoise noise = noise_for_height(d.bbox.h, cfg_);
    t.motion = update(t.motion, {d.bbox.center_x(), d.bbox.center_y()}, noise);
    t.shape = clamp_shape(update(t.shape, {d.bbox.w, d.bbox.h}, noise));

    if (const auto& z = descriptor(m.detection)) {
      if (t.appearance && t.appearance->recent.kind() == z->kind()) {
        const AppearanceDescriptor previous = t.appearance->recent;
        t.appearance = maybe_store_history(std::move(*t.appearance), *z, m.affinity, frame, policy);
        if (z->kind() == DescriptorKind::kHistogram && cfg_.alpha_mode == AlphaMode::kAffinity) {
          t.appearance->recent =
              update_histogram(previous, *z, std::clamp(m.affinity, 0.0, 1.0));
        }
      } else {
        t.appearance = maybe_store_history(AppearanceMemory{*z, 1.0, {}}, *z, m.affinity, frame,
                                           policy);
      }
    }

    t.last_box = d.bbox;
    ++t.hit_streak;
    t.misses = 0;
    if (t.status == TrackStatus::kTentative && t.hit_streak >= cfg_.confirm_hits) {
      t.status = TrackStatus::kConfirmed;
    }
    if (t.status == TrackStatus::kConfirmed || warmup) emit(t, d.bbox);
  }

  // 7. Missed tracks.
  for (std::size_t i : assignment.unmatched_tracks) {
    Track& t = tracks_[i];
    ++t.misses;
    t.hit_streak = 0;
    if (t.appearance) t.appearance->recent_conf *= cfg_.recent_conf_decay;
    if (t.status == TrackStatus::kTentative || t.misses >= cfg_.max_age) {
      t.status = TrackStatus::kDead;
      ++diag.deaths;
    } else if (cfg_.emit_missed) {
      const PredictedBox p = t.predicted();
      emit(t, BBox::from_center(p.center.x(), p.center.y(), p.w, p.h));
    }
  }
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::kDead; });

  // 8. Births.
  for (std::size_t j : assignment.unmatched_detections) {
    tracks_.push_back(spawn(kept[j], descriptor(j), frame));
    ++diag.births;
    const Track& t = tracks_.back();
    if (t.status == TrackStatus::kConfirmed || warmup) emit(t, kept[j].bbox);
  }

  // 9. Output.
  std::sort(result.tracks.begin(), result.tracks.end(),
            [](const TrackBox& a, const TrackBox& b) { return a.id < b.id; });
  return result;
}

std::vector<FrameResult> run_sequence(const DetectionsByFrame& detections, AppearanceSource& source,
                                      const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  std::vector<FrameResult> results;
  const int last = detections.empty() ? 0 : detections.rbegin()->first;
  results.reserve(static_cast<std::size_t>(last));
  for (int frame = 1; frame <= last; ++frame) {
    const auto it = detections.find(frame);
    if (it == detections.end()) {
      results.push_back(tracker.step(frame, {}, source));
    } else {
      results.push_back(tracker.step(frame, it->second, source));
    }
  }
  return results;
}

TrackBoxesByFrame to_track_boxes(const std::vector<FrameResult>& results) {
  TrackBoxesByFrame out;
  for (const auto& r : results) {
    if (!r.tracks.empty()) out[r.frame] = r.tracks;
  }
  return out;
}

}  // namespace hamtrack
