#include "hamtrack/tracker.hpp"

#include "hamtrack/eval.hpp"
#include "hamtrack/synthgen.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace hamtrack;

namespace {

Detection det(int frame, double cx, double cy, double conf = 50.0, double w = 30, double h = 60) {
  Detection d;
  d.frame = frame;
  d.bbox = BBox::from_center(cx, cy, w, h);
  d.confidence = conf;
  return d;
}

std::set<int> ids_in(const std::vector<FrameResult>& results) {
  std::set<int> ids;
  for (const auto& r : results)
    for (const auto& t : r.tracks) ids.insert(t.id);
  return ids;
}

class CountingSource final : public AppearanceSource {
 public:
  std::optional<AppearanceDescriptor> describe(const Detection& d, std::size_t) override {
    seen.push_back(d.confidence);
    return AppearanceDescriptor::embedding({1.0, 0.0});
  }
  std::vector<double> seen;
};

ScenarioSpec single_object(int frames) {
  ScenarioSpec spec;
  spec.n_frames = frames;
  spec.objects.push_back({{{1, 50, 200}, {frames, 50 + 3.0 * (frames - 1), 200}}, 30, 60});
  return spec;
}

}  // namespace

TEST(Tracker, InvalidConfigThrows) {
  TrackerConfig cfg;
  cfg.beta = 2;
  EXPECT_THROW(Tracker{cfg}, ConfigError);
}

TEST(Tracker, EmptyStreamGivesEmptyResults) {
  Tracker tracker{TrackerConfig{}};
  NoAppearance none;
  for (int f = 1; f <= 20; ++f) {
    const auto r = tracker.step(f, {}, none);
    EXPECT_TRUE(r.tracks.empty());
    EXPECT_EQ(r.diagnostics.births, 0);
  }
  EXPECT_TRUE(tracker.tracks().empty());
}

TEST(Tracker, RejectsOutOfOrderAndMislabelledFrames) {
  Tracker tracker{TrackerConfig{}};
  NoAppearance none;
  tracker.step(3, {}, none);
  EXPECT_THROW(tracker.step(3, {}, none), std::invalid_argument);
  const std::vector<Detection> wrong{det(9, 10, 10)};
  EXPECT_THROW(tracker.step(5, wrong, none), std::invalid_argument);
}

TEST(Tracker, SkippedFramesAreProcessedAsEmpty) {
  Tracker tracker{TrackerConfig{}};
  NoAppearance none;
  tracker.step(1, {}, none);
  tracker.step(4, {}, none);
  EXPECT_EQ(tracker.last_frame(), 4);
}

TEST(Tracker, ConfirmationAfterThreeHitsOutsideWarmup) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  Tracker tracker{cfg};
  NoAppearance none;
  for (int f = 1; f <= 9; ++f) tracker.step(f, {}, none);
  std::vector<std::size_t> emitted;
  for (int f = 10; f <= 13; ++f) {
    const std::vector<Detection> d{det(f, 100 + 2 * f, 100)};
    emitted.push_back(tracker.step(f, d, none).tracks.size());
  }
  EXPECT_EQ(emitted, (std::vector<std::size_t>{0, 0, 1, 1}));
  ASSERT_EQ(tracker.tracks().size(), 1u);
  EXPECT_EQ(tracker.tracks()[0].status, TrackStatus::kConfirmed);
}

TEST(Tracker, WarmupEmitsTentativeTracks) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  Tracker tracker{cfg};
  NoAppearance none;
  const std::vector<Detection> d{det(1, 100, 100)};
  EXPECT_EQ(tracker.step(1, d, none).tracks.size(), 1u);
}

TEST(Tracker, TentativeTrackDiesOnFirstMiss) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  Tracker tracker{cfg};
  NoAppearance none;
  for (int f = 1; f <= 5; ++f) tracker.step(f, {}, none);
  const std::vector<Detection> d{det(6, 100, 100)};
  tracker.step(6, d, none);
  const auto r = tracker.step(7, {}, none);
  EXPECT_EQ(r.diagnostics.deaths, 1);
  EXPECT_TRUE(tracker.tracks().empty());
}

TEST(Tracker, ConfirmedTrackDiesAfterMaxAgeMisses) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  cfg.max_age = 4;
  Tracker tracker{cfg};
  NoAppearance none;
  for (int f = 1; f <= 5; ++f) {
    const std::vector<Detection> d{det(f, 100 + f, 100)};
    tracker.step(f, d, none);
  }
  for (int f = 6; f <= 8; ++f) {
    tracker.step(f, {}, none);
    ASSERT_EQ(tracker.tracks().size(), 1u) << f;
  }
  EXPECT_EQ(tracker.step(9, {}, none).diagnostics.deaths, 1);
  EXPECT_TRUE(tracker.tracks().empty());
}

TEST(Tracker, EmitMissedOutputsPredictedBox) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  cfg.emit_missed = true;
  Tracker tracker{cfg};
  NoAppearance none;
  for (int f = 1; f <= 6; ++f) {
    const std::vector<Detection> d{det(f, 100 + 4 * f, 100)};
    tracker.step(f, d, none);
  }
  const auto r = tracker.step(7, {}, none);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_GT(r.tracks[0].box.center_x(), 124.0);

  cfg.emit_missed = false;
  Tracker quiet{cfg};
  for (int f = 1; f <= 6; ++f) {
    const std::vector<Detection> d{det(f, 100 + 4 * f, 100)};
    quiet.step(f, d, none);
  }
  EXPECT_TRUE(quiet.step(7, {}, none).tracks.empty());
}

TEST(Tracker, DescriptorsOnlyForSurvivingDetections) {
  TrackerConfig cfg;
  cfg.filter = FilterMode::kConst;
  cfg.tau_const = 30;
  Tracker tracker{cfg};
  CountingSource source;
  for (int f = 1; f <= 10; ++f) {
    const std::vector<Detection> d{det(f, 100 + f, 100, 50.0), det(f, 400, 300, 10.0)};
    tracker.step(f, d, source);
  }
  ASSERT_FALSE(source.seen.empty());
  for (double c : source.seen) EXPECT_EQ(c, 50.0);
  EXPECT_LE(source.seen.size(), 10u);
}

TEST(Tracker, SingleNoiseFreeObjectKeepsOneId) {
  const auto sc = generate(single_object(300));
  InlineAppearance source;
  const auto results = run_sequence(sc.detections, source, TrackerConfig{});
  EXPECT_EQ(ids_in(results).size(), 1u);
  const auto r = evaluate(sc.gt, to_track_boxes(results), 0.5);
  EXPECT_EQ(r.idsw, 0);
  EXPECT_DOUBLE_EQ(r.mota, 1.0);
}

TEST(Tracker, ShortOcclusionRetainsId) {
  auto spec = single_object(60);
  spec.occlusions.push_back({0, 20, 22, std::nullopt});
  const auto sc = generate(spec);
  for (int f = 20; f <= 22; ++f) EXPECT_FALSE(sc.detections.count(f));
  InlineAppearance source;
  const auto results = run_sequence(sc.detections, source, TrackerConfig{});
  EXPECT_EQ(ids_in(results).size(), 1u);
  const auto r = evaluate(sc.gt, to_track_boxes(results), 0.5);
  EXPECT_EQ(r.idsw, 0);
  EXPECT_EQ(r.fn, 0);
}

TEST(Tracker, FiveObjectsEachCoveredByOneId) {
  const auto sc = generate(make_lanes_scenario(3, 5, 150));
  InlineAppearance source;
  const auto results = run_sequence(sc.detections, source, TrackerConfig{});
  std::map<int, std::set<int>> by_gt;
  const auto hyp = to_track_boxes(results);
  for (const auto& [f, gt_rows] : sc.gt) {
    const auto it = hyp.find(f);
    ASSERT_NE(it, hyp.end());
    for (const auto& g : gt_rows)
      for (const auto& h : it->second)
        if (iou(g.box, h.box) >= 0.5) by_gt[g.id].insert(h.id);
  }
  ASSERT_EQ(by_gt.size(), 5u);
  std::set<int> all;
  for (const auto& [id, hs] : by_gt) {
    EXPECT_EQ(hs.size(), 1u) << "gt " << id;
    all.insert(hs.begin(), hs.end());
  }
  EXPECT_EQ(all.size(), 5u);
}

TEST(Tracker, StepConcatenationEqualsRunSequence) {
  auto spec = make_crossing_scenario(4, 2, 60);
  const auto sc = generate(spec);
  InlineAppearance a, b;
  const auto batch = run_sequence(sc.detections, a, TrackerConfig{});
  Tracker tracker{TrackerConfig{}};
  std::vector<FrameResult> stepped;
  for (int f = 1; f <= sc.detections.rbegin()->first; ++f) {
    const auto it = sc.detections.find(f);
    stepped.push_back(it == sc.detections.end() ? tracker.step(f, {}, b)
                                                : tracker.step(f, it->second, b));
  }
  EXPECT_EQ(stepped, batch);
}

TEST(Tracker, OnlineCausality) {
  const auto sc = generate(make_crossing_scenario(5, 2, 60));
  InlineAppearance a, b;
  const auto full = run_sequence(sc.detections, a, TrackerConfig{});
  auto truncated = sc.detections;
  for (auto it = truncated.lower_bound(31); it != truncated.end();) it = truncated.erase(it);
  // A different future must not change the past.
  Detection extra = sc.detections.at(40).front();
  extra.bbox = BBox(10, 10, 50, 50);
  truncated[40].push_back(extra);
  const auto partial = run_sequence(truncated, b, TrackerConfig{});
  for (int f = 0; f < 30; ++f) EXPECT_EQ(partial[f], full[f]) << "frame " << f + 1;
}

TEST(Tracker, IdsUniqueAndCountersExclusive) {
  const auto sc = generate(make_crossing_scenario(6, 3, 80));
  TrackerConfig cfg;
  cfg.filter = FilterMode::kNone;
  Tracker tracker{cfg};
  InlineAppearance source;
  std::set<int> seen;
  int max_id = 0;
  for (int f = 1; f <= 80; ++f) {
    const auto it = sc.detections.find(f);
    const auto r = it == sc.detections.end() ? tracker.step(f, {}, source)
                                             : tracker.step(f, it->second, source);
    std::set<int> frame_ids;
    for (const auto& t : r.tracks) EXPECT_TRUE(frame_ids.insert(t.id).second);
    for (const auto& t : tracker.tracks()) {
      EXPECT_FALSE(t.hit_streak > 0 && t.misses > 0);
      EXPECT_NE(t.status, TrackStatus::kDead);
      max_id = std::max(max_id, t.id);
    }
    std::set<int> live;
    for (const auto& t : tracker.tracks()) EXPECT_TRUE(live.insert(t.id).second);
    EXPECT_EQ(r.diagnostics.appearance_evals, r.diagnostics.gated_pairs);
  }
  EXPECT_GE(max_id, 6);
}

TEST(Tracker, HamSwitchWithoutHistoryMatchesBaseline) {
  const auto sc = generate(make_crossing_scenario(7, 3, 80));
  TrackerConfig off;
  off.use_ham = false;
  TrackerConfig on;
  on.tau_conf = 1.0;  // nothing is ever admitted into the history
  InlineAppearance a, b;
  EXPECT_EQ(run_sequence(sc.detections, a, off), run_sequence(sc.detections, b, on));
}

TEST(Tracker, HamSwitchIsObservable) {
  bool differs = false;
  for (std::uint64_t seed = 1; seed <= 10 && !differs; ++seed) {
    const auto sc = generate(make_crossing_scenario(seed, 3, 80));
    TrackerConfig on, off;
    off.use_ham = false;
    InlineAppearance a, b;
    differs = run_sequence(sc.detections, a, on) != run_sequence(sc.detections, b, off);
  }
  EXPECT_TRUE(differs);
}

TEST(Tracker, Deterministic) {
  const auto sc = generate(make_crossing_scenario(8, 3, 80));
  InlineAppearance a, b;
  EXPECT_EQ(run_sequence(sc.detections, a, TrackerConfig{}),
            run_sequence(sc.detections, b, TrackerConfig{}));
}

TEST(EmbeddingAppearance, CountsMisses) {
  EmbeddingTable table(2);
  table.insert(1, 0, AppearanceDescriptor::embedding({1, 0}));
  EmbeddingAppearance source(std::move(table));
  Detection d = det(1, 10, 10);
  EXPECT_TRUE(source.describe(d, 0).has_value());
  EXPECT_FALSE(source.describe(d, 1).has_value());
  EXPECT_EQ(source.misses(), 1u);
}
