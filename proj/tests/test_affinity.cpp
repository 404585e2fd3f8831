#include "hamtrack/affinity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hamtrack;

namespace {

Detection det_at(double cx, double cy, double w, double h) {
  Detection d;
  d.bbox = BBox::from_center(cx, cy, w, h);
  d.confidence = 1.0;
  return d;
}

PredictedBox pred_at(double cx, double cy, double w, double h) {
  return {Eigen::Vector2d(cx, cy), w, h};
}

// Formula oracle written directly from the definitions, no shared code.
double ref_shape(double pw, double ph, double zw, double zh, double xi) {
  return std::exp(-xi * (std::fabs(ph - zh) / (ph + zh) + std::fabs(pw - zw) / (pw + zw)));
}
double ref_motion(double px, double py, double zx, double zy, const Eigen::Matrix2d& s,
                  double eta) {
  const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  const double dx = zx - px, dy = zy - py;
  const double q = (s(1, 1) * dx * dx - (s(0, 1) + s(1, 0)) * dx * dy + s(0, 0) * dy * dy) / det;
  return std::exp(-eta * q);
}

}  // namespace

TEST(ShapeAffinity, Examples) {
  EXPECT_DOUBLE_EQ(shape_affinity(30, 60, BBox(0, 0, 30, 60), 1.0), 1.0);
  EXPECT_NEAR(shape_affinity(20, 100, BBox(0, 0, 20, 50), 1.0), 0.716531310573789250, 1e-14);
  EXPECT_NEAR(shape_affinity(40, 70, BBox(0, 0, 60, 70), 1.0), 0.818730753077981859, 1e-14);
  EXPECT_THROW(shape_affinity(0, 10, BBox(0, 0, 1, 1), 1.0), std::invalid_argument);
}

TEST(MotionAffinity, Examples) {
  const Eigen::Matrix2d sigma = Eigen::Vector2d(100, 100).asDiagonal();
  EXPECT_DOUBLE_EQ(motion_affinity({5, 5}, {5, 5}, sigma, 0.5), 1.0);
  EXPECT_NEAR(motion_affinity({0, 0}, {10, 0}, sigma, 0.5), 0.606530659712633424, 1e-14);
  EXPECT_THROW(motion_affinity({0, 0}, {1, 0}, Eigen::Matrix2d::Zero(), 0.5),
               std::invalid_argument);
}

TEST(MotionAffinity, FullCovarianceMatchesOracle) {
  Eigen::Matrix2d sigma;
  sigma << 400, 120, 120, 900;
  EXPECT_NEAR(motion_affinity({10, 20}, {35, -4}, sigma, 0.7),
              ref_motion(10, 20, 35, -4, sigma, 0.7), 1e-14);
}

TEST(SmMatrix, DegenerateDimensions) {
  TrackerConfig cfg;
  std::vector<PredictedBox> tracks{pred_at(0, 0, 10, 10)};
  std::vector<Detection> none;
  auto m = build_sm_matrix(tracks, none, cfg);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(m.cols(), 0);
  m = build_sm_matrix({}, std::vector<Detection>{det_at(0, 0, 5, 5)}, cfg);
  EXPECT_EQ(m.rows(), 0);
  EXPECT_EQ(m.cols(), 1);
  EXPECT_EQ(m.gated_in(), 0u);
}

TEST(SmMatrix, PerfectPairPassesGate) {
  TrackerConfig cfg;
  cfg.tau_asc = 0.999;
  const std::vector<PredictedBox> tracks{pred_at(50, 60, 20, 40)};
  const std::vector<Detection> dets{det_at(50, 60, 20, 40)};
  const auto m = build_sm_matrix(tracks, dets, cfg);
  EXPECT_DOUBLE_EQ(m.values(0, 0), 1.0);
  EXPECT_TRUE(m.gate_mask(0, 0));
}

TEST(SmMatrix, GateIsStrict) {
  // Pure motion cue tuned so the product is exactly exp(-eta*q).
  TrackerConfig cfg;
  cfg.eta = 1.0;
  cfg.sigma = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  const double d = std::sqrt(-std::log(0.04));
  const std::vector<PredictedBox> tracks{pred_at(0, 0, 10, 10)};
  const std::vector<Detection> dets{det_at(d, 0, 10, 10)};
  cfg.tau_asc = 0.05;
  auto m = build_sm_matrix(tracks, dets, cfg);
  EXPECT_NEAR(m.values(0, 0), 0.04, 1e-12);
  EXPECT_FALSE(m.gate_mask(0, 0));
  cfg.tau_asc = 0.03;
  m = build_sm_matrix(tracks, dets, cfg);
  EXPECT_TRUE(m.gate_mask(0, 0));
}

TEST(Fuse, AllGatedOutGivesZeroAndNoEvals) {
  AffinityMatrix sm;
  sm.values = Eigen::MatrixXd::Constant(2, 3, 0.01);
  sm.gate_mask = BoolMatrix::Constant(2, 3, false);
  int calls = 0;
  const auto out = fuse_appearance(sm, [&](std::size_t, std::size_t) {
    ++calls;
    return 1.0;
  });
  EXPECT_EQ(calls, 0);
  EXPECT_EQ(out.appearance_evals, 0u);
  EXPECT_TRUE(out.values.isZero());
}

TEST(Fuse, SinglePairArithmetic) {
  AffinityMatrix sm;
  sm.values = Eigen::MatrixXd::Constant(1, 1, 0.5);
  sm.gate_mask = BoolMatrix::Constant(1, 1, true);
  const auto out = fuse_appearance(sm, [](std::size_t, std::size_t) { return 0.6; });
  EXPECT_NEAR(out.values(0, 0), 0.30, 1e-15);
  EXPECT_EQ(out.appearance_evals, 1u);
}

TEST(Fuse, NullCallbackMeansShapeMotionOnly) {
  AffinityMatrix sm;
  sm.values = Eigen::MatrixXd::Constant(1, 2, 0.5);
  sm.gate_mask = BoolMatrix::Constant(1, 2, true);
  sm.gate_mask(0, 1) = false;
  const auto out = fuse_appearance(sm, AppearanceFn{});
  EXPECT_DOUBLE_EQ(out.values(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.values(0, 1), 0.0);
  EXPECT_EQ(out.appearance_evals, 0u);
}

TEST(Fuse, OutOfRangeAppearanceThrows) {
  AffinityMatrix sm;
  sm.values = Eigen::MatrixXd::Constant(1, 1, 0.5);
  sm.gate_mask = BoolMatrix::Constant(1, 1, true);
  EXPECT_THROW(fuse_appearance(sm, [](std::size_t, std::size_t) { return 1.5; }),
               std::runtime_error);
}

TEST(FuseProperty, ZeroGateEqualsUngatedReference) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 600.0), size(10.0, 120.0), u(0.0, 1.0);
  TrackerConfig cfg;
  cfg.tau_asc = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nx = rng() % 8, nz = rng() % 8;
    std::vector<PredictedBox> tracks;
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < nx; ++i) tracks.push_back(pred_at(pos(rng), pos(rng), size(rng), size(rng)));
    for (std::size_t j = 0; j < nz; ++j) dets.push_back(det_at(pos(rng), pos(rng), size(rng), size(rng)));
    Eigen::MatrixXd app(nx, nz);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nz; ++j) app(i, j) = u(rng);

    const auto sm = build_sm_matrix(tracks, dets, cfg);
    const auto fused = fuse_appearance(sm, [&](std::size_t i, std::size_t j) { return app(i, j); });
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < nz; ++j) {
        const auto& t = tracks[i];
        const auto& b = dets[j].bbox;
        const double ref = ref_shape(t.w, t.h, b.w, b.h, cfg.xi) *
                           ref_motion(t.center.x(), t.center.y(), b.center_x(), b.center_y(),
                                      cfg.sigma, cfg.eta) *
                           app(i, j);
        // The ungated reference equals the gated matrix wherever the shape-
        // motion product is positive, which is every cell at tau_asc = 0
        // unless it underflows.
        if (sm.values(i, j) > 0.0) {
          ASSERT_EQ(fused.values(i, j), sm.values(i, j) * app(i, j));
          ASSERT_NEAR(fused.values(i, j), ref, 1e-12);
        } else {
          ASSERT_EQ(fused.values(i, j), 0.0);
          ASSERT_NEAR(ref, 0.0, 1e-300);
        }
      }
    }
  }
}

TEST(FuseProperty, CallbackInvokedOncePerGatedCell) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0.0, 400.0);
  TrackerConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PredictedBox> tracks;
    std::vector<Detection> dets;
    for (int i = 0; i < 6; ++i) tracks.push_back(pred_at(pos(rng), pos(rng), 30, 60));
    for (int j = 0; j < 7; ++j) dets.push_back(det_at(pos(rng), pos(rng), 30, 60));
    const auto sm = build_sm_matrix(tracks, dets, cfg);
    Eigen::MatrixXi calls = Eigen::MatrixXi::Zero(6, 7);
    const auto fused = fuse_appearance(sm, [&](std::size_t i, std::size_t j) {
      ++calls(i, j);
      return 0.5;
    });
    EXPECT_EQ(fused.appearance_evals, sm.gated_in());
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 7; ++j) ASSERT_EQ(calls(i, j), sm.gate_mask(i, j) ? 1 : 0);
  }
}

TEST(FuseMemories, HamAndBaselineDifferWithHistory) {
  AffinityMatrix sm;
  sm.values = Eigen::MatrixXd::Constant(1, 1, 0.8);
  sm.gate_mask = BoolMatrix::Constant(1, 1, true);
  AppearanceMemory mem{AppearanceDescriptor::embedding({1, 0}), 0.2};
  mem.history.push_back({AppearanceDescriptor::embedding({0, 1}), 0.9, 1});
  const auto z = AppearanceDescriptor::embedding({0, 1});
  const AppearanceMemory* tracks[] = {&mem};
  const AppearanceDescriptor* dets[] = {&z};
  const auto with = fuse_appearance(sm, tracks, dets, score_embedding, true);
  const auto without = fuse_appearance(sm, tracks, dets, score_embedding, false);
  EXPECT_NEAR(without.values(0, 0), 0.8 * 0.5, 1e-15);
  EXPECT_NEAR(with.values(0, 0), 0.8 * (0.2 * 0.5 + 0.8 * 1.0), 1e-15);
}
