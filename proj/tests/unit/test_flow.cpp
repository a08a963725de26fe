#include <gtest/gtest.h>

#include <filesystem>

#include "support/checks.hpp"

using namespace ongcmp;

TEST(ColorWheel, HasFiftyFiveHuesStartingAtRed) {
  const auto& w = flow::color_wheel();
  ASSERT_EQ(w.size(), 55u);
  EXPECT_EQ(w[0], (std::array<double, 3>{255, 0, 0}));
  EXPECT_EQ(w[15], (std::array<double, 3>{255, 255, 0}));  // yellow after the red-yellow ramp
  EXPECT_EQ(w[21], (std::array<double, 3>{0, 255, 0}));
  EXPECT_EQ(w[25], (std::array<double, 3>{0, 255, 255}));
  EXPECT_EQ(w[36], (std::array<double, 3>{0, 0, 255}));
  EXPECT_EQ(w[49], (std::array<double, 3>{255, 0, 255}));
}

TEST(ColorWheel, DirectionsAndSaturation) {
  // rightward motion lands on the last hue (next to red), leftward on cyan
  EXPECT_EQ(flow::flow_color(1, 0), (Rgb{255, 0, 43}));
  EXPECT_EQ(flow::flow_color(-1, 0), (Rgb{0, 209, 255}));
  const Rgb right = flow::flow_color(1, 0);
  // radius scales toward white and is clamped at 1
  EXPECT_EQ(flow::flow_color(-0.0001, 0), (Rgb{254, 254, 255}));
  EXPECT_EQ(flow::flow_color(-5, 0), flow::flow_color(-1, 0));
  flow::FlowField f(2, 1);
  f.u[1] = 2.f;
  const auto img = flow::colorize_flow(f, 2.0);
  EXPECT_EQ(img.get(0, 0), (Rgb{255, 255, 255}));
  EXPECT_EQ(img.get(1, 0), right);
  EXPECT_THROW(flow::colorize_flow(f, 0.0), ValidationError);
}

TEST(Flow, IdenticalFramesGiveExactlyZero) {
  Rng rng(4);
  const checks::Texture tex(rng);
  const auto img = tex.render(48, 40);
  const auto f = flow::compute_flow(img, img, flow::SolverConfig{});
  for (std::size_t i = 0; i < f.size(); ++i) {
    ASSERT_EQ(f.u[i], 0.f);
    ASSERT_EQ(f.v[i], 0.f);
  }
}

TEST(Flow, RecoversKnownShift) {
  for (std::uint64_t s = 100; s < 104; ++s) {
    const auto c = checks::shift_case(s);
    const auto f = flow::compute_flow(c.a, c.b, flow::SolverConfig{});
    EXPECT_LE(checks::endpoint_error(f, c.dx, c.dy, 0), 0.5) << "seed " << s;
  }
}

TEST(Flow, EnergyNeverIncreases) {
  const auto c = checks::shift_case(7);
  flow::SolverConfig cfg;
  cfg.track_energy = true;
  flow::SolverDiagnostics diag;
  flow::compute_flow(c.a, c.b, cfg, &diag);
  ASSERT_FALSE(diag.traces.empty());
  for (const auto& t : diag.traces) {
    ASSERT_EQ(t.energy.size(), static_cast<std::size_t>(cfg.iterations) + 1);
    for (std::size_t k = 1; k < t.energy.size(); ++k) EXPECT_LE(t.energy[k], t.energy[k - 1]);
  }
}

TEST(Flow, AutoLevels) {
  EXPECT_EQ(flow::auto_levels(64, 64), 3);
  EXPECT_EQ(flow::auto_levels(128, 96), 3);
  EXPECT_EQ(flow::auto_levels(256, 256), 5);
  EXPECT_EQ(flow::auto_levels(16, 16), 1);
}

TEST(Flow, RejectsBadInput) {
  RgbImage a(32, 32), b(32, 31);
  EXPECT_THROW(flow::compute_flow(a, b, flow::SolverConfig{}), ValidationError);
  flow::SolverConfig bad;
  bad.alpha = 0;
  EXPECT_THROW(flow::compute_flow(a, a, bad), ValidationError);
}

TEST(Flow, SequenceHasOneImageFewerThanFrames) {
  Rng rng(2);
  const checks::Texture tex(rng);
  VideoClip clip{"c", 25.0, {}};
  for (int t = 0; t < 4; ++t) clip.frames.push_back(tex.render(32, 32, 0.5 * t, 0));
  const auto imgs = flow::flow_sequence(clip, flow::SolverConfig{});
  ASSERT_EQ(imgs.size(), 3u);
  EXPECT_EQ(imgs[0].width(), 32);
}

TEST(Flow, FloRoundTrip) {
  flow::FlowField f(3, 2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = 0.25f * static_cast<float>(i);
    f.v[i] = -1.5f + static_cast<float>(i);
  }
  const auto path = (std::filesystem::temp_directory_path() / "ongcmp_roundtrip.flo").string();
  flow::write_flo(path, f);
  EXPECT_EQ(flow::read_flo(path), f);
  std::filesystem::remove(path);
  EXPECT_THROW(flow::read_flo("/nonexistent.flo"), IoError);
}
