#include <gtest/gtest.h>

#include <filesystem>

#include "support/checks.hpp"

using namespace ongcmp;
namespace fs = std::filesystem;

namespace {

VideoClip counting_clip(std::size_t n, int size = 16) {
  VideoClip c{"src", 25.0, {}};
  for (std::size_t t = 0; t < n; ++t)
    c.frames.emplace_back(size, size, Rgb{static_cast<std::uint8_t>(t), 0, 0});
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ongcmp_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Labels, FinalIndexRoundTrip) {
  for (std::size_t i = 0; i < kNumFinal; ++i) EXPECT_EQ(EventLabel::from_final_index(i).final_index(), i);
  EXPECT_EQ(final_class_name(0), "ThreePoint-Success");
  EXPECT_EQ(final_class_name(7), "OtherTwoPoint-Failure");
  EXPECT_EQ(final_class_name(10), "Steal");
  EXPECT_THROW((EventLabel{BaseEvent::Steal, Outcome::Success}.validate()), ValidationError);
  EXPECT_THROW((EventLabel{BaseEvent::Layup, Outcome::NotApplicable}.validate()), ValidationError);
  EXPECT_EQ((EventLabel{BaseEvent::OtherTwoPoint, Outcome::Failure}.occ_index()), kMergedOccIndex);
}

TEST(Extension, AddsContextAndClampsAtEdges) {
  data::ManifestRecord r{"src", 5, 20, {BaseEvent::Layup, Outcome::Success}, data::Split::Train};
  const auto e = data::extend_event(r, 40);
  EXPECT_EQ(e.length(), 18u + 16u + 10u);
  const auto idx = e.frame_indices();
  ASSERT_EQ(idx.size(), e.length());
  EXPECT_EQ(idx.front(), 0u);  // 5 - 18 clamps to the first frame
  EXPECT_EQ(idx[13], 0u);
  EXPECT_EQ(idx[14], 1u);
  EXPECT_EQ(idx.back(), 30u);

  const auto seg = data::segment_record(r, counting_clip(40));
  EXPECT_EQ(seg.pre.size(), 18u);
  EXPECT_EQ(seg.occ.size(), 16u);
  EXPECT_EQ(seg.post.size(), 10u);
  EXPECT_EQ(seg.occ.frames.front().get(0, 0).r, 5);
  EXPECT_EQ(seg.occ.frames.back().get(0, 0).r, 20);
  EXPECT_EQ(seg.post.frames.front().get(0, 0).r, 21);

  r.end = 40;
  EXPECT_THROW(data::extend_event(r, 40), ValidationError);
  r.end = 4;
  EXPECT_THROW(data::extend_event(r, 40), ValidationError);
}

TEST(Windows, StrideAndTail) {
  using W = std::vector<std::pair<std::size_t, std::size_t>>;
  EXPECT_EQ(data::windows(16), (W{{0, 16}}));
  EXPECT_EQ(data::windows(32), (W{{0, 16}, {16, 32}}));
  EXPECT_EQ(data::windows(40), (W{{0, 16}, {16, 32}, {24, 40}}));
  EXPECT_THROW(data::windows(15), ValidationError);
}

TEST(Manifest, FormatParseRoundTrip) {
  data::ClipManifest m;
  m.records.push_back({"a_0", 3, 30, {BaseEvent::ThreePoint, Outcome::Failure}, data::Split::Train});
  m.records.push_back({"b_1", 10, 25, {BaseEvent::Steal, Outcome::NotApplicable}, data::Split::Test});
  const auto text = data::format_manifest(m);
  EXPECT_EQ(data::parse_manifest(text), m);
  EXPECT_EQ(m.count(data::Split::Test), 1u);
  EXPECT_THROW(data::parse_manifest("a_0 3 30 ThreePoint\n"), ValidationError);
}

TEST(ClipIo, SaveLoadRoundTrip) {
  const auto dir = scratch_dir("clip");
  auto clip = counting_clip(3, 8);
  clip.id = "x";
  data::save_clip(dir, clip);
  const auto back = data::load_clip(dir);
  EXPECT_EQ(back.frames, clip.frames);
  fs::remove_all(dir);
  EXPECT_THROW(data::load_clip(dir), IoError);
}

TEST(Synthetic, DeterministicAndBalanced) {
  data::SyntheticConfig cfg;
  cfg.classes = 6;
  cfg.train_per_class = 2;
  cfg.test_per_class = 1;
  cfg.width = cfg.height = 32;
  cfg.frames = 40;
  cfg.seed = 5;
  const auto a = data::gen_synthetic(cfg), b = data::gen_synthetic(cfg);
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_EQ(a.sources, b.sources);
  // outcomes alternate within a class, so both appear for every non-steal event
  std::vector<std::size_t> per_final(kNumFinal, 0);
  for (const auto& r : a.manifest.records) ++per_final[r.label.final_index()];
  for (std::size_t i = 0; i < kNumFinal; ++i) EXPECT_GT(per_final[i], 0u) << final_class_name(i);
  EXPECT_EQ(a.manifest.count(data::Split::Test), 6u);

  cfg.seed = 6;
  EXPECT_NE(data::gen_synthetic(cfg).sources, a.sources);
}

TEST(Synthetic, SaveLoadDataset) {
  data::SyntheticConfig cfg;
  cfg.classes = 2;
  cfg.train_per_class = 1;
  cfg.test_per_class = 1;
  cfg.width = cfg.height = 32;
  cfg.frames = 36;
  const auto ds = data::gen_synthetic(cfg);
  const auto dir = scratch_dir("dataset");
  data::save_dataset(dir, ds);
  const auto back = data::load_dataset(dir);
  EXPECT_EQ(back.manifest, ds.manifest);
  EXPECT_EQ(back.sources, ds.sources);
  fs::remove_all(dir);
}

TEST(Synthetic, RejectsBadConfig) {
  data::SyntheticConfig cfg;
  cfg.classes = 7;
  EXPECT_THROW(data::gen_synthetic(cfg), ValidationError);
}
