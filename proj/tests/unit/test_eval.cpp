#include <gtest/gtest.h>

#include <filesystem>

#include "support/checks.hpp"

using namespace ongcmp;

TEST(Confusion, MatchesTallyOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<eval::LabelPair> pairs;
    for (int i = 0; i < 60; ++i) pairs.push_back({rng.index(4), rng.index(4)});
    const auto m = eval::accuracy_report(pairs, {"a", "b", "c", "d"});
    EXPECT_EQ(m.counts, checks::tally(pairs, 4));
    EXPECT_EQ(m.total(), 60u);
  }
}

TEST(Confusion, AccuracyDefinitions) {
  const auto m = eval::accuracy_report({{0, 0}, {0, 1}, {1, 1}, {1, 1}, {1, 0}}, {"x", "y", "z"});
  EXPECT_DOUBLE_EQ(*m.class_accuracy(0), 0.5);
  EXPECT_DOUBLE_EQ(*m.class_accuracy(1), 2.0 / 3.0);
  EXPECT_FALSE(m.class_accuracy(2).has_value());
  EXPECT_DOUBLE_EQ(m.average_accuracy(), (0.5 + 2.0 / 3.0) / 2);
  EXPECT_DOUBLE_EQ(m.overall_accuracy(), 0.6);
  EXPECT_THROW(eval::accuracy_report({{0, 3}}, {"x", "y"}), ValidationError);
  EXPECT_THROW(eval::accuracy_report({}, {"x"}), ValidationError);
}

TEST(Confusion, CsvAndPgm) {
  const auto m = eval::accuracy_report({{0, 0}, {1, 0}}, {"x", "y"});
  EXPECT_EQ(eval::confusion_csv(m), "truth,x,y,accuracy\nx,1,0,1.000000\ny,1,0,0.000000\n");
  const auto path = (std::filesystem::temp_directory_path() / "ongcmp_cm.pgm").string();
  eval::write_confusion_pgm(path, m, 4);
  EXPECT_GT(std::filesystem::file_size(path), 8u * 8u);
  std::filesystem::remove(path);
}

TEST(Map, MatchesBruteForceOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.index(10);
    const auto clips = checks::random_scored(rng, 5 + rng.index(40), classes);
    const auto r = eval::mean_average_precision(clips, classes);
    EXPECT_NEAR(r.map, checks::brute_force_map(clips, classes), 1e-12);
    for (std::size_t c = 0; c < classes; ++c) {
      const double oracle = checks::brute_force_ap(clips, c);
      if (oracle < 0)
        EXPECT_FALSE(r.per_class[c].has_value());
      else
        EXPECT_NEAR(*r.per_class[c], oracle, 1e-12);
    }
  }
}

TEST(Map, HandComputedExample) {
  // class 0: a(0.9, pos) b(0.8, neg) c(0.7, pos) -> AP = (1 + 2/3) / 2
  // class 1: c(0.3, neg) b(0.2, pos) a(0.1, neg) -> AP = 1/2
  std::vector<eval::ScoredClip> clips{{"a", {0.9, 0.1}, 0}, {"b", {0.8, 0.2}, 1}, {"c", {0.7, 0.3}, 0}};
  const auto r = eval::mean_average_precision(clips, 2);
  EXPECT_NEAR(*r.per_class[0], (1.0 + 2.0 / 3.0) / 2, 1e-15);
  EXPECT_NEAR(*r.per_class[1], 0.5, 1e-15);
  // equal confidences are ordered by id
  std::vector<eval::ScoredClip> tie{{"z", {0.5, 0.5}, 1}, {"a", {0.5, 0.5}, 0}};
  EXPECT_NEAR(*eval::mean_average_precision(tie, 2).per_class[0], 1.0, 1e-15);
  EXPECT_NEAR(*eval::mean_average_precision(tie, 2).per_class[1], 0.5, 1e-15);
  clips[0].confidence[0] = NAN;
  EXPECT_THROW(eval::mean_average_precision(clips, 2), ValidationError);
}

TEST(Correlation, MatchesPairwiseOracle) {
  Rng rng(5);
  std::vector<eval::LabeledFeature> feats;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> f(4);
    for (auto& v : f) v = rng.uniform(0.1, 1);
    feats.push_back({f, static_cast<std::size_t>(i % 3)});
  }
  const auto m = eval::correlate_features(feats, {"a", "b", "c"});
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      double s = 0;
      int n = 0;
      for (std::size_t i = 0; i < feats.size(); ++i)
        for (std::size_t j = 0; j < feats.size(); ++j) {
          if (i == j || feats[i].label != a || feats[j].label != b) continue;
          double d = 0, ni = 0, nj = 0;
          for (int k = 0; k < 4; ++k) {
            d += feats[i].feature[k] * feats[j].feature[k];
            ni += feats[i].feature[k] * feats[i].feature[k];
            nj += feats[j].feature[k] * feats[j].feature[k];
          }
          s += d / std::sqrt(ni * nj);
          ++n;
        }
      EXPECT_NEAR(m.sim[a][b], 100 * s / n, 1e-9);
    }
  feats.push_back({{0, 0, 0, 0}, 0});
  EXPECT_THROW(eval::correlate_features(feats, {"a", "b", "c"}), NumericError);
}

TEST(Correlation, NeedsTwoPerClass) {
  std::vector<eval::LabeledFeature> feats{{{1, 0}, 0}, {{0, 1}, 1}, {{0, 2}, 1}};
  EXPECT_THROW(eval::correlate_features(feats, {"a", "b"}), ValidationError);
}

TEST(Timing, MeansAndFormat) {
  std::vector<eval::PhaseSample> s{{0.1, 0.0, 0.2, 1.0, 1.3}, {0.3, 0.2, 0.0, 1.0, 1.5}};
  const auto r = eval::timing_report(s, true);
  EXPECT_EQ(r.clips, 2u);
  EXPECT_EQ(r.pre_runs, 1u);
  EXPECT_EQ(r.post_runs, 1u);
  EXPECT_NEAR(r.occ, 0.2, 1e-15);
  EXPECT_NEAR(r.total, 0.4, 1e-12);  // flow taken out
  EXPECT_NEAR(eval::timing_report(s, false).total, 1.4, 1e-12);
  const auto text = eval::format_timing(r);
  EXPECT_NE(text.find("Time cost for different phases"), std::string::npos);
  EXPECT_NE(text.find("Event-occ"), std::string::npos);
  EXPECT_NE(text.find("Post-event classification"), std::string::npos);
}
