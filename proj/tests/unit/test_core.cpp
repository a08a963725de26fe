#include <gtest/gtest.h>

#include <cmath>

#include "support/checks.hpp"

using namespace ongcmp;

TEST(Tensor, ShapeAndIndexing) {
  Tensor<float> t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.size(), 24u);
  t.at(1, 2, 3) = 7.f;
  EXPECT_EQ(t[23], 7.f);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ValidationError);
}

TEST(Tensor, GradBuffer) {
  Tensor<double> t({3});
  EXPECT_FALSE(t.has_grad());
  t.enable_grad();
  t.grad()[1] = 2.0;
  t.zero_grad();
  EXPECT_EQ(t.grad()[1], 0.0);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = Rng::stream(7, "data"), b = Rng::stream(7, "data"), c = Rng::stream(7, "init");
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.index(7);
    EXPECT_LT(k, 7u);
    const double u = r.uniform(-2, 5);
    EXPECT_GE(u, -2);
    EXPECT_LT(u, 5);
  }
}

TEST(Config, ParseOverrideAndErrors) {
  auto c = Config::parse("# comment\nseed = 4\n train.lr=0.5 # trailing\nbackbone.widths = 8, 16,32\n");
  EXPECT_EQ(c.get("seed", 0), 4);
  EXPECT_DOUBLE_EQ(c.get("train.lr", 0.0), 0.5);
  EXPECT_EQ(c.get_list("backbone.widths", {}), (std::vector<int>{8, 16, 32}));
  EXPECT_EQ(c.get("missing", 9), 9);
  c.set("seed", "5");
  EXPECT_EQ(c.dump(), "backbone.widths = 8, 16,32\nseed = 5\ntrain.lr = 0.5\n");
  EXPECT_THROW(Config::parse("novalue\n"), ValidationError);
  EXPECT_THROW(Config::parse("x = abc").get("x", 1), ValidationError);
  EXPECT_THROW(Config::load("/nonexistent/file.conf"), IoError);
}

TEST(Softmax, MatchesClosedForm) {
  Tensor<double> s({3}, std::vector<double>{1.0, 2.0, 3.0});
  const auto p = nn::softmax(s);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(p[2], std::exp(3.0) / z, 1e-15);
  // shift invariance and no overflow for large scores
  Tensor<double> big({3}, std::vector<double>{1001.0, 1002.0, 1003.0});
  const auto q = nn::softmax(big);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(q[i], p[i], 1e-12);
}

TEST(Softmax, RejectsNonFinite) {
  Tensor<double> s({2}, std::vector<double>{1.0, NAN});
  EXPECT_THROW(nn::softmax(s), NumericError);
}

TEST(CrossEntropy, ValueAndGradient) {
  Tensor<double> s({2}, std::vector<double>{0.0, 0.0});
  const auto r = nn::cross_entropy(s, 1);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.dscores[0], 0.5, 1e-15);
  EXPECT_NEAR(r.dscores[1], -0.5, 1e-15);
}

TEST(Conv2d, MatchesDirectSum) {
  Rng rng(1);
  const auto x = checks::random_tensor({2, 5, 6}, rng);
  const auto k = checks::random_tensor({3, 2, 3, 3}, rng);
  const auto y = nn::conv2d(x, k, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{3, 5, 6}));
  for (std::size_t o = 0; o < 3; ++o)
    for (int yy = 0; yy < 5; ++yy)
      for (int xx = 0; xx < 6; ++xx) {
        double s = 0;
        for (std::size_t c = 0; c < 2; ++c)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const int sy = yy + i - 1, sx = xx + j - 1;
              if (sy < 0 || sy >= 5 || sx < 0 || sx >= 6) continue;
              s += x.at(c, std::size_t(sy), std::size_t(sx)) * k.at(o, c, std::size_t(i), std::size_t(j));
            }
        EXPECT_NEAR(y.at(o, std::size_t(yy), std::size_t(xx)), s, 1e-12);
      }
}

TEST(MaxPool, FirstMaximumWinsTies) {
  Tensor<double> x({1, 2, 2}, 1.0);
  const auto p = nn::maxpool2(x);
  EXPECT_EQ(p.argmax[0], 0u);
  Tensor<double> odd({1, 3, 3});
  EXPECT_EQ(nn::maxpool2(odd).out.shape(), (Shape{1, 1, 1}));
}

TEST(GradCheck, EveryOpWithinTolerance) {
  for (const auto& r : checks::op_gradient_suite(0)) {
    EXPECT_LE(r.max_rel_error, 1e-5) << r.op;
    EXPECT_GT(r.checked, 0u) << r.op;
  }
}

TEST(GradCheck, ComposedModels) {
  EXPECT_LE(checks::sequence_gradient_check(0).max_rel_error, 1e-5);
  EXPECT_LE(checks::frame_gradient_check(0).max_rel_error, 1e-5);
}

TEST(GradCheck, DetectsWrongGradient) {
  Tensor<double> x({2}, std::vector<double>{0.3, -0.4});
  const auto r = nn::grad_check([&] { return x[0] * x[0] + x[1]; },
                                [&] {
                                  x.grad()[0] = 3 * x[0];  // should be 2 x0
                                  x.grad()[1] = 1;
                                },
                                {&x});
  EXPECT_GT(r.max_rel_error, 0.1);
}

TEST(Sgd, ScheduleMomentumAndClipping) {
  nn::LrSchedule s{0.1, 0.5, 10};
  EXPECT_DOUBLE_EQ(s.at(9), 0.1);
  EXPECT_DOUBLE_EQ(s.at(10), 0.05);
  EXPECT_DOUBLE_EQ(s.at(25), 0.025);

  Tensor<float> p({2}, std::vector<float>{1.f, 1.f});
  p.enable_grad();
  nn::Sgd<float> opt(nn::LrSchedule{1.0, 1.0, 0}, 0.5, 1.0);
  p.grad()[0] = 3.f;
  p.grad()[1] = 4.f;  // norm 5 -> clipped to 1
  opt.step({&p});
  EXPECT_NEAR(p[0], 1 - 0.6, 1e-6);
  EXPECT_NEAR(p[1], 1 - 0.8, 1e-6);
  opt.step({&p});  // v = 0.5 v + g
  EXPECT_NEAR(p[0], 0.4 - 0.9, 1e-6);
  p.grad()[0] = NAN;
  EXPECT_THROW(opt.step({&p}), NumericError);
  EXPECT_THROW(nn::Sgd<float>(nn::LrSchedule{0.0, 1.0, 0}), ValidationError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"benchmark.conf", "ablation.conf"}) {
    const auto c = Config::load(std::string(ONGCMP_CONFIG_DIR) + "/" + name);
    EXPECT_NO_THROW(data::SyntheticConfig::from(c)) << name;
    EXPECT_NO_THROW(flow::SolverConfig::from(c)) << name;
    for (const auto s : {train::Stage::Occ5, train::Stage::Pre2, train::Stage::PostSf})
      EXPECT_NO_THROW(pipeline::stage_hyper(c, s)) << name;
  }
}
