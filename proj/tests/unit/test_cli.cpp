#include <gtest/gtest.h>

#include <filesystem>

#include "ongcmp/cli.hpp"
#include "support/checks.hpp"

using namespace ongcmp;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ongcmp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

// Small but complete settings so a full cycle takes seconds.
const std::vector<std::string> kTiny = {
    "--set", "backbone.input_size=16", "--set", "backbone.widths=4,4,4", "--set", "backbone.feature_dim=16",
    "--set", "lstm.hidden_dim=8",      "--set", "flow.iterations=5",     "--set", "train.epochs=1",
    "--set", "train.batch=4",          "--set", "train.lr=0.01"};

std::vector<std::string> with(const fs::path& ws, std::vector<std::string> rest) {
  std::vector<std::string> a{"--workspace", ws.string()};
  a.insert(a.end(), kTiny.begin(), kTiny.end());
  a.insert(a.end(), rest.begin(), rest.end());
  return a;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ws_ = fs::temp_directory_path() /
          ("ongcmp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(ws_);
    fs::create_directories(ws_);
  }
  void TearDown() override { fs::remove_all(ws_); }

  int gen(const std::string& out, const std::string& seed = "3", const fs::path& ws = {}) {
    return run_cli(with(ws.empty() ? ws_ : ws, {"--seed", seed, "gen", "--per-class", "3", "--test-per-class", "1", "--width", "32",
                              "--height", "32", "--frames", "32", "--out", out}));
  }

  fs::path ws_;
};

}  // namespace

TEST_F(CliTest, GenIsDeterministic) {
  // same relative output in two workspaces
  ASSERT_EQ(gen("data", "3", ws_ / "a"), 0);
  ASSERT_EQ(gen("data", "3", ws_ / "b"), 0);
  EXPECT_EQ(checks::artifact_tree(ws_ / "a"), checks::artifact_tree(ws_ / "b"));
  ASSERT_EQ(gen("data", "4", ws_ / "c"), 0);
  EXPECT_NE(checks::artifact_tree(ws_ / "a"), checks::artifact_tree(ws_ / "c"));
  EXPECT_TRUE(fs::exists(ws_ / "a" / "data.manifest.txt"));
}

TEST_F(CliTest, FullCycle) {
  ASSERT_EQ(gen("data"), 0);
  for (const std::string stage : {"occ5", "pre2", "postsf"})
    ASSERT_EQ(run_cli(with(ws_, {"train", "--stage", stage, "--data", "data", "--out", "ck/" + stage + ".ckpt"})), 0);
  EXPECT_TRUE(fs::exists(ws_ / "ck" / "occ5.ckpt.meta"));
  EXPECT_TRUE(fs::exists(ws_ / "ck" / "occ5.ckpt.loss.csv"));
  const std::vector<std::string> models{"--ckpt-occ", "ck/occ5.ckpt", "--ckpt-pre", "ck/pre2.ckpt", "--ckpt-post",
                                        "ck/postsf.ckpt"};
  auto predict = with(ws_, {"predict", "--data", "data", "--out", "pred.txt"});
  predict.insert(predict.end(), models.begin(), models.end());
  ASSERT_EQ(run_cli(predict), 0);
  EXPECT_TRUE(fs::exists(ws_ / "pred.txt.timing.txt"));
  ASSERT_EQ(run_cli(with(ws_, {"eval", "--pred", "pred.txt", "--truth", "data/manifest.txt", "--out", "report"})), 0);
  for (const char* f : {"report.txt", "confusion.csv", "ap.csv", "confusion.pgm"}) EXPECT_TRUE(fs::exists(ws_ / "report" / f));
  auto bench = with(ws_, {"bench", "--data", "data", "--out", "bench"});
  bench.insert(bench.end(), models.begin(), models.end());
  ASSERT_EQ(run_cli(bench), 0);
  EXPECT_TRUE(fs::exists(ws_ / "bench" / "timing.txt"));
  ASSERT_EQ(run_cli(with(ws_, {"flow", "--in", "data/clips/steal_0000", "--out", "flow", "--dump-flo"})), 0);
  EXPECT_TRUE(fs::exists(ws_ / "flow" / "0030.gcmp.ppm"));
  EXPECT_TRUE(fs::exists(ws_ / "flow" / "0030.flo"));
  EXPECT_FALSE(fs::exists(ws_ / "flow" / "0031.gcmp.ppm"));

  // the same training command again gives the same bytes
  ASSERT_EQ(run_cli(with(ws_, {"train", "--stage", "occ5", "--data", "data", "--out", "again/occ5.ckpt"})), 0);
  EXPECT_EQ(cli::read_file(ws_ / "again" / "occ5.ckpt"), cli::read_file(ws_ / "ck" / "occ5.ckpt"));
  EXPECT_EQ(cli::read_file(ws_ / "again" / "occ5.ckpt.meta"), cli::read_file(ws_ / "ck" / "occ5.ckpt.meta"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}), 0);
  EXPECT_EQ(run_cli({}), 2);                                   // no subcommand
  EXPECT_EQ(run_cli({"gen"}), 2);                              // missing --out
  EXPECT_EQ(run_cli(with(ws_, {"train", "--stage", "nope", "--data", "d", "--out", "x"})), 2);
  EXPECT_EQ(run_cli(with(ws_, {"--set", "novalue", "gen", "--out", "d"})), 2);
  EXPECT_EQ(run_cli(with(ws_, {"train", "--stage", "occ5", "--data", "missing", "--out", "x"})), 3);
  EXPECT_EQ(run_cli(with(ws_, {"--config", "missing.conf", "gen", "--out", "d"})), 3);
  EXPECT_EQ(run_cli(with(ws_, {"gen", "--classes", "9", "--out", "d"})), 2);
}
