#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hifanet_cli.hpp"

namespace fs = std::filesystem;
using hifanet::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "hifanet");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("hifanet_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  // Small scene: few points and cameras so every command runs in about a second.
  std::vector<std::string> small_scene(const std::string& out) const {
    return {"generate", "--points-per-class", "40", "--camera-count", "20", "--seed", "3", "--out", out};
  }

  fs::path root_;
};

}  // namespace

TEST_F(CliTest, ProjectionStudyZeroNoiseGivesZeroRows) {
  const auto r = call({"projection-study", "--sigma-rot", "0", "--sigma-trans", "0", "--trials", "200", "--out",
                       dir("study")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(fs::path(dir("study")) / "projection_study.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"distance_m", "sigma_rot_deg", "sigma_trans_m", "mean_err_px",
                                               "p95_err_px"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][3], "0");
    EXPECT_EQ(rows[i][4], "0");
  }
}

TEST_F(CliTest, ProjectionStudyTranslationErrorFalls) {
  const auto r = call({"projection-study", "--sigma-rot", "0", "--sigma-trans", "0.1", "--distances", "5,10,20",
                       "--trials", "1000", "--out", dir("study")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(fs::path(dir("study")) / "projection_study.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_GT(std::stod(rows[1][3]), std::stod(rows[2][3]));
  EXPECT_GT(std::stod(rows[2][3]), std::stod(rows[3][3]));
}

TEST_F(CliTest, ProjectionStudyIsDeterministic) {
  ASSERT_EQ(call({"projection-study", "--trials", "500", "--out", dir("a")}).code, 0);
  ASSERT_EQ(call({"projection-study", "--trials", "500", "--out", dir("b")}).code, 0);
  EXPECT_EQ(slurp(fs::path(dir("a")) / "projection_study.csv"), slurp(fs::path(dir("b")) / "projection_study.csv"));
}

TEST_F(CliTest, GenerateIsDeterministic) {
  ASSERT_EQ(call(small_scene(dir("a"))).code, 0);
  ASSERT_EQ(call(small_scene(dir("b"))).code, 0);
  const std::string a = slurp(fs::path(dir("a")) / "dataset.hifa");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(fs::path(dir("b")) / "dataset.hifa"));
  EXPECT_EQ(slurp(fs::path(dir("a")) / "generate.json"), slurp(fs::path(dir("b")) / "generate.json"));
}

TEST_F(CliTest, TrainOneEpochWritesOneHistoryRow) {
  ASSERT_EQ(call(small_scene(dir("data"))).code, 0);
  const std::string data = dir("data") + "/dataset.hifa";
  const auto r = call({"train", "--data", data, "--epochs", "1", "--out", dir("model")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(fs::path(dir("model")) / "history.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epoch", "lr", "loss", "miou", "avg_accuracy"}));
  EXPECT_EQ(rows[1][0], "1");
  EXPECT_EQ(rows[1][1], "0.1");
  EXPECT_TRUE(fs::exists(fs::path(dir("model")) / "model.ckpt"));

  const auto e = call({"evaluate", "--data", data, "--model", dir("model"), "--out", dir("eval")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto metrics = nlohmann::json::parse(slurp(fs::path(dir("eval")) / "metrics.json"));
  EXPECT_EQ(metrics.at("method"), "hifanet");
  EXPECT_GE(metrics.at("miou").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(fs::path(dir("eval")) / "confusion.csv"));
}

TEST_F(CliTest, TrainIsDeterministic) {
  ASSERT_EQ(call(small_scene(dir("data"))).code, 0);
  const std::string data = dir("data") + "/dataset.hifa";
  for (const char* out : {"m1", "m2"})
    ASSERT_EQ(call({"train", "--data", data, "--epochs", "2", "--variant", "avgpool_fc", "--out", dir(out)}).code, 0);
  for (const char* f : {"model.ckpt", "model.json", "history.csv"})
    EXPECT_EQ(slurp(fs::path(dir("m1")) / f), slurp(fs::path(dir("m2")) / f)) << f;
}

TEST_F(CliTest, VoteOnPerfectDataScoresOne) {
  auto args = small_scene(dir("data"));
  for (const char* a : {"--corruption", "0", "--feature-noise", "0", "--sigma-rot", "0", "--sigma-trans", "0"})
    args.emplace_back(a);
  ASSERT_EQ(call(args).code, 0);
  const auto r = call({"evaluate", "--data", dir("data") + "/dataset.hifa", "--variant", "majority_vote", "--out",
                       dir("eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(slurp(fs::path(dir("eval")) / "metrics.json"));
  EXPECT_EQ(metrics.at("miou").get<double>(), 1.0);
  EXPECT_EQ(metrics.at("avg_accuracy").get<double>(), 1.0);
}

TEST_F(CliTest, ConfigFileThenFlags) {
  ASSERT_EQ(call(small_scene(dir("data"))).code, 0);
  const auto cfg = root_ / "cfg.json";
  std::ofstream(cfg) << R"({"train": {"epochs": 3, "batch_size": 16}})";
  ASSERT_EQ(call({"train", "--data", dir("data") + "/dataset.hifa", "--config", cfg.string(), "--variant",
                  "avgpool_fc", "--out", dir("a")})
                .code,
            0);
  EXPECT_EQ(read_csv(fs::path(dir("a")) / "history.csv").size(), 4u);
  ASSERT_EQ(call({"train", "--data", dir("data") + "/dataset.hifa", "--config", cfg.string(), "--epochs", "1",
                  "--variant", "avgpool_fc", "--out", dir("b")})
                .code,
            0);
  EXPECT_EQ(read_csv(fs::path(dir("b")) / "history.csv").size(), 2u);
}

TEST_F(CliTest, NoiseSweepWritesEveryLevel) {
  const auto r = call({"noise-sweep", "--points-per-class", "40", "--camera-count", "20", "--epochs", "1",
                       "--noise-steps", "3", "--seed", "2", "--out", dir("sweep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(fs::path(dir("sweep")) / "noise_sweep.csv");
  ASSERT_EQ(rows.size(), 1u + 3u * 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"sigma", "method", "miou", "avg_accuracy"}));
  EXPECT_EQ(rows[1][0], "0");
  EXPECT_EQ(rows.back()[0], "0.3");
  EXPECT_EQ(rows[1][1], "hifanet");
  EXPECT_EQ(rows[2][1], "majority_vote_k1");
  EXPECT_EQ(rows[3][1], "majority_vote_k5");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(call({"--help"}).code, 0);
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"train", "--bogus"}).code, 2);
  EXPECT_EQ(call({"teleport"}).code, 2);
  EXPECT_EQ(call({"projection-study", "--trials", "5"}).code, 2);
  EXPECT_EQ(call({"evaluate", "--data", dir("missing.hifa"), "--variant", "majority_vote"}).code, 3);

  ASSERT_EQ(call(small_scene(dir("data"))).code, 0);
  const std::string data = dir("data") + "/dataset.hifa";
  EXPECT_EQ(call({"train", "--data", data, "--variant", "pointnet", "--out", dir("x")}).code, 2);
  EXPECT_EQ(call({"evaluate", "--data", data, "--out", dir("x")}).code, 2);

  const auto cfg = root_ / "bad.json";
  std::ofstream(cfg) << R"({"train": {"epoch": 3}})";
  EXPECT_EQ(call({"train", "--data", data, "--config", cfg.string(), "--out", dir("x")}).code, 2);

  std::ofstream(root_ / "junk.hifa") << "not a dataset";
  EXPECT_EQ(call({"evaluate", "--data", (root_ / "junk.hifa").string(), "--variant", "majority_vote"}).code, 3);
}
