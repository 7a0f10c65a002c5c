#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

#include <json.hpp>

#include "emvqm/fixtures.hpp"
#include "emvqm/manifest.hpp"
#include "temp_dir.hpp"

#ifndef EMVQM_CLI_PATH
#error "EMVQM_CLI_PATH must name the emvqm executable"
#endif

using namespace emvqm;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "emvqm_cli_test_output.txt";
  const std::string cmd = std::string(EMVQM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One small extracted dataset shared by the tests below.
class CliDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "emvqm_cli_dataset";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "cfg.txt") << "spatial.frame_stride = 8\n";
    ASSERT_EQ(run("fixtures --kind dataset --count 14 --width 64 --height 64 --frames 16 --seed 2 --out " +
                  (dir_ / "ds").string())
                  .code,
              0);
    const CliRun ex = run("extract --manifest " + manifest() + " --out " + cache() + config());
    ASSERT_EQ(ex.code, 0) << ex.out;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string manifest() { return (dir_ / "ds" / "manifest.csv").string(); }
  static std::string cache() { return (dir_ / "c.bin").string(); }
  static std::string config() { return " --config " + (dir_ / "cfg.txt").string(); }

  static fs::path dir_;
};
fs::path CliDataset::dir_;

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  const CliRun r = run("eval --manifest /nonexistent/m.csv --cache x.bin --out o");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
  EXPECT_EQ(run("rank --manifest /nonexistent/m.csv --scores s.csv --orientation higher").code, 2);
  TempDir dir;
  EXPECT_EQ(run("fixtures --kind spiral --out " + dir.path.string()).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, DataErrorsExitOne) {
  TempDir dir;
  std::ofstream(dir / "m.csv") << "video_id,ref_path,syn_path,group,dmos\nv,a.y4m,a.y4m,g,1\n";
  const CliRun r = run("extract --manifest " + (dir / "m.csv").string() + " --out " + (dir / "c.bin").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("missing video"), std::string::npos);
}

TEST(Cli, FixturesWritesAPair) {
  TempDir dir;
  ASSERT_EQ(run("fixtures --kind identical --width 64 --height 64 --frames 16 --out " + dir.path.string()).code, 0);
  EXPECT_EQ(slurp(dir / "ref.y4m"), slurp(dir / "syn.y4m"));
  EXPECT_EQ(slurp(dir / "ref.y4m").rfind("YUV4MPEG2 W64 H64", 0), 0u);
}

TEST_F(CliDataset, SecondExtractHitsTheCache) {
  const CliRun r = run("extract --manifest " + manifest() + " --out " + cache() + config());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("extracted 0, cached 14"), std::string::npos) << r.out;
}

TEST_F(CliDataset, EvalIsByteIdenticalAcrossRunsAndThreads) {
  const auto out = dir_ / "eval";
  const std::string base = "eval --manifest " + manifest() + " --cache " + cache() + " --folds 100 --seed 7 --svg" + config();
  ASSERT_EQ(run(base + " --out " + (out / "a").string()).code, 0);
  ASSERT_EQ(run(base + " --out " + (out / "b").string()).code, 0);
  ASSERT_EQ(run(base + " --threads 2 --out " + (out / "c").string()).code, 0);
  for (const char* f : {"summary.json", "folds.csv", "scatter.csv", "scatter.svg"}) {
    EXPECT_FALSE(slurp(out / "a" / f).empty()) << f;
    EXPECT_EQ(slurp(out / "a" / f), slurp(out / "b" / f)) << f;
    EXPECT_EQ(slurp(out / "a" / f), slurp(out / "c" / f)) << f;
  }
  const auto summary = nlohmann::json::parse(slurp(out / "a" / "summary.json"));
  EXPECT_EQ(summary.at("folds"), 100);
  EXPECT_EQ(summary.at("records"), 14);
  EXPECT_TRUE(summary.at("krasula").is_object());
  EXPECT_EQ(read_csv(out / "a" / "folds.csv").rows.size(), 100u);
  EXPECT_EQ(read_csv(out / "a" / "scatter.csv").header, (std::vector<std::string>{"video_id", "dmos", "predicted"}));

  // A different config digest finds no cached features.
  EXPECT_EQ(run("eval --manifest " + manifest() + " --cache " + cache() + " --out " + (out / "d").string()).code, 1);
}

TEST_F(CliDataset, ScoreOnIdenticalPairIsTheZeroVectorPrediction) {
  const auto model = dir_ / "m.json";
  ASSERT_EQ(run("train --manifest " + manifest() + " --cache " + cache() + " --model " + model.string() + " --seed 5" +
                config())
                .code,
            0);
  const auto j = nlohmann::json::parse(slurp(model));
  EXPECT_EQ(j.at("seed"), 5);
  // Zero features, min-max scaled and clamped to [-0.5, 1.5], through the
  // stored linear model.
  const auto& m = j.at("svr");
  double expect = m.at("bias").get<double>();
  for (std::size_t k = 0; k < m.at("weights").size(); ++k) {
    const double lo = m.at("scale_min")[k], hi = m.at("scale_max")[k];
    const double z = hi > lo ? std::clamp((0.0 - lo) / (hi - lo), -0.5, 1.5) : 0.0;
    expect += m.at("weights")[k].get<double>() * z;
  }
  const auto pair = dir_ / "pair";
  ASSERT_EQ(run("fixtures --kind identical --width 64 --height 64 --frames 16 --seed 9 --out " + pair.string()).code, 0);
  const CliRun r = run("score --model " + model.string() + " --ref " + (pair / "ref.y4m").string() + " --syn " +
                    (pair / "syn.y4m").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(std::stod(r.out), expect, 1e-9);
}

TEST_F(CliDataset, RankOrdersGroups) {
  const Manifest m = load_manifest(manifest());
  std::ofstream s(dir_ / "scores.csv");
  s << "video_id,score\n";
  for (const auto& e : m.entries) s << e.video_id << "," << e.dmos << "\n";
  s.close();
  const auto out = dir_ / "rank.csv";
  ASSERT_EQ(run("rank --manifest " + manifest() + " --scores " + (dir_ / "scores.csv").string() +
                " --orientation lower --out " + out.string())
                .code,
            0);
  const CsvTable t = read_csv(out);
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.rows.front()[1], "level0");
  EXPECT_EQ(t.rows.back()[1], "level9");
}
