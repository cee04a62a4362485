#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <memory>
#include <sstream>

#include "support/test_support.hpp"
#include "tsinr/checkpoint.hpp"
#include "tsinr/commands.hpp"
#include "tsinr/datasets.hpp"

using namespace tsinr;
using test::read_file;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kTiny{"--window", "20",      "--patch",  "5", "--model-width", "16", "--heads",
                                     "2",        "--blocks", "1",       "--global-width", "8",  "--group-width",
                                     "4",        "--epochs", "2",       "--batch-size",   "4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<test::TempDir>();
    const CliRun s = cli({"synth", "--kind", "global_point", "--seed", "7", "--train-length", "200", "--test-length",
                       "200", "--count", "4", "--out-dir", path("data")});
    ASSERT_EQ(s.code, 0) << s.err;
    const CliRun t = cli(with({"train", "--train", path("data/train.csv"), "--out-dir", path("run"), "--seed", "3"}, kTiny));
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static std::string path(const std::string& rel) { return dir_->file(rel); }

  static std::unique_ptr<test::TempDir> dir_;
};

std::unique_ptr<test::TempDir> CliTest::dir_;

TEST_F(CliTest, SynthIsRepeatableAndCountsMatch) {
  const CliRun a = cli({"synth", "--kind", "global_point", "--seed", "7", "--train-length", "200", "--test-length", "200",
                     "--count", "4", "--out-dir", path("again")});
  ASSERT_EQ(a.code, 0) << a.err;
  for (const char* f : {"train.csv", "test.csv", "labels.csv", "spec.json"})
    EXPECT_EQ(read_file(path(std::string("data/") + f)), read_file(path(std::string("again/") + f))) << f;
  auto labels = read_labels(path("data/labels.csv"));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 4);
  EXPECT_NE(a.out.find("anomalies: 4"), std::string::npos);
}

TEST_F(CliTest, SynthTrendSidecarRecordsKind) {
  const CliRun a = cli({"synth", "--kind", "trend", "--out-dir", path("trend")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(read_file(path("trend/spec.json")).find("\"trend\""), std::string::npos);
  auto labels = read_labels(path("trend/labels.csv"));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 5 * 30);
}

TEST_F(CliTest, SynthInvalidSpecIsUsageError) {
  EXPECT_EQ(cli({"synth", "--kind", "spike", "--out-dir", path("x")}).code, kExitUsage);
  EXPECT_EQ(cli({"synth", "--kind", "shapelet", "--count", "50", "--out-dir", path("x")}).code, kExitUsage);
}

TEST_F(CliTest, TrainWritesCheckpointMetricsAndManifest) {
  EXPECT_TRUE(std::filesystem::exists(path("run/model.tsnr")));
  const std::string metrics = read_file(path("run/metrics.csv"));
  EXPECT_EQ(metrics.rfind("epoch,loss,steps\n", 0), 0u);
  EXPECT_EQ(line_count(metrics), 3u);
  const std::string manifest = read_file(path("run/manifest.json"));
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_NE(manifest.find("\"window_T\": 20"), std::string::npos);
}

TEST_F(CliTest, TrainSameSeedSameCheckpoint) {
  const CliRun t = cli(with({"train", "--train", path("data/train.csv"), "--out-dir", path("run2"), "--seed", "3"}, kTiny));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(read_file(path("run/model.tsnr")), read_file(path("run2/model.tsnr")));
}

TEST_F(CliTest, ConfigFilePrecedence) {
  test::write_file(path("cfg.json"), R"({"epochs": 1, "gamma": 2.5, "seed": 11})");
  const CliRun t = cli(with({"train", "--train", path("data/train.csv"), "--out-dir", path("cfg"), "--config",
                          path("cfg.json"), "--seed", "4"},
                         kTiny));
  ASSERT_EQ(t.code, 0) << t.err;
  Model m = load_checkpoint(path("cfg/model.tsnr"));
  EXPECT_EQ(m.config().seed, 4u);     // flag beats file
  EXPECT_EQ(m.config().gamma, 2.5);   // file beats default
  EXPECT_EQ(m.config().epochs, 2u);   // kTiny sets --epochs 2
  EXPECT_EQ(m.config().blocks, 1u);
}

TEST_F(CliTest, AblationFlagsChangeStructure) {
  const CliRun t = cli(with({"train", "--train", path("data/train.csv"), "--out-dir", path("abl"), "--no-decomposition",
                          "--no-group"},
                         kTiny));
  ASSERT_EQ(t.code, 0) << t.err;
  Model m = load_checkpoint(path("abl/model.tsnr"));
  EXPECT_FALSE(m.config().decomposition);
  EXPECT_FALSE(m.config().group_based);
  EXPECT_FALSE(m.hypernet().layout().trend_index().has_value());
  EXPECT_FALSE(m.hypernet().layout().seasonal_index().has_value());
  EXPECT_EQ(m.hypernet().layout().groups().size(), 1u);
}

TEST_F(CliTest, DetectOutputsAndDeterminism) {
  const std::vector<std::string> base{"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("data/test.csv"),
                                      "--labels", path("data/labels.csv")};
  const CliRun a = cli(with(base, {"--out-dir", path("det1")}));
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = cli(with(base, {"--out-dir", path("det2")}));
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_file(path("det1/report.txt")), read_file(path("det2/report.txt")));
  EXPECT_EQ(read_file(path("det1/scores.csv")), read_file(path("det2/scores.csv")));
  const std::string scores = read_file(path("det1/scores.csv"));
  EXPECT_EQ(line_count(scores), 201u);  // header + one line per test timestamp
  const std::string report = read_file(path("det1/report.txt"));
  for (const char* key : {"raw_f1: ", "pa_f1: ", "auc: ", "vus: "}) EXPECT_NE(report.find(key), std::string::npos);
  EXPECT_NE(read_file(path("det1/manifest.json")).find("model.tsnr"), std::string::npos);
}

TEST_F(CliTest, DetectFullProportionLabelsAll) {
  const CliRun a = cli({"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("data/test.csv"), "--gamma", "100",
                     "--out-dir", path("all")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("labeled_anomalies: 200"), std::string::npos) << a.out;
}

TEST_F(CliTest, DetectChannelMismatchIsUsageError) {
  ASSERT_EQ(cli({"synth", "--channels", "2", "--train-length", "200", "--test-length", "200", "--count", "2",
                 "--out-dir", path("wide")})
                .code,
            0);
  EXPECT_EQ(cli({"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("wide/test.csv"), "--out-dir",
                 path("bad")})
                .code,
            kExitUsage);
}

TEST_F(CliTest, EvalRecomputesReport) {
  ASSERT_EQ(cli({"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("data/test.csv"), "--labels",
                 path("data/labels.csv"), "--gamma", "2", "--out-dir", path("ev")})
                .code,
            0);
  const CliRun e = cli({"eval", "--scores", path("ev/scores.csv"), "--gamma", "2"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out, read_file(path("ev/report.txt")));
}

TEST_F(CliTest, GammaSweepRowsAndBestFlag) {
  const CliRun s = cli({"sweep", "--param", "gamma", "--range", "0.5:1.0:0.1", "--checkpoint", path("run/model.tsnr"),
                     "--test", path("data/test.csv"), "--labels", path("data/labels.csv"), "--out-dir", path("sw")});
  ASSERT_EQ(s.code, 0) << s.err;
  const std::string table = read_file(path("sw/sweep.csv"));
  EXPECT_EQ(table.rfind("gamma,precision,recall,f1,raw_f1,pa_f1,auc,best\n", 0), 0u);
  EXPECT_EQ(line_count(table), 7u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '*'), 1);
  EXPECT_NE(table.find("\n0.5,"), std::string::npos);
  EXPECT_NE(table.find("\n1,"), std::string::npos);
}

TEST_F(CliTest, GroupSweepTrainsPerValue) {
  ASSERT_EQ(cli({"synth", "--channels", "3", "--train-length", "100", "--test-length", "100", "--count", "2",
                 "--out-dir", path("multi")})
                .code,
            0);
  const CliRun s = cli(with({"sweep", "--param", "group_num", "--values", "1,2,3", "--train", path("multi/train.csv"),
                          "--test", path("multi/test.csv"), "--labels", path("multi/labels.csv"), "--out-dir",
                          path("gs")},
                         kTiny));
  ASSERT_EQ(s.code, 0) << s.err;
  const std::string table = read_file(path("gs/sweep.csv"));
  EXPECT_EQ(table.rfind("group_num,", 0), 0u);
  EXPECT_EQ(line_count(table), 4u);
}

TEST_F(CliTest, PlotIsWellFormedWithThresholdAndShading) {
  ASSERT_EQ(cli({"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("data/test.csv"), "--labels",
                 path("data/labels.csv"), "--out-dir", path("pl")})
                .code,
            0);
  const CliRun p = cli({"plot", "--scores", path("pl/scores.csv"), "--data", path("data/test.csv"), "--reconstruction",
                     path("pl/reconstruction.csv"), "--gamma", "2", "--out-dir", path("pl")});
  ASSERT_EQ(p.code, 0) << p.err;
  const std::string svg = read_file(path("pl/plot.svg"));
  EXPECT_NE(svg.find("class=\"threshold\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"reconstruction\""), std::string::npos);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
}

TEST_F(CliTest, PlotLengthMismatchFails) {
  ASSERT_EQ(cli({"detect", "--checkpoint", path("run/model.tsnr"), "--test", path("data/test.csv"), "--out-dir",
                 path("pm")})
                .code,
            0);
  test::write_file(path("pm/short.csv"), "1\n2\n3\n");
  EXPECT_NE(cli({"plot", "--scores", path("pm/scores.csv"), "--data", path("pm/short.csv"), "--out-dir", path("pm")}).code,
            0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"train"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"train", "--help"}).code, kExitOk);
}

TEST(Cli, InvalidConfigIsUsageError) {
  test::TempDir dir;
  ASSERT_EQ(cli({"synth", "--train-length", "200", "--test-length", "200", "--count", "2", "--out-dir", dir.file("d")})
                .code,
            0);
  EXPECT_EQ(cli({"train", "--train", dir.file("d/train.csv"), "--window", "100", "--patch", "7", "--out-dir",
                 dir.file("r")})
                .code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--train", dir.file("d/train.csv"), "--encoder", "gpt", "--out-dir", dir.file("r")}).code,
            kExitUsage);
}

TEST(Cli, DivergenceExitsWithNumericCode) {
  test::TempDir dir;
  ASSERT_EQ(cli({"synth", "--train-length", "200", "--test-length", "200", "--count", "2", "--out-dir", dir.file("d")})
                .code,
            0);
  const CliRun r = cli(with({"train", "--train", dir.file("d/train.csv"), "--lr", "1e300", "--epochs", "5",
                          "--out-dir", dir.file("r")},
                         {"--window", "20", "--patch", "5", "--model-width", "16", "--heads", "2", "--blocks", "1",
                          "--batch-size", "2"}));
  EXPECT_EQ(r.code, kExitNumeric) << r.out << r.err;
  EXPECT_NE(r.err.find("step"), std::string::npos) << r.err;
}
