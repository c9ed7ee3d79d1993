/*
 * Copyright 2026 The oddstream Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "oddstream/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "oddstream/config.hpp"
#include "oddstream/io.hpp"
#include "oddstream/protocols.hpp"

namespace oddstream::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result RunCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = Run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json LastErrorLine(const std::string& err) {
  const auto pos = err.rfind('{');
  return Json::parse(err.substr(pos));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("oddstream_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    ClusterSetup c;
    c.dim = 4;
    c.bank_count = 400;
    c.val_count = 200;
    c.stream_count = 100;
    c.seed = 1;
    const ClusterData data = MakeClusterData(c);
    io::WriteFeatures(Path("train.oddf"), data.train.features);
    io::WriteFeatures(Path("val.oddf"), data.val.features);
    FeatureVectors mixed = data.stream.features;
    std::vector<std::uint8_t> labels(mixed.size(), io::kLabelOod);
    const auto id = SampleGaussian({std::vector<double>(4, 0.0), 1.0, 60, 77});
    for (const auto& f : id) {
      mixed.push_back(f);
      labels.push_back(io::kLabelId);
    }
    io::WriteFeatures(Path("input.oddf"), mixed, labels);
    io::WriteFeatures(Path("far.oddf"), SampleGaussian({std::vector<double>(4, 5.0), 0.5, 50, 78}));
    std::ofstream(Path("cfg.json")) << R"({"k": 10, "threads": 1})";
    std::ofstream(Path("off.json")) << R"({"k": 10, "threads": 1, "adapt": false})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> StreamArgs(const std::string& tag, const std::string& config) const {
    return {"stream", "--train", Path("train.oddf"), "--val", Path("val.oddf"), "--input", Path("input.oddf"),
            "--config", Path(config), "--log", Path(tag + ".jsonl"), "--metrics", Path(tag + ".json")};
  }

  fs::path dir_;
};

TEST_F(CliTest, Fig1ContainsReferenceAccuracies) {
  std::ofstream(Path("small.json")) << R"({"repeats": 2, "id_count": 500, "ood_count": 500})";
  const auto r = RunCli({"synth", "--preset", "fig1", "--config", Path("small.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(r.out.find("\n1.350000,0.911492,0.903200,0.096800,"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\n1.960000,0.975002,0.531881,0.468119,"), std::string::npos) << r.out;
}

TEST_F(CliTest, StreamAdaptOffFlagMatchesConfig) {
  auto via_flag = StreamArgs("flag", "cfg.json");
  via_flag.insert(via_flag.end(), {"--adapt", "off"});
  ASSERT_EQ(RunCli(StreamArgs("conf", "off.json")).status, 0);
  const auto r = RunCli(via_flag);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(Slurp(Path("flag.json")), Slurp(Path("conf.json")));
  EXPECT_EQ(Slurp(Path("flag.jsonl")), Slurp(Path("conf.jsonl")));
}

TEST_F(CliTest, StreamReplayIsByteIdentical) {
  ASSERT_EQ(RunCli(StreamArgs("a", "cfg.json")).status, 0);
  ASSERT_EQ(RunCli(StreamArgs("b", "cfg.json")).status, 0);
  const std::string log = Slurp(Path("a.jsonl"));
  EXPECT_EQ(log, Slurp(Path("b.jsonl")));
  std::istringstream lines(log);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const Json j = Json::parse(line);
    EXPECT_EQ(j["index"], n);
    EXPECT_TRUE(j.contains("config_hash"));
    ++n;
  }
  EXPECT_EQ(n, 160u);
  const Json metrics = Json::parse(Slurp(Path("a.json")));
  EXPECT_TRUE(metrics.contains("config_hash"));
  EXPECT_GE(metrics["report"]["auroc"].get<double>(), 0.5);
}

TEST_F(CliTest, CalibrateReport) {
  const auto r = RunCli({"calibrate", "--train", Path("train.oddf"), "--val", Path("val.oddf"), "--config",
                         Path("cfg.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LE(j["lambda"].get<double>(), 0.0);
  EXPECT_GE(j["achieved_tpr"].get<double>(), 0.95);
  EXPECT_LT(j["achieved_tpr"].get<double>(), 0.95 + 1.0 / 200.0);
}

TEST_F(CliTest, EvalSequential) {
  const auto r = RunCli({"eval", "--protocol", "sequential", "--datasets", Path("input.oddf") + "," + Path("far.oddf"),
                         "--train", Path("train.oddf"), "--val", Path("val.oddf"), "--config", Path("cfg.json"),
                         "--seed", "4", "--log", Path("eval.jsonl")});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["report"]["per_dataset"].size(), 2u);
  std::istringstream lines(Slurp(Path("eval.jsonl")));
  std::string first;
  std::getline(lines, first);
  EXPECT_TRUE(Json::parse(first).contains("dataset"));
}

TEST_F(CliTest, ConvertRoundTrip) {
  ASSERT_EQ(RunCli({"convert", "--from", "oddf", "--to", "csv", "--in", Path("input.oddf"), "--out",
                    Path("input.csv")})
                .status,
            0);
  ASSERT_EQ(RunCli({"convert", "--from", "csv", "--to", "oddf", "--in", Path("input.csv"), "--out",
                    Path("back.oddf")})
                .status,
            0);
  EXPECT_EQ(Slurp(Path("back.oddf")), Slurp(Path("input.oddf")));
}

TEST_F(CliTest, AblateOnFiles) {
  const auto r = RunCli({"ablate", "--sweep", "k", "--values", "5,10", "--train", Path("train.oddf"), "--val",
                         Path("val.oddf"), "--input", Path("input.oddf"), "--config", Path("cfg.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) rows += !line.empty() && line[0] != '#';
  EXPECT_EQ(rows, 3u);  // header + two values
}

TEST_F(CliTest, ExitCodes) {
  auto r = RunCli({"frobnicate"});
  EXPECT_EQ(r.status, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(LastErrorLine(r.err)["exit"], 1);

  r = RunCli({});
  EXPECT_EQ(r.status, kExitUsage);

  r = RunCli({"stream", "--train", Path("train.oddf")});
  EXPECT_EQ(r.status, kExitUsage);

  std::ofstream(Path("bad.json")) << R"({"kapa": 1})";
  r = RunCli({"calibrate", "--train", Path("train.oddf"), "--val", Path("val.oddf"), "--config", Path("bad.json")});
  EXPECT_EQ(r.status, kExitUsage);
  EXPECT_EQ(LastErrorLine(r.err)["error"], "InvalidConfig");

  std::ofstream(Path("junk.oddf")) << "JUNKJUNKJUNKJUNKJUNK";
  r = RunCli({"calibrate", "--train", Path("junk.oddf"), "--val", Path("val.oddf")});
  EXPECT_EQ(r.status, kExitData);
  EXPECT_EQ(LastErrorLine(r.err)["error"], "BadMagic");

  r = RunCli({"calibrate", "--train", Path("missing.oddf"), "--val", Path("val.oddf")});
  EXPECT_EQ(r.status, kExitData);
}

}  // namespace
}  // namespace oddstream::cli
