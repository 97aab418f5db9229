// Copyright 2026 The Shortgrade Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shortgrade/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "shortgrade/serialization.h"

#ifndef SHORTGRADE_TEST_DATA_DIR
#error "SHORTGRADE_TEST_DATA_DIR must be defined"
#endif

namespace shortgrade {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Data(const std::string& name) {
  return std::string(SHORTGRADE_TEST_DATA_DIR) + "/" + name;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shortgrade_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  const CliResult none = Cli({});
  EXPECT_EQ(none.code, kExitUsageError);
  const Json err = Json::parse(none.err);
  EXPECT_TRUE(err["error"].contains("code"));
  EXPECT_EQ(none.err.find('\n'), none.err.size() - 1);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"calibrate", "--no-such-flag"}).code, kExitUsageError);
  EXPECT_EQ(Cli({"validate", "--session", "x", "--risk-method", "coin"}).code, kExitUsageError);
}

TEST_F(CliTest, DomainErrorsExitOne) {
  const CliResult missing = Cli({"stats", "-i", Path("absent.jsonl")});
  EXPECT_EQ(missing.code, kExitDomainError);
  EXPECT_EQ(Json::parse(missing.err)["error"]["code"], "io_error");
  std::ofstream(Path("bad.jsonl")) << "{\"record_id\":\"a\",\"s\":0.5}\n";
  EXPECT_EQ(Cli({"calibrate", "-i", Path("bad.jsonl")}).code, kExitDomainError);
}

TEST_F(CliTest, StatsOnEmptyFile) {
  std::ofstream(Path("empty.jsonl")).close();
  const CliResult r = Cli({"stats", "-i", Path("empty.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["record_count"], 0);
  EXPECT_EQ(j["question_count"], 0);
  EXPECT_EQ(j["correct_fraction"], 0.0);
}

TEST_F(CliTest, CalibrateFourItems) {
  const CliResult r = Cli({"calibrate", "-i", Data("four_items.jsonl"), "--cmin-incorrect",
                           "1.0", "--cmin-correct", "1.0", "--bootstrap-trials", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["thresholds"]["t_incorrect"].get<double>(), 0.45);
  EXPECT_DOUBLE_EQ(j["thresholds"]["t_correct"].get<double>(), 0.45);
  EXPECT_FALSE(j["thresholds"]["normalized"].get<bool>());
  EXPECT_EQ(j["coverage"]["f_incorrect"], 0.5);
  EXPECT_EQ(j["coverage"]["f_correct"], 0.5);
  EXPECT_EQ(j["seed"], 42);
}

TEST_F(CliTest, PayloadMatchesFlags) {
  std::ifstream in(Data("four_items.jsonl"));
  Json records = Json::array();
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) records.push_back(Json::parse(line));
  }
  const Json payload = {{"records", records},
                        {"constraints", {{"c_min_incorrect", 1.0}, {"c_min_correct", 1.0}}},
                        {"bootstrap_trials", 10}};
  std::ofstream(Path("payload.json")) << payload.dump();
  const CliResult a = Cli({"calibrate", "--payload", Path("payload.json")});
  const CliResult b = Cli({"calibrate", "-i", Data("four_items.jsonl"), "--cmin-incorrect",
                           "1.0", "--cmin-correct", "1.0", "--bootstrap-trials", "10"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(Cli({"calibrate", "--payload", Path("payload.json"), "-i", "x"}).code,
            kExitUsageError);
}

TEST_F(CliTest, OutputsAreByteIdenticalAcrossRuns) {
  const std::vector<std::string> args = {"synth", "--kind", "scores", "--n", "300", "--seed", "4"};
  const CliResult a = Cli(args);
  const CliResult b = Cli(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::ofstream(Path("scores.jsonl")) << a.out;
  const std::vector<std::string> cal = {"calibrate", "-i", Path("scores.jsonl"),
                                        "--bootstrap-trials", "30", "--seed", "9"};
  EXPECT_EQ(Cli(cal).out, Cli(cal).out);
  const std::vector<std::string> curve = {"curves", "-i", Path("scores.jsonl"), "--side",
                                          "correct", "--points", "11"};
  const CliResult c = Cli(curve);
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_EQ(c.out.substr(0, c.out.find('\n')), "threshold,accuracy,coverage,n");
  EXPECT_EQ(std::count(c.out.begin(), c.out.end(), '\n'), 12);
}

TEST_F(CliTest, CorpusPipeline) {
  const CliResult synth =
      Cli({"synth", "--kind", "corpus", "--questions", "30", "-o", Path("raw.jsonl")});
  ASSERT_EQ(synth.code, kExitOk) << synth.err;

  const CliResult ingest = Cli({"ingest", "-i", Path("raw.jsonl"), "--dedup", "-o",
                                Path("corpus.jsonl")});
  ASSERT_EQ(ingest.code, kExitOk) << ingest.err;
  EXPECT_EQ(Json::parse(ingest.out)["accepted"], 300);

  const CliResult stats = Cli({"stats", "-i", Path("corpus.jsonl")});
  EXPECT_EQ(Json::parse(stats.out)["question_count"], 30);

  const CliResult split =
      Cli({"split", "-i", Path("corpus.jsonl"), "--validation-questions", "5",
           "--test-questions", "5", "--out-prefix", Path("part-"), "--seed", "3"});
  ASSERT_EQ(split.code, kExitOk) << split.err;
  for (const char* part : {"train", "validation", "test"}) {
    EXPECT_TRUE(fs::exists(Path(std::string("part-") + part + ".jsonl"))) << part;
  }

  const CliResult train = Cli({"train", "-i", Path("part-train.jsonl"), "--head",
                               Path("head.bin"), "--epochs", "2", "--learning-rate", "0.3"});
  ASSERT_EQ(train.code, kExitOk) << train.err;
  const Json history = Json::parse(train.out)["loss_history"];
  ASSERT_EQ(history.size(), 3u);
  EXPECT_LT(history[2].get<double>(), history[0].get<double>());

  const CliResult score = Cli({"score", "-i", Path("part-validation.jsonl"), "--head",
                               Path("head.bin"), "-o", Path("scored.jsonl")});
  ASSERT_EQ(score.code, kExitOk) << score.err;
  const std::string validation = Slurp(Path("part-validation.jsonl"));
  EXPECT_EQ(ReadScoredJsonlFile(Path("scored.jsonl")).items.size(),
            static_cast<size_t>(std::count(validation.begin(), validation.end(), '\n')));

  const CliResult cal = Cli({"calibrate", "-i", Path("scored.jsonl"), "--cmin-incorrect", "0.9",
                            "--cmin-correct", "0.9", "--bootstrap-trials", "20", "-o",
                            Path("cal.json")});
  ASSERT_EQ(cal.code, kExitOk) << cal.err;

  const CliResult grade = Cli({"grade", "-i", Path("scored.jsonl"), "--calibration",
                              Path("cal.json"), "-o", Path("session.json")});
  ASSERT_EQ(grade.code, kExitOk) << grade.err;
  const Json session = ReadJsonFile(Path("session.json"));
  {
    std::ofstream grades(Path("grades.jsonl"));
    for (const Json& id : session["queue"]) {
      grades << Json{{"record_id", id}, {"grade", "correct"}, {"grader_id", "t"}}.dump() << "\n";
    }
  }
  const CliResult graded = Cli({"grade", "-i", Path("scored.jsonl"), "--calibration",
                               Path("cal.json"), "--grades", Path("grades.jsonl"), "-o",
                               Path("graded.json")});
  ASSERT_EQ(graded.code, kExitOk) << graded.err;
  EXPECT_EQ(ReadJsonFile(Path("graded.json"))["status"], "awaiting_validation");

  const CliResult validated =
      Cli({"validate", "--session", Path("graded.json"), "--session-out", Path("final.json")});
  ASSERT_EQ(validated.code, kExitOk) << validated.err;
  EXPECT_TRUE(Json::parse(validated.out).contains("verdict"));
  EXPECT_TRUE(fs::exists(Path("final.json")));
  // A closed session cannot be validated twice.
  const Json final_session = ReadJsonFile(Path("final.json"));
  if (final_session["status"] != "awaiting_validation") {
    EXPECT_EQ(Cli({"validate", "--session", Path("final.json")}).code, kExitDomainError);
  }
}

TEST_F(CliTest, BalanceReportsSeed) {
  std::ofstream(Path("raw.jsonl"))
      << R"({"record_id":"a","question_id":"1","question":"q1","correct_answer":"x","given_answer":"x","grade":"correct"})"
      << "\n"
      << R"({"record_id":"b","question_id":"2","question":"q2","correct_answer":"y","given_answer":"y","grade":"correct"})"
      << "\n";
  const CliResult r = Cli({"balance", "-i", Path("raw.jsonl"), "-o", Path("bal.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["after"]["incorrect"], 2);
}

TEST_F(CliTest, SimulateSmall) {
  const CliResult r = Cli({"simulate", "--trials", "10", "--synthetic-size", "1000",
                           "--bootstrap-trials", "50", "--seed", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["config"]["seed"], 3);
  EXPECT_EQ(j["exam_size"], 50);
  EXPECT_TRUE(j["clean"].contains("accept_rate"));
  EXPECT_TRUE(j["degraded"].contains("reject_rate"));
}

}  // namespace
}  // namespace shortgrade
