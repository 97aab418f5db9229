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

#include "shortgrade/service.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "shortgrade/synthetic.h"

namespace shortgrade {
namespace {

namespace fs = std::filesystem;

Json Records(const ScoredDataset& data) {
  Json rows = Json::array();
  for (const ScoredRecord& r : data.items) rows.push_back(ScoredToJson(r));
  return rows;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shortgrade_service_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    config_.data_dir = dir_.string();
    config_.snapshot_every = 4;
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::unique_ptr<Service> Start() { return std::make_unique<Service>(config_); }

  static Json Call(Service& service, const std::string& method, const std::string& path,
                   const Json& body, int want_status,
                   const std::map<std::string, std::string>& headers = {}) {
    const HttpResponse r =
        service.Handle(method, path, body.is_null() ? "" : body.dump(), headers);
    EXPECT_EQ(r.status, want_status) << method << " " << path << ": " << r.body;
    return Json::parse(r.body);
  }

  static Json CalibrationBody() {
    SyntheticScoreConfig sc;
    sc.n = 400;
    sc.seed = 3;
    return {{"records", Records(MakeSyntheticScores(sc))},
            {"constraints", {{"c_min_incorrect", 0.95}, {"c_min_correct", 0.9}}},
            {"bootstrap_trials", 20},
            {"seed", 5}};
  }

  static Json ExamRecords() {
    SyntheticScoreConfig sc;
    sc.n = 60;
    sc.seed = 9;
    return Records(MakeSyntheticScores(sc));
  }

  std::string CreateCalibration(Service& service) {
    return Call(service, "POST", "/calibrations", CalibrationBody(), 201)["id"];
  }

  std::string CreateSession(Service& service, const std::string& calibration_id) {
    const Json created =
        Call(service, "POST", "/sessions",
             {{"calibration_id", calibration_id}, {"records", ExamRecords()},
              {"session_id", "exam1"}},
             201);
    EXPECT_EQ(created["sequence_number"], 1);
    return created["session_id"];
  }

  void DrainQueue(Service& service, const std::string& id) {
    const Json queue = Call(service, "GET", "/sessions/" + id + "/queue", nullptr, 200);
    for (const Json& item : queue["items"]) {
      const double s = item["s"];
      Call(service, "POST", "/sessions/" + id + "/grades",
           {{"record_id", item["record_id"]},
            {"grade", s > 0.67 ? "correct" : "incorrect"},
            {"grader_id", "t"}},
           200);
    }
  }

  fs::path dir_;
  ServiceConfig config_;
};

TEST_F(ServiceTest, Healthz) {
  auto service = Start();
  EXPECT_EQ(Call(*service, "GET", "/healthz", nullptr, 200)["status"], "ok");
}

TEST_F(ServiceTest, BearerTokenRequiredWhenConfigured) {
  config_.token = "s3cret";
  auto service = Start();
  EXPECT_EQ(Call(*service, "GET", "/healthz", nullptr, 200)["status"], "ok");
  const Json denied = Call(*service, "GET", "/sessions", nullptr, 401);
  EXPECT_EQ(denied["error"]["code"], "unauthorized");
  Call(*service, "GET", "/sessions", nullptr, 401, {{"authorization", "Bearer nope"}});
  Call(*service, "GET", "/sessions", nullptr, 200, {{"authorization", "Bearer s3cret"}});
}

TEST_F(ServiceTest, CalibrationMatchesLibraryAndIsDeterministic) {
  auto service = Start();
  const Json body = CalibrationBody();
  const HttpResponse a = service->Handle("POST", "/calibrations", body.dump());
  const HttpResponse b = service->Handle("POST", "/calibrations", body.dump());
  ASSERT_EQ(a.status, 201);
  EXPECT_EQ(a.body, b.body);
  const Json doc = Json::parse(a.body);
  const Calibration lib =
      Calibrate(ScoredFromJsonArray(body["records"], FieldLimits{}), AccuracyConstraints{0.95, 0.9});
  EXPECT_EQ(doc["thresholds"]["t_incorrect"].get<double>(), lib.thresholds.t_incorrect);
  EXPECT_EQ(doc["thresholds"]["t_star"].get<double>(), lib.thresholds.t_star);
  EXPECT_EQ(doc["thresholds"]["t_correct"].get<double>(), lib.thresholds.t_correct);
  const HttpResponse fetched =
      service->Handle("GET", "/calibrations/" + doc["id"].get<std::string>(), "");
  EXPECT_EQ(fetched.status, 200);
  EXPECT_EQ(fetched.body, a.body);
  Call(*service, "GET", "/calibrations/0000000000000000", nullptr, 404);
}

TEST_F(ServiceTest, VacuousConstraintsDeferNothing) {
  auto service = Start();
  Json body = CalibrationBody();
  body["constraints"] = {{"c_min_incorrect", 0.0}, {"c_min_correct", 0.0}};
  const Json doc = Call(*service, "POST", "/calibrations", body, 201);
  EXPECT_EQ(doc["coverage"]["f_deferred"].get<double>(), 0.0);
}

TEST_F(ServiceTest, RequestErrors) {
  auto service = Start();
  Call(*service, "GET", "/nowhere", nullptr, 404);
  Call(*service, "DELETE", "/calibrations", nullptr, 405);
  EXPECT_EQ(service->Handle("POST", "/calibrations", "{oops").status, 400);
  Call(*service, "POST", "/calibrations", {{"records", Json::array()}}, 422);
  Call(*service, "GET", "/sessions/unknown", nullptr, 404);
  Call(*service, "POST", "/sessions", {{"calibration_id", "feedface"}, {"records", ExamRecords()}},
       404);
  const std::string cal = CreateCalibration(*service);
  Call(*service, "POST", "/sessions", {{"calibration_id", cal}, {"records", Json::array()}}, 422);
  CreateSession(*service, cal);
  Call(*service, "POST", "/sessions",
       {{"calibration_id", cal}, {"records", ExamRecords()}, {"session_id", "exam1"}}, 409);
  Call(*service, "POST", "/sessions/exam1/grades", {{"record_id", "s0"}, {"grade", "maybe"}},
       400);
}

TEST_F(ServiceTest, HappyPathAndStateGuards) {
  auto service = Start();
  const std::string id = CreateSession(*service, CreateCalibration(*service));
  Call(*service, "POST", "/sessions/" + id + "/validate", Json::object(), 409);

  const Json queue = Call(*service, "GET", "/sessions/" + id + "/queue", nullptr, 200);
  ASSERT_FALSE(queue["items"].empty());
  EXPECT_EQ(queue["head"], queue["items"][0]["record_id"]);
  const Json export_before = Call(*service, "GET", "/sessions/" + id, nullptr, 200);
  for (const auto& [record_id, d] : export_before["decisions"].items()) {
    if (d["kind"] != "deferred") {
      Call(*service, "POST", "/sessions/" + id + "/grades",
           {{"record_id", record_id}, {"grade", "correct"}}, 409);
      break;
    }
  }

  DrainQueue(*service, id);
  const Json drained = Call(*service, "GET", "/sessions/" + id, nullptr, 200);
  EXPECT_EQ(drained["status"], "awaiting_validation");

  const Json validated =
      Call(*service, "POST", "/sessions/" + id + "/validate", {{"m", 0.0}}, 200);
  EXPECT_TRUE(validated["report"].contains("verdict"));
  const Json events = Call(*service, "GET", "/sessions/" + id + "/events", nullptr, 200);
  uint64_t last = 0;
  for (const Json& e : events["events"]) {
    EXPECT_GT(e["sequence_number"].get<uint64_t>(), last);
    last = e["sequence_number"];
  }
  EXPECT_EQ(last, validated["sequence_number"].get<uint64_t>());
  const std::string kind = events["events"].back()["kind"];
  EXPECT_TRUE(kind == "Validated" || kind == "Rejected") << kind;

  const Json list = Call(*service, "GET", "/sessions", nullptr, 200);
  ASSERT_EQ(list["sessions"].size(), 1u);
  EXPECT_EQ(list["sessions"][0]["session_id"], id);
}

TEST_F(ServiceTest, ReplayReconstructsExport) {
  auto service = Start();
  const std::string id = CreateSession(*service, CreateCalibration(*service));
  DrainQueue(*service, id);
  Call(*service, "POST", "/sessions/" + id + "/validate", Json::object(), 200);
  Json exported = service->ExportSession(id);
  const std::vector<SessionEvent> events =
      ReadEventLog((dir_ / "sessions" / id / "events.jsonl").string());
  Json replayed = ToJson(ReplayEvents(events));
  exported.erase("sequence_number");
  EXPECT_EQ(replayed.dump(), exported.dump());
}

TEST_F(ServiceTest, RestartRestoresIdenticalState) {
  std::string id, before;
  {
    auto service = Start();
    id = CreateSession(*service, CreateCalibration(*service));
    DrainQueue(*service, id);
    before = service->Handle("GET", "/sessions/" + id, "").body;
  }
  EXPECT_TRUE(fs::exists(dir_ / "sessions" / id / "snapshot.json"));
  auto service = Start();
  EXPECT_EQ(service->Handle("GET", "/sessions/" + id, "").body, before);
  Call(*service, "POST", "/sessions/" + id + "/validate", Json::object(), 200);
}

TEST_F(ServiceTest, RestartWithoutSnapshots) {
  config_.snapshot_every = 0;
  std::string id, before;
  {
    auto service = Start();
    id = CreateSession(*service, CreateCalibration(*service));
    DrainQueue(*service, id);
    before = service->Handle("GET", "/sessions/" + id, "").body;
  }
  EXPECT_FALSE(fs::exists(dir_ / "sessions" / id / "snapshot.json"));
  auto service = Start();
  EXPECT_EQ(service->Handle("GET", "/sessions/" + id, "").body, before);
}

TEST_F(ServiceTest, TornTailIsDiscarded) {
  std::string id, before;
  {
    auto service = Start();
    id = CreateSession(*service, CreateCalibration(*service));
    const Json queue = Call(*service, "GET", "/sessions/" + id + "/queue", nullptr, 200);
    Call(*service, "POST", "/sessions/" + id + "/grades",
         {{"record_id", queue["head"]}, {"grade", "correct"}}, 200);
    before = service->Handle("GET", "/sessions/" + id, "").body;
  }
  {
    std::ofstream log(dir_ / "sessions" / id / "events.jsonl", std::ios::app);
    log << R"({"kind":"ManualGrade","payload":{"record_id")";
  }
  auto service = Start();
  EXPECT_EQ(service->Handle("GET", "/sessions/" + id, "").body, before);
  const Json queue = Call(*service, "GET", "/sessions/" + id + "/queue", nullptr, 200);
  const Json graded = Call(*service, "POST", "/sessions/" + id + "/grades",
                           {{"record_id", queue["head"]}, {"grade", "incorrect"}}, 200);
  EXPECT_EQ(graded["sequence_number"], 3);
  EXPECT_EQ(ReadEventLog((dir_ / "sessions" / id / "events.jsonl").string()).size(), 3u);
}

TEST_F(ServiceTest, CalibrationsSurviveRestart) {
  std::string cal;
  {
    auto service = Start();
    cal = CreateCalibration(*service);
  }
  auto service = Start();
  Call(*service, "GET", "/calibrations/" + cal, nullptr, 200);
  Call(*service, "POST", "/sessions", {{"calibration_id", cal}, {"records", ExamRecords()}}, 201);
}

TEST_F(ServiceTest, SpotCheckFlow) {
  auto service = Start();
  Json body = CalibrationBody();
  // A lenient correct-side constraint qualifies for a spot check up front.
  body["constraints"] = {{"c_min_incorrect", 0.95}, {"c_min_correct", 0.6}};
  const std::string cal = Call(*service, "POST", "/calibrations", body, 201)["id"];
  const std::string id = CreateSession(*service, cal);
  const Json planned = Call(*service, "POST", "/sessions/" + id + "/spot-check",
                            {{"side", "correct"}, {"target_confidence", 0.9}}, 200);
  const Json plan = planned["plan"];
  EXPECT_EQ(plan["sample_size"].get<size_t>(),
            std::min<size_t>(5, plan["bucket_size"].get<size_t>()));
  Json last;
  for (const Json& rid : plan["record_ids"]) {
    last = Call(*service, "POST", "/sessions/" + id + "/spot-check/grades",
                {{"record_id", rid}, {"grade", "correct"}}, 200);
  }
  ASSERT_TRUE(last.contains("spot_check_results"));
  EXPECT_TRUE(last["spot_check_results"]["correct"]["pass"].get<bool>());
  Call(*service, "POST", "/sessions/" + id + "/spot-check", {{"side", "sideways"}}, 400);
}

TEST_F(ServiceTest, ConfigFromJsonAndEnvironment) {
  const ServiceConfig c = ServiceConfig::FromJson(
      {{"listen", "0.0.0.0:9123"}, {"data_dir", "/tmp/x"}, {"snapshot_every", 3}});
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9123);
  EXPECT_EQ(c.snapshot_every, 3u);
  ServiceConfig env = c;
  ::setenv("SHORTGRADE_TOKEN", "tok", 1);
  ::setenv("SHORTGRADE_LISTEN", "127.0.0.1:0", 1);
  env.ApplyEnvironment();
  ::unsetenv("SHORTGRADE_TOKEN");
  ::unsetenv("SHORTGRADE_LISTEN");
  EXPECT_EQ(env.token, "tok");
  EXPECT_EQ(env.port, 0);
  EXPECT_EQ(env.data_dir, "/tmp/x");
}

TEST(HttpStatusFor, Mapping) {
  EXPECT_EQ(HttpStatusFor(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kUnauthorized), 401);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kNotFound), 404);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kConflict), 409);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kEmptyDataset), 422);
  EXPECT_EQ(HttpStatusFor(ErrorCode::kTransport), 502);
}

TEST(EventJson, RoundTripAndUnknownKind) {
  SessionEvent e;
  e.sequence_number = 7;
  e.timestamp = "2026-01-01T00:00:00.000Z";
  e.kind = EventKind::kSpotCheckPlanned;
  e.payload = {{"side", "correct"}};
  const SessionEvent back = EventFromJson(ToJson(e));
  EXPECT_EQ(back.sequence_number, 7u);
  EXPECT_EQ(back.kind, EventKind::kSpotCheckPlanned);
  EXPECT_EQ(back.payload, e.payload);
  EXPECT_FALSE(ParseEventKind("Deleted").has_value());
  EXPECT_EQ(EventKindName(EventKind::kAutoGraded), "AutoGraded");
}

}  // namespace
}  // namespace shortgrade
