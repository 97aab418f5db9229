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

#include "shortgrade/serialization.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "shortgrade/error.h"
#include "shortgrade/text.h"

namespace shortgrade {

namespace {

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

const Json& Field(const Json& j, const char* key) {
  if (!j.is_object()) Invalid(std::string("expected an object holding ") + key);
  auto it = j.find(key);
  if (it == j.end()) Invalid(std::string("missing field: ") + key);
  return *it;
}

// Non-finite values travel as the strings "inf", "-inf" and "nan".
Json Number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double AsNumber(const Json& v, const char* key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  Invalid(std::string("field ") + key + " must be a number");
}

double GetDouble(const Json& j, const char* key) {
  return AsNumber(Field(j, key), key);
}

double GetDouble(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return AsNumber(j.at(key), key);
}

size_t GetSize(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0)) {
    Invalid(std::string("field ") + key + " must be a non-negative integer");
  }
  return v.get<size_t>();
}

bool GetBool(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_boolean()) Invalid(std::string("field ") + key + " must be a boolean");
  return v.get<bool>();
}

std::string GetString(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_string()) Invalid(std::string("field ") + key + " must be a string");
  return v.get<std::string>();
}

Json Optional(const std::optional<double>& v) {
  return v ? Number(*v) : Json(nullptr);
}

std::optional<double> GetOptional(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (v.is_null()) return std::nullopt;
  return AsNumber(v, key);
}

template <typename T, typename Parse>
T GetEnum(const Json& j, const char* key, Parse parse) {
  const std::string text = GetString(j, key);
  std::optional<T> value = parse(text);
  if (!value) Invalid(std::string("field ") + key + " has unknown value " + text);
  return *value;
}

Grade GetGrade(const Json& j, const char* key) {
  return GetEnum<Grade>(j, key, ParseGrade);
}

std::optional<std::string> IdField(const Json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
  return std::nullopt;
}

Json SideToJson(const SideValidation& side) {
  return {{"exam_accuracy", Optional(side.exam_accuracy)},
          {"reference_accuracy", side.reference_accuracy},
          {"delta", Optional(side.delta)},
          {"n_diff", side.n_diff},
          {"n_reference", side.n_reference},
          {"sufficient", side.sufficient},
          {"recommended_tightening", side.recommended_tightening}};
}

SideValidation SideFromJson(const Json& j) {
  SideValidation side;
  side.exam_accuracy = GetOptional(j, "exam_accuracy");
  side.reference_accuracy = GetDouble(j, "reference_accuracy");
  side.delta = GetOptional(j, "delta");
  side.n_diff = GetSize(j, "n_diff");
  side.n_reference = GetSize(j, "n_reference");
  side.sufficient = GetBool(j, "sufficient");
  side.recommended_tightening = GetDouble(j, "recommended_tightening");
  return side;
}

Json CountsToJson(const VerdictCounts& counts, size_t trials) {
  return {{"accept", counts.accept},
          {"accept_with_warning", counts.accept_with_warning},
          {"reject", counts.reject},
          {"insufficient_evidence", counts.insufficient},
          {"accept_rate", counts.accept_rate(trials)},
          {"reject_rate", counts.reject_rate(trials)},
          {"mean_delta", counts.mean_delta},
          {"sd_delta", counts.sd_delta},
          {"delta_count", counts.deltas}};
}

template <typename Map>
Json CountMap(const Map& map) {
  Json out = Json::object();
  for (const auto& [key, count] : map) {
    if constexpr (std::is_same_v<typename Map::key_type, std::string>) {
      out[key] = count;
    } else {
      out[std::to_string(key)] = count;
    }
  }
  return out;
}

}  // namespace

std::optional<GradingRecord> RecordFromJson(const Json& object, size_t line,
                                            const FieldLimits& limits,
                                            std::string& reason) {
  if (!object.is_object()) {
    reason = "not a JSON object";
    return std::nullopt;
  }
  GradingRecord record;
  const std::optional<std::string> question_id = IdField(object, "question_id");
  if (!question_id || question_id->empty()) {
    reason = "missing field: question_id";
    return std::nullopt;
  }
  record.question_id = *question_id;

  for (const char* key : {"question", "correct_answer", "given_answer", "grade"}) {
    auto it = object.find(key);
    if (it == object.end() || !it->is_string()) {
      reason = std::string("missing field: ") + key;
      return std::nullopt;
    }
  }
  const std::optional<Grade> grade =
      ParseGrade(object["grade"].get_ref<const std::string&>());
  if (!grade) {
    reason = "grade must be \"correct\" or \"incorrect\"";
    return std::nullopt;
  }
  record.grade = *grade;

  record.question = TruncateCodePoints(
      NormalizeText(object["question"].get_ref<const std::string&>()),
      limits.max_question_chars);
  record.correct_answer = TruncateCodePoints(
      NormalizeText(object["correct_answer"].get_ref<const std::string&>()),
      limits.max_answer_chars);
  record.given_answer = TruncateCodePoints(
      NormalizeText(object["given_answer"].get_ref<const std::string&>()),
      limits.max_answer_chars);
  if (record.question.empty()) {
    reason = "empty question after normalization";
    return std::nullopt;
  }
  if (record.correct_answer.empty()) {
    reason = "empty correct_answer after normalization";
    return std::nullopt;
  }

  const std::optional<std::string> record_id = IdField(object, "record_id");
  record.record_id = record_id && !record_id->empty()
                         ? *record_id
                         : "q" + record.question_id + "#" + std::to_string(line);

  auto language = object.find("language");
  if (language != object.end() && language->is_string() &&
      !language->get_ref<const std::string&>().empty()) {
    record.language = language->get<std::string>();
  }
  auto synthetic = object.find("synthetic");
  if (synthetic != object.end() && synthetic->is_boolean()) {
    record.synthetic = synthetic->get<bool>();
  }
  return record;
}

Json RecordToJson(const GradingRecord& record) {
  Json j = {{"record_id", record.record_id},
            {"question_id", record.question_id},
            {"question", record.question},
            {"correct_answer", record.correct_answer},
            {"given_answer", record.given_answer},
            {"grade", GradeName(record.grade)}};
  if (record.language) j["language"] = *record.language;
  if (record.synthetic) j["synthetic"] = true;
  return j;
}

void WriteCorpusJsonl(std::ostream& out, const Corpus& corpus) {
  for (const GradingRecord& record : corpus.records) {
    out << RecordToJson(record).dump() << '\n';
  }
}

Json ScoredToJson(const ScoredRecord& item) {
  Json j = RecordToJson(item.record);
  j["s"] = item.s;
  return j;
}

void WriteScoredJsonl(std::ostream& out, const ScoredDataset& data) {
  for (const ScoredRecord& item : data.items) out << ScoredToJson(item).dump() << '\n';
}

namespace {

ScoredRecord ScoredFromObject(const Json& object, size_t line,
                              const FieldLimits& limits, bool require_score,
                              bool* has_score) {
  std::string reason;
  std::optional<GradingRecord> record = RecordFromJson(object, line, limits, reason);
  if (!record) Invalid("record " + std::to_string(line) + ": " + reason);
  ScoredRecord item;
  item.record = std::move(*record);
  auto s = object.find("s");
  const bool present = s != object.end() && !s->is_null();
  if (has_score) *has_score = present;
  if (present) {
    if (!s->is_number() || !std::isfinite(s->get<double>())) {
      Invalid("record " + std::to_string(line) + ": s must be a finite number");
    }
    item.s = s->get<double>();
    if (item.s < -1.0 || item.s > 1.0) {
      Invalid("record " + std::to_string(line) + ": s must lie in [-1, 1]");
    }
  } else if (require_score) {
    Invalid("record " + std::to_string(line) + ": missing field: s");
  }
  return item;
}

}  // namespace

ScoredDataset ReadScoredJsonl(std::istream& in, const FieldLimits& limits) {
  if (!in) throw Error(ErrorCode::kIo, "scored source is not readable");
  ScoredDataset data;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json object = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (object.is_discarded()) {
      Invalid("line " + std::to_string(line_number) + ": invalid JSON");
    }
    data.items.push_back(ScoredFromObject(object, line_number, limits, true, nullptr));
  }
  return data;
}

ScoredDataset ReadScoredJsonlFile(const std::string& path, const FieldLimits& limits) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ReadScoredJsonl(in, limits);
}

ScoredDataset ScoredFromJsonArray(const Json& array, const FieldLimits& limits,
                                  bool* missing_scores) {
  if (!array.is_array()) Invalid("records must be an array");
  ScoredDataset data;
  if (missing_scores) *missing_scores = false;
  for (size_t i = 0; i < array.size(); ++i) {
    bool has_score = false;
    data.items.push_back(ScoredFromObject(array[i], i + 1, limits,
                                          missing_scores == nullptr, &has_score));
    if (!has_score && missing_scores) *missing_scores = true;
  }
  return data;
}

Corpus CorpusFromJsonArray(const Json& array, const FieldLimits& limits) {
  if (!array.is_array()) Invalid("records must be an array");
  Corpus corpus;
  for (size_t i = 0; i < array.size(); ++i) {
    std::string reason;
    std::optional<GradingRecord> record = RecordFromJson(array[i], i + 1, limits, reason);
    if (!record) Invalid("record " + std::to_string(i + 1) + ": " + reason);
    corpus.records.push_back(std::move(*record));
  }
  return corpus;
}

Json ToJson(const IngestReport& report) {
  Json rejections = Json::array();
  for (const Rejection& r : report.rejections) {
    rejections.push_back({{"line", r.line}, {"reason", r.reason}});
  }
  return {{"accepted", report.accepted},
          {"rejected", report.rejected},
          {"duplicate_conflicts", report.duplicate_conflicts},
          {"rejections", rejections}};
}

Json ToJson(const CorpusStats& stats) {
  return {{"record_count", stats.record_count},
          {"question_count", stats.question_count},
          {"correct_fraction", stats.correct_fraction},
          {"unique_answers_per_question", CountMap(stats.unique_answers_per_question)},
          {"answer_word_count", CountMap(stats.answer_word_count)},
          {"records_per_language", CountMap(stats.records_per_language)}};
}

Json ToJson(const AccuracyConstraints& c) {
  return {{"c_min_incorrect", c.c_min_incorrect}, {"c_min_correct", c.c_min_correct}};
}

Json ToJson(const Thresholds& th) {
  return {{"t_incorrect", th.t_incorrect},
          {"t_star", th.t_star},
          {"t_correct", th.t_correct},
          {"normalized", th.normalized}};
}

Json ToJson(const CoverageReport& c) {
  return {{"n_incorrect", c.n_incorrect}, {"n_deferred", c.n_deferred},
          {"n_correct", c.n_correct},     {"total", c.total},
          {"f_incorrect", c.f_incorrect}, {"f_deferred", c.f_deferred},
          {"f_correct", c.f_correct}};
}

Json ToJson(const Calibration& c) {
  return {{"thresholds", ToJson(c.thresholds)},
          {"coverage", ToJson(c.coverage)},
          {"constraints", ToJson(c.constraints)},
          {"t_star_accuracy", c.t_star_accuracy},
          {"incorrect_unmet", c.incorrect_unmet},
          {"correct_unmet", c.correct_unmet}};
}

Json ToJson(const ClassMetrics& m) {
  return {{"threshold", m.threshold},
          {"true_correct", m.true_correct},
          {"false_correct", m.false_correct},
          {"true_incorrect", m.true_incorrect},
          {"false_incorrect", m.false_incorrect},
          {"precision_correct", m.precision_correct},
          {"recall_correct", m.recall_correct},
          {"precision_incorrect", m.precision_incorrect},
          {"recall_incorrect", m.recall_incorrect},
          {"accuracy", m.accuracy},
          {"undefined", m.undefined}};
}

Json ToJson(const std::vector<CurvePoint>& curve) {
  Json out = Json::array();
  for (const CurvePoint& p : curve) {
    out.push_back({{"threshold", p.threshold},
                   {"accuracy", p.accuracy},
                   {"coverage", p.coverage},
                   {"n", p.n}});
  }
  return out;
}

Json ToJson(const ReferenceProfile& r) {
  Json sigma = Json::array();
  for (const SigmaEntry& e : r.sigma) {
    sigma.push_back({{"exam_size", e.exam_size},
                     {"sigma_diff_incorrect", e.sigma_diff_incorrect},
                     {"sigma_diff_correct", e.sigma_diff_correct},
                     {"sigma_diff_pooled", e.sigma_diff_pooled},
                     {"pooled_deviations", e.pooled_deviations}});
  }
  return {{"thresholds", ToJson(r.thresholds)},
          {"c_diff_incorrect", r.c_diff_incorrect},
          {"c_diff_correct", r.c_diff_correct},
          {"c_diff_pooled", r.c_diff_pooled},
          {"c_easy_incorrect", r.c_easy_incorrect},
          {"c_easy_correct", r.c_easy_correct},
          {"single_threshold_accuracy", r.single_threshold_accuracy},
          {"n_diff_incorrect", r.n_diff_incorrect},
          {"n_diff_correct", r.n_diff_correct},
          {"n_easy_incorrect", r.n_easy_incorrect},
          {"n_easy_correct", r.n_easy_correct},
          {"n_total", r.n_total},
          {"sigma", sigma}};
}

Json ToJson(const ValidationReport& r) {
  Json sides = Json::array();
  for (Side s : r.spot_check_sides) sides.push_back(SideName(s));
  return {{"verdict", VerdictName(r.verdict)},
          {"delta_incorrect", Optional(r.incorrect.delta)},
          {"delta_correct", Optional(r.correct.delta)},
          {"delta_pooled", Optional(r.delta_pooled)},
          {"n_diff_incorrect", r.incorrect.n_diff},
          {"n_diff_correct", r.correct.n_diff},
          {"n_diff_pooled", r.n_diff_pooled},
          {"recommended_tightening", r.recommended_tightening},
          {"m", r.m},
          {"n_min", r.n_min},
          {"incorrect", SideToJson(r.incorrect)},
          {"correct", SideToJson(r.correct)},
          {"risk",
           {{"z_incorrect", Optional(r.risk.z_incorrect)},
            {"z_correct", Optional(r.risk.z_correct)},
            {"z_pooled", Optional(r.risk.z_pooled)},
            {"violation_probability", r.risk.violation_probability},
            {"method", RiskMethodName(r.risk.method)}}},
          {"spot_check_sides", sides},
          {"notes", r.notes}};
}

Json ToJson(const SpotCheckPlan& p) {
  return {{"side", SideName(p.side)},
          {"sample_size", p.sample_size},
          {"target_confidence", p.target_confidence},
          {"c_min", p.c_min},
          {"achievable_confidence", p.achievable_confidence},
          {"bucket_size", p.bucket_size},
          {"record_ids", p.record_ids}};
}

Json ToJson(const SpotCheckResult& r) {
  return {{"side", SideName(r.side)},
          {"n", r.n},
          {"errors", r.errors},
          {"observed_accuracy", r.observed_accuracy},
          {"pass", r.pass},
          {"achieved_confidence", r.achieved_confidence}};
}

Json ToJson(const SessionSummary& s) {
  return {{"total", s.total},
          {"auto_correct", s.auto_correct},
          {"auto_incorrect", s.auto_incorrect},
          {"deferred", s.deferred},
          {"deferred_graded", s.deferred_graded},
          {"f_auto_correct", s.f_auto_correct},
          {"f_auto_incorrect", s.f_auto_incorrect},
          {"f_deferred", s.f_deferred},
          {"workload_reduction", s.workload_reduction},
          {"status", SessionStatusName(s.status)}};
}

Json ToJson(const SimulationReport& r) {
  const SimulationConfig& c = r.config;
  return {{"config",
           {{"trials", c.trials},
            {"fraction", c.fraction},
            {"flip", c.flip},
            {"m", c.validate.m},
            {"n_min", c.validate.n_min},
            {"risk_method", RiskMethodName(c.validate.risk_method)},
            {"seed", c.seed}}},
          {"exam_size", r.exam_size},
          {"clean", CountsToJson(r.clean, c.trials)},
          {"degraded", CountsToJson(r.degraded, c.trials)}};
}

Json ToJson(const GradingSession& s) {
  Json items = Json::array();
  for (const ScoredRecord& item : s.items.items) items.push_back(ScoredToJson(item));
  Json decisions = Json::object();
  for (const auto& [id, d] : s.decisions) {
    decisions[id] = {{"kind", DecisionKindName(d.kind)},
                     {"s", d.s},
                     {"single_threshold_prediction",
                      GradeName(d.single_threshold_prediction)}};
  }
  Json manual = Json::object();
  for (const auto& [id, g] : s.manual_grades) {
    manual[id] = {{"grade", GradeName(g.grade)},
                  {"grader_id", g.grader_id},
                  {"timestamp", g.timestamp}};
  }
  Json history = Json::array();
  for (const GradeSubmission& g : s.grade_history) {
    history.push_back({{"record_id", g.record_id},
                       {"grade", GradeName(g.grade.grade)},
                       {"grader_id", g.grade.grader_id},
                       {"timestamp", g.grade.timestamp}});
  }
  Json plans = Json::object();
  for (const auto& [side, plan] : s.spot_checks) plans[SideName(side)] = ToJson(plan);
  Json results = Json::object();
  for (const auto& [side, result] : s.spot_check_results) {
    results[SideName(side)] = ToJson(result);
  }
  return {{"session_id", s.session_id},
          {"status", SessionStatusName(s.status)},
          {"synthetic", s.synthetic},
          {"thresholds", ToJson(s.thresholds)},
          {"constraints", ToJson(s.constraints)},
          {"reference", ToJson(s.reference)},
          {"items", items},
          {"decisions", decisions},
          {"queue", s.queue},
          {"manual_grades", manual},
          {"grade_history", history},
          {"spot_checks", plans},
          {"spot_check_results", results},
          {"validation", s.validation ? ToJson(*s.validation) : Json(nullptr)},
          {"summary", ToJson(Summarize(s))}};
}

Json ToJson(const EmbedderConfig& c) {
  Json j = {{"kind", c.kind == EmbedderKind::kRemote ? "remote" : "hashed_ngram"},
            {"ngram_sizes", c.ngram_sizes},
            {"hash_dim", c.hash_dim},
            {"projection_dim", c.projection_dim},
            {"hash_seed", c.hash_seed}};
  if (c.remote) {
    j["remote"] = {{"url", c.remote->url},
                   {"timeout_ms", c.remote->timeout_ms},
                   {"batch_cap", c.remote->batch_cap},
                   {"token_env", c.remote->token_env}};
  }
  return j;
}

EmbedderConfig EmbedderConfigFromJson(const Json& j) {
  EmbedderConfig c;
  if (!j.is_object()) Invalid("embedder config must be an object");
  if (j.contains("kind")) {
    const std::string kind = GetString(j, "kind");
    if (kind == "remote") {
      c.kind = EmbedderKind::kRemote;
    } else if (kind != "hashed_ngram") {
      Invalid("unknown embedder kind " + kind);
    }
  }
  if (j.contains("ngram_sizes")) {
    c.ngram_sizes.clear();
    for (const Json& n : j.at("ngram_sizes")) {
      if (!n.is_number_integer()) Invalid("ngram_sizes must hold integers");
      c.ngram_sizes.push_back(n.get<int>());
    }
  }
  if (j.contains("hash_dim")) c.hash_dim = GetSize(j, "hash_dim");
  if (j.contains("projection_dim")) c.projection_dim = GetSize(j, "projection_dim");
  if (j.contains("hash_seed")) c.hash_seed = GetSize(j, "hash_seed");
  if (j.contains("remote") && !j.at("remote").is_null()) {
    const Json& r = j.at("remote");
    RemoteBackendConfig remote;
    remote.url = GetString(r, "url");
    if (r.contains("timeout_ms")) remote.timeout_ms = static_cast<int>(GetSize(r, "timeout_ms"));
    if (r.contains("batch_cap")) remote.batch_cap = GetSize(r, "batch_cap");
    if (r.contains("token_env")) remote.token_env = GetString(r, "token_env");
    c.remote = remote;
  }
  c.Validate();
  return c;
}

AccuracyConstraints ConstraintsFromJson(const Json& j) {
  AccuracyConstraints c;
  c.c_min_incorrect = GetDouble(j, "c_min_incorrect", c.c_min_incorrect);
  c.c_min_correct = GetDouble(j, "c_min_correct", c.c_min_correct);
  c.Validate();
  return c;
}

Thresholds ThresholdsFromJson(const Json& j) {
  Thresholds th;
  th.t_incorrect = GetDouble(j, "t_incorrect");
  th.t_star = GetDouble(j, "t_star");
  th.t_correct = GetDouble(j, "t_correct");
  if (j.contains("normalized")) th.normalized = GetBool(j, "normalized");
  th.Validate();
  return th;
}

ReferenceProfile ReferenceFromJson(const Json& j) {
  ReferenceProfile r;
  r.thresholds = ThresholdsFromJson(Field(j, "thresholds"));
  r.c_diff_incorrect = GetDouble(j, "c_diff_incorrect");
  r.c_diff_correct = GetDouble(j, "c_diff_correct");
  r.c_diff_pooled = GetDouble(j, "c_diff_pooled");
  r.c_easy_incorrect = GetDouble(j, "c_easy_incorrect");
  r.c_easy_correct = GetDouble(j, "c_easy_correct");
  r.single_threshold_accuracy = GetDouble(j, "single_threshold_accuracy");
  r.n_diff_incorrect = GetSize(j, "n_diff_incorrect");
  r.n_diff_correct = GetSize(j, "n_diff_correct");
  r.n_easy_incorrect = GetSize(j, "n_easy_incorrect");
  r.n_easy_correct = GetSize(j, "n_easy_correct");
  r.n_total = GetSize(j, "n_total");
  const Json& sigma = Field(j, "sigma");
  if (!sigma.is_array()) Invalid("field sigma must be an array");
  for (const Json& e : sigma) {
    SigmaEntry entry;
    entry.exam_size = GetSize(e, "exam_size");
    entry.sigma_diff_incorrect = GetDouble(e, "sigma_diff_incorrect");
    entry.sigma_diff_correct = GetDouble(e, "sigma_diff_correct");
    entry.sigma_diff_pooled = GetDouble(e, "sigma_diff_pooled");
    if (e.contains("pooled_deviations")) {
      for (const Json& d : e.at("pooled_deviations")) {
        entry.pooled_deviations.push_back(AsNumber(d, "pooled_deviations"));
      }
    }
    r.sigma.push_back(std::move(entry));
  }
  return r;
}

ValidationReport ValidationReportFromJson(const Json& j) {
  ValidationReport r;
  r.verdict = GetEnum<Verdict>(j, "verdict", ParseVerdict);
  r.incorrect = SideFromJson(Field(j, "incorrect"));
  r.correct = SideFromJson(Field(j, "correct"));
  r.delta_pooled = GetOptional(j, "delta_pooled");
  r.n_diff_pooled = GetSize(j, "n_diff_pooled");
  r.recommended_tightening = GetDouble(j, "recommended_tightening");
  r.m = GetDouble(j, "m");
  r.n_min = GetSize(j, "n_min");
  const Json& risk = Field(j, "risk");
  r.risk.z_incorrect = GetOptional(risk, "z_incorrect");
  r.risk.z_correct = GetOptional(risk, "z_correct");
  r.risk.z_pooled = GetOptional(risk, "z_pooled");
  r.risk.violation_probability = GetDouble(risk, "violation_probability");
  r.risk.method = GetEnum<RiskMethod>(risk, "method", ParseRiskMethod);
  for (const Json& side : Field(j, "spot_check_sides")) {
    std::optional<Side> parsed =
        side.is_string() ? ParseSide(side.get<std::string>()) : std::nullopt;
    if (!parsed) Invalid("spot_check_sides holds an unknown side");
    r.spot_check_sides.push_back(*parsed);
  }
  for (const Json& note : Field(j, "notes")) r.notes.push_back(note.get<std::string>());
  return r;
}

SpotCheckPlan SpotCheckPlanFromJson(const Json& j) {
  SpotCheckPlan p;
  p.side = GetEnum<Side>(j, "side", ParseSide);
  p.sample_size = GetSize(j, "sample_size");
  p.target_confidence = GetDouble(j, "target_confidence");
  p.c_min = GetDouble(j, "c_min");
  p.achievable_confidence = GetDouble(j, "achievable_confidence");
  p.bucket_size = GetSize(j, "bucket_size");
  for (const Json& id : Field(j, "record_ids")) p.record_ids.push_back(id.get<std::string>());
  return p;
}

SpotCheckResult SpotCheckResultFromJson(const Json& j) {
  SpotCheckResult r;
  r.side = GetEnum<Side>(j, "side", ParseSide);
  r.n = GetSize(j, "n");
  r.errors = GetSize(j, "errors");
  r.observed_accuracy = GetDouble(j, "observed_accuracy");
  r.pass = GetBool(j, "pass");
  r.achieved_confidence = GetDouble(j, "achieved_confidence");
  return r;
}

GradingSession SessionFromJson(const Json& j) {
  GradingSession s;
  s.session_id = GetString(j, "session_id");
  s.status = GetEnum<SessionStatus>(j, "status", ParseSessionStatus);
  s.synthetic = GetBool(j, "synthetic");
  s.thresholds = ThresholdsFromJson(Field(j, "thresholds"));
  s.constraints = ConstraintsFromJson(Field(j, "constraints"));
  s.reference = ReferenceFromJson(Field(j, "reference"));
  // Stored text is already normalized; generous limits keep it verbatim.
  const FieldLimits keep{std::numeric_limits<size_t>::max(),
                         std::numeric_limits<size_t>::max()};
  s.items = ScoredFromJsonArray(Field(j, "items"), keep);
  s.items.role = CorpusRole::kExam;
  for (const auto& [id, d] : Field(j, "decisions").items()) {
    Decision decision;
    decision.kind = GetEnum<DecisionKind>(d, "kind", ParseDecisionKind);
    decision.s = GetDouble(d, "s");
    decision.single_threshold_prediction = GetGrade(d, "single_threshold_prediction");
    s.decisions[id] = decision;
  }
  for (const Json& id : Field(j, "queue")) s.queue.push_back(id.get<std::string>());
  for (const auto& [id, g] : Field(j, "manual_grades").items()) {
    s.manual_grades[id] = {GetGrade(g, "grade"), GetString(g, "grader_id"),
                           GetString(g, "timestamp")};
  }
  for (const Json& g : Field(j, "grade_history")) {
    s.grade_history.push_back({GetString(g, "record_id"),
                               {GetGrade(g, "grade"), GetString(g, "grader_id"),
                                GetString(g, "timestamp")}});
  }
  for (const auto& [side, plan] : Field(j, "spot_checks").items()) {
    SpotCheckPlan p = SpotCheckPlanFromJson(plan);
    s.spot_checks[p.side] = std::move(p);
  }
  for (const auto& [side, result] : Field(j, "spot_check_results").items()) {
    SpotCheckResult r = SpotCheckResultFromJson(result);
    s.spot_check_results[r.side] = r;
  }
  const Json& validation = Field(j, "validation");
  if (!validation.is_null()) s.validation = ValidationReportFromJson(validation);
  s.RebuildIndex();
  return s;
}

std::optional<Side> ParseSide(std::string_view text) {
  if (text == "incorrect") return Side::kIncorrect;
  if (text == "correct") return Side::kCorrect;
  return std::nullopt;
}

std::optional<Verdict> ParseVerdict(std::string_view text) {
  for (Verdict v : {Verdict::kAccept, Verdict::kAcceptWithWarning, Verdict::kReject,
                    Verdict::kInsufficientEvidence}) {
    if (VerdictName(v) == text) return v;
  }
  return std::nullopt;
}

std::optional<SessionStatus> ParseSessionStatus(std::string_view text) {
  for (SessionStatus s : {SessionStatus::kOpen, SessionStatus::kAwaitingValidation,
                          SessionStatus::kValidated, SessionStatus::kRejected}) {
    if (SessionStatusName(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<DecisionKind> ParseDecisionKind(std::string_view text) {
  for (DecisionKind k : {DecisionKind::kAutoCorrect, DecisionKind::kAutoIncorrect,
                         DecisionKind::kDeferred}) {
    if (DecisionKindName(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<RiskMethod> ParseRiskMethod(std::string_view text) {
  if (text == "normal_tail") return RiskMethod::kNormalTail;
  if (text == "monte_carlo") return RiskMethod::kMonteCarlo;
  return std::nullopt;
}

std::string DumpJson(const Json& j, bool pretty) {
  return pretty ? j.dump(2) + "\n" : j.dump() + "\n";
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json j = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Invalid(path + " is not valid JSON");
  return j;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "error writing " + path);
}

std::string ContentHash(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace shortgrade
