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

// JSON forms of the domain types. Objects are key-sorted, so dumping the
// same value twice gives the same bytes.

#ifndef SHORTGRADE_SERIALIZATION_H_
#define SHORTGRADE_SERIALIZATION_H_

#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "shortgrade/calibration.h"
#include "shortgrade/corpus.h"
#include "shortgrade/grader.h"
#include "shortgrade/validation.h"

namespace shortgrade {

using Json = nlohmann::json;

// Parses one external record object: normalizes and truncates text fields
// and assigns "q<question_id>#<line>" when record_id is missing. Returns
// nullopt and sets `reason` on a missing or invalid field.
std::optional<GradingRecord> RecordFromJson(const Json& object, size_t line,
                                            const FieldLimits& limits,
                                            std::string& reason);
Json RecordToJson(const GradingRecord& record);

void WriteCorpusJsonl(std::ostream& out, const Corpus& corpus);

// Scored records are record fields plus "s".
Json ScoredToJson(const ScoredRecord& item);
void WriteScoredJsonl(std::ostream& out, const ScoredDataset& data);
// Throws kInvalidArgument naming the offending line; requires a finite "s".
ScoredDataset ReadScoredJsonl(std::istream& in, const FieldLimits& limits = {});
ScoredDataset ReadScoredJsonlFile(const std::string& path,
                                  const FieldLimits& limits = {});

// Array of record objects. Items without "s" are reported through
// `missing_scores`; when it is null every item must carry a score.
ScoredDataset ScoredFromJsonArray(const Json& array, const FieldLimits& limits,
                                  bool* missing_scores = nullptr);
// Records of an array, ignoring any "s".
Corpus CorpusFromJsonArray(const Json& array, const FieldLimits& limits);

Json ToJson(const IngestReport& report);
Json ToJson(const CorpusStats& stats);
Json ToJson(const AccuracyConstraints& constraints);
Json ToJson(const Thresholds& thresholds);
Json ToJson(const CoverageReport& coverage);
Json ToJson(const Calibration& calibration);
Json ToJson(const ClassMetrics& metrics);
Json ToJson(const std::vector<CurvePoint>& curve);
Json ToJson(const ReferenceProfile& reference);
Json ToJson(const ValidationReport& report);
Json ToJson(const SpotCheckPlan& plan);
Json ToJson(const SpotCheckResult& result);
Json ToJson(const SessionSummary& summary);
Json ToJson(const SimulationReport& report);
Json ToJson(const GradingSession& session);

Json ToJson(const EmbedderConfig& config);
// Missing keys keep their defaults.
EmbedderConfig EmbedderConfigFromJson(const Json& j);

AccuracyConstraints ConstraintsFromJson(const Json& j);
Thresholds ThresholdsFromJson(const Json& j);
ReferenceProfile ReferenceFromJson(const Json& j);
ValidationReport ValidationReportFromJson(const Json& j);
SpotCheckPlan SpotCheckPlanFromJson(const Json& j);
SpotCheckResult SpotCheckResultFromJson(const Json& j);
GradingSession SessionFromJson(const Json& j);

std::optional<Side> ParseSide(std::string_view text);
std::optional<Verdict> ParseVerdict(std::string_view text);
std::optional<SessionStatus> ParseSessionStatus(std::string_view text);
std::optional<DecisionKind> ParseDecisionKind(std::string_view text);
std::optional<RiskMethod> ParseRiskMethod(std::string_view text);

// Compact dump with a trailing newline when `pretty` is false; two-space
// indentation otherwise.
std::string DumpJson(const Json& j, bool pretty = true);

// Reads a whole file as JSON; kIo when unreadable, kInvalidArgument when it
// does not parse.
Json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

// 16 hex digits of FNV-1a over `text`.
std::string ContentHash(std::string_view text);

}  // namespace shortgrade

#endif  // SHORTGRADE_SERIALIZATION_H_
