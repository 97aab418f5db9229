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

#ifndef SHORTGRADE_GRADER_H_
#define SHORTGRADE_GRADER_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shortgrade/calibration.h"
#include "shortgrade/validation_types.h"

namespace shortgrade {

enum class DecisionKind { kAutoCorrect, kAutoIncorrect, kDeferred };

struct Decision {
  DecisionKind kind = DecisionKind::kDeferred;
  double s = 0.0;
  // What a single threshold at T* would say (s > T* -> Correct). Kept for
  // deferred items too; validation compares it with the manual grade.
  Grade single_threshold_prediction = Grade::kIncorrect;
};

struct ManualGrade {
  Grade grade = Grade::kIncorrect;
  std::string grader_id;
  std::string timestamp;
};

struct GradeSubmission {
  std::string record_id;
  ManualGrade grade;
};

enum class SessionStatus { kOpen, kAwaitingValidation, kValidated, kRejected };

std::string_view DecisionKindName(DecisionKind kind);
std::string_view SessionStatusName(SessionStatus status);

// One exam's items, frozen thresholds, and the manual grading loop.
struct GradingSession {
  std::string session_id;
  ScoredDataset items;
  Thresholds thresholds;
  AccuracyConstraints constraints;
  ReferenceProfile reference;
  std::map<std::string, Decision> decisions;
  // Deferred record ids, most uncertain (closest to T*) first.
  std::vector<std::string> queue;
  std::map<std::string, ManualGrade> manual_grades;
  // Every submission including overwritten ones.
  std::vector<GradeSubmission> grade_history;
  std::map<Side, SpotCheckPlan> spot_checks;
  std::map<Side, SpotCheckResult> spot_check_results;
  std::optional<ValidationReport> validation;
  SessionStatus status = SessionStatus::kOpen;
  bool synthetic = false;

  // record_id -> index into items.items; rebuilt by RebuildIndex().
  std::map<std::string, size_t> item_index;
  void RebuildIndex();
  const ScoredRecord& item(const std::string& record_id) const;
};

// Assigns every item a decision from the partition rule and orders the
// deferred queue. Throws kEmptyDataset on no items, kInvalidArgument on
// crossed thresholds or duplicate record ids.
GradingSession OpenSession(std::string session_id, ScoredDataset items,
                           const Thresholds& thresholds,
                           const AccuracyConstraints& constraints,
                           ReferenceProfile reference);

// Highest-priority deferred item without a manual grade.
std::optional<ScoredRecord> NextDeferred(const GradingSession& session);

// Stores a grade for a deferred or spot-check item. Auto-graded items outside
// a spot-check plan are rejected (kConflict), as are sessions already
// validated or rejected. Draining the queue moves Open to
// AwaitingValidation.
void SubmitManualGrade(GradingSession& session, const std::string& record_id,
                       Grade grade, const std::string& grader_id,
                       const std::string& timestamp);

struct SessionSummary {
  size_t total = 0;
  size_t auto_correct = 0;
  size_t auto_incorrect = 0;
  size_t deferred = 0;
  size_t deferred_graded = 0;
  double f_auto_correct = 0.0;
  double f_auto_incorrect = 0.0;
  double f_deferred = 0.0;
  // Share of items needing no manual grade.
  double workload_reduction = 0.0;
  SessionStatus status = SessionStatus::kOpen;
};

SessionSummary Summarize(const GradingSession& session);

}  // namespace shortgrade

#endif  // SHORTGRADE_GRADER_H_
