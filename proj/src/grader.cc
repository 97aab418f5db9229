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

#include "shortgrade/grader.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shortgrade/error.h"

namespace shortgrade {

namespace {

bool AllDeferredGraded(const GradingSession& session) {
  return std::all_of(session.queue.begin(), session.queue.end(),
                     [&](const std::string& id) {
                       return session.manual_grades.count(id) > 0;
                     });
}

bool InSpotCheck(const GradingSession& session, const std::string& record_id) {
  for (const auto& [side, plan] : session.spot_checks) {
    if (std::find(plan.record_ids.begin(), plan.record_ids.end(), record_id) !=
        plan.record_ids.end()) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view DecisionKindName(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kAutoCorrect:
      return "auto_correct";
    case DecisionKind::kAutoIncorrect:
      return "auto_incorrect";
    case DecisionKind::kDeferred:
      return "deferred";
  }
  return "deferred";
}

std::string_view SessionStatusName(SessionStatus status) {
  switch (status) {
    case SessionStatus::kOpen:
      return "open";
    case SessionStatus::kAwaitingValidation:
      return "awaiting_validation";
    case SessionStatus::kValidated:
      return "validated";
    case SessionStatus::kRejected:
      return "rejected";
  }
  return "open";
}

void GradingSession::RebuildIndex() {
  item_index.clear();
  for (size_t i = 0; i < items.items.size(); ++i) {
    if (!item_index.emplace(items.items[i].record.record_id, i).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate record_id in session: " +
                      items.items[i].record.record_id);
    }
  }
}

const ScoredRecord& GradingSession::item(const std::string& record_id) const {
  auto it = item_index.find(record_id);
  if (it == item_index.end()) {
    throw Error(ErrorCode::kNotFound, "unknown record_id: " + record_id);
  }
  return items.items[it->second];
}

GradingSession OpenSession(std::string session_id, ScoredDataset items,
                           const Thresholds& thresholds,
                           const AccuracyConstraints& constraints,
                           ReferenceProfile reference) {
  if (items.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "a session needs at least one item");
  }
  thresholds.Validate();
  constraints.Validate();

  GradingSession session;
  session.session_id = std::move(session_id);
  session.items = std::move(items);
  session.items.role = CorpusRole::kExam;
  session.thresholds = thresholds;
  session.constraints = constraints;
  session.reference = std::move(reference);
  session.RebuildIndex();

  std::vector<size_t> deferred;
  for (size_t i = 0; i < session.items.items.size(); ++i) {
    const ScoredRecord& item = session.items.items[i];
    Decision d;
    d.s = item.s;
    d.single_threshold_prediction =
        item.s > thresholds.t_star ? Grade::kCorrect : Grade::kIncorrect;
    switch (Classify(item.s, thresholds)) {
      case Bucket::kIncorrect:
        d.kind = DecisionKind::kAutoIncorrect;
        break;
      case Bucket::kCorrect:
        d.kind = DecisionKind::kAutoCorrect;
        break;
      case Bucket::kDeferred:
        d.kind = DecisionKind::kDeferred;
        deferred.push_back(i);
        break;
    }
    session.decisions[item.record.record_id] = d;
  }

  const double t_star = thresholds.t_star;
  std::stable_sort(deferred.begin(), deferred.end(), [&](size_t a, size_t b) {
    const double sa = session.items.items[a].s;
    const double sb = session.items.items[b].s;
    const double da = std::abs(sa - t_star);
    const double db = std::abs(sb - t_star);
    if (da != db) return da < db;
    return sa < sb;
  });
  for (size_t i : deferred) {
    session.queue.push_back(session.items.items[i].record.record_id);
  }
  session.status = session.queue.empty() ? SessionStatus::kAwaitingValidation
                                         : SessionStatus::kOpen;
  return session;
}

std::optional<ScoredRecord> NextDeferred(const GradingSession& session) {
  for (const std::string& id : session.queue) {
    if (session.manual_grades.count(id) == 0) return session.item(id);
  }
  return std::nullopt;
}

void SubmitManualGrade(GradingSession& session, const std::string& record_id,
                       Grade grade, const std::string& grader_id,
                       const std::string& timestamp) {
  if (session.status == SessionStatus::kValidated ||
      session.status == SessionStatus::kRejected) {
    throw Error(ErrorCode::kConflict, "session " + session.session_id +
                                          " is closed (" +
                                          std::string(SessionStatusName(
                                              session.status)) +
                                          ")");
  }
  auto decision = session.decisions.find(record_id);
  if (decision == session.decisions.end()) {
    throw Error(ErrorCode::kNotFound, "unknown record_id: " + record_id);
  }
  if (decision->second.kind != DecisionKind::kDeferred &&
      !InSpotCheck(session, record_id)) {
    throw Error(ErrorCode::kConflict,
                record_id + " was auto-graded and is not in a spot check");
  }
  ManualGrade manual{grade, grader_id, timestamp};
  session.manual_grades[record_id] = manual;
  session.grade_history.push_back({record_id, manual});
  if (session.status == SessionStatus::kOpen && AllDeferredGraded(session)) {
    session.status = SessionStatus::kAwaitingValidation;
  }
}

SessionSummary Summarize(const GradingSession& session) {
  SessionSummary summary;
  summary.total = session.items.items.size();
  summary.status = session.status;
  for (const auto& [id, d] : session.decisions) {
    switch (d.kind) {
      case DecisionKind::kAutoCorrect:
        ++summary.auto_correct;
        break;
      case DecisionKind::kAutoIncorrect:
        ++summary.auto_incorrect;
        break;
      case DecisionKind::kDeferred:
        ++summary.deferred;
        if (session.manual_grades.count(id) > 0) ++summary.deferred_graded;
        break;
    }
  }
  if (summary.total > 0) {
    const double n = static_cast<double>(summary.total);
    summary.f_auto_correct = static_cast<double>(summary.auto_correct) / n;
    summary.f_auto_incorrect = static_cast<double>(summary.auto_incorrect) / n;
    summary.f_deferred = static_cast<double>(summary.deferred) / n;
    summary.workload_reduction =
        static_cast<double>(summary.auto_correct + summary.auto_incorrect) / n;
  }
  return summary;
}

}  // namespace shortgrade
