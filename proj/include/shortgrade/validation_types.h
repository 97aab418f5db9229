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

#ifndef SHORTGRADE_VALIDATION_TYPES_H_
#define SHORTGRADE_VALIDATION_TYPES_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "shortgrade/calibration.h"

namespace shortgrade {

// Bootstrap spread of difficult-band accuracies for exams of `exam_size`.
struct SigmaEntry {
  size_t exam_size = 0;
  double sigma_diff_incorrect = 0.0;
  double sigma_diff_correct = 0.0;
  double sigma_diff_pooled = 0.0;
  // Bootstrap pooled accuracy minus the reference value, for the empirical
  // risk estimate.
  std::vector<double> pooled_deviations;
};

// Accuracies of the calibrated autograder on the large reference set.
struct ReferenceProfile {
  Thresholds thresholds;
  double c_diff_incorrect = 1.0;
  double c_diff_correct = 1.0;
  double c_diff_pooled = 1.0;
  double c_easy_incorrect = 1.0;
  double c_easy_correct = 1.0;
  double single_threshold_accuracy = 0.0;
  size_t n_diff_incorrect = 0;
  size_t n_diff_correct = 0;
  size_t n_easy_incorrect = 0;
  size_t n_easy_correct = 0;
  size_t n_total = 0;
  std::vector<SigmaEntry> sigma;  // ascending exam_size
};

enum class Verdict { kAccept, kAcceptWithWarning, kReject, kInsufficientEvidence };

enum class RiskMethod { kNormalTail, kMonteCarlo };

struct RiskEstimate {
  // Delta / sigma; +-inf when sigma is zero, absent without evidence.
  std::optional<double> z_incorrect;
  std::optional<double> z_correct;
  std::optional<double> z_pooled;
  double violation_probability = 0.5;
  RiskMethod method = RiskMethod::kNormalTail;
};

struct SideValidation {
  std::optional<double> exam_accuracy;
  double reference_accuracy = 1.0;
  std::optional<double> delta;
  size_t n_diff = 0;
  size_t n_reference = 0;
  bool sufficient = false;
  double recommended_tightening = 0.0;
};

struct ValidationReport {
  SideValidation incorrect;
  SideValidation correct;
  // Difficult-band accuracy of the single-threshold prediction over both
  // bands together, exam minus reference.
  std::optional<double> delta_pooled;
  size_t n_diff_pooled = 0;
  Verdict verdict = Verdict::kInsufficientEvidence;
  double recommended_tightening = 0.0;
  RiskEstimate risk;
  double m = 0.0;
  size_t n_min = 5;
  // Sides that need a spot check of their auto-graded bucket.
  std::vector<Side> spot_check_sides;
  std::vector<std::string> notes;
};

struct SpotCheckPlan {
  Side side = Side::kCorrect;
  size_t sample_size = 0;
  double target_confidence = 0.95;
  double c_min = 0.9;
  // 1 - c_min^sample_size: confidence reached if every item is confirmed.
  double achievable_confidence = 0.0;
  size_t bucket_size = 0;
  std::vector<std::string> record_ids;
};

struct SpotCheckResult {
  Side side = Side::kCorrect;
  size_t n = 0;
  size_t errors = 0;
  double observed_accuracy = 1.0;
  bool pass = false;
  double achieved_confidence = 0.0;
};

std::string_view VerdictName(Verdict verdict);
std::string_view RiskMethodName(RiskMethod method);

}  // namespace shortgrade

#endif  // SHORTGRADE_VALIDATION_TYPES_H_
