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

#ifndef SHORTGRADE_VALIDATION_H_
#define SHORTGRADE_VALIDATION_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shortgrade/calibration.h"
#include "shortgrade/grader.h"
#include "shortgrade/validation_types.h"

namespace shortgrade {

// Per-exam validation of the autograder from the teacher's grades on the
// deferred band, plus the spot-check path and the resampling simulation.

// The two difficult bands as used for validation: [T^i, T*] for the
// incorrect side and [T*, T^c] for the correct side, clipped to the deferred
// band [T^i, T^c]. A band with lo > hi is empty.
struct DifficultBands {
  double incorrect_lo = 0.0;
  double incorrect_hi = 0.0;
  double correct_lo = 0.0;
  double correct_hi = 0.0;
  bool has_incorrect() const { return incorrect_lo <= incorrect_hi; }
  bool has_correct() const { return correct_lo <= correct_hi; }
};

DifficultBands DifficultBandsFor(const Thresholds& th);

// Reference accuracies on D_V and bootstrap sigma for each exam size. The
// caller guarantees nothing was tuned on `data_v`.
ReferenceProfile BuildReference(const ScoredDataset& data_v,
                                const Thresholds& th,
                                const std::vector<size_t>& exam_sizes,
                                size_t bootstrap_trials, uint64_t seed);

struct TailRisk {
  double z = 0.0;
  double probability = 0.5;
};

// Standard normal upper tail at z = delta / sigma. sigma = 0 maps to
// probability 0 (delta > 0), 1 (delta < 0) or 0.5 (delta = 0).
TailRisk EstimateRisk(double delta, double sigma);

// Share of null-distribution deviations at or above `delta`.
TailRisk EstimateRiskEmpirical(double delta, const std::vector<double>& null_deltas);

struct ValidateOptions {
  double m = 0.0;
  size_t n_min = 5;
  RiskMethod risk_method = RiskMethod::kNormalTail;
};

// Requires status AwaitingValidation (every deferred item graded); throws
// kConflict otherwise. Stores the report in the session and moves it to
// Validated or Rejected unless evidence is insufficient.
ValidationReport Validate(GradingSession& session, const ValidateOptions& options);

// Smallest n with c_min^n <= 1 - confidence; SIZE_MAX when no finite sample
// certifies (c_min = 1 or confidence = 1).
size_t SpotCheckSampleSize(double c_min, double confidence);

// 1 - P(X <= errors) for X ~ Binomial(n, 1 - c_min): confidence that the true
// accuracy is at least c_min after observing `errors` mistakes in n.
double BinomialConfidence(size_t n, size_t errors, double c_min);

// Samples the spot-check subset of the side's auto-graded bucket and stores
// the plan in the session. Allowed when the side's constraint is below the
// reference single-threshold accuracy or the last validation asked for it.
SpotCheckPlan PlanSpotCheck(GradingSession& session, Side side,
                            double target_confidence, uint64_t seed);

// Compares the manual grades on the planned items with the auto decisions.
// Throws kConflict while planned items remain ungraded.
SpotCheckResult EvaluateSpotCheck(GradingSession& session, Side side);

// Flips the ground truth of floor(f * k) of the k items whose truth matches
// the autograder's prediction, separately for the auto-graded and deferred
// strata.
GradingSession SimulateDegraded(const GradingSession& session, double f,
                                uint64_t seed);

// ceil(fraction * |data_v|) items without replacement, input order kept.
ScoredDataset SampleExam(const ScoredDataset& data_v, double fraction,
                         uint64_t seed);

struct SimulationConfig {
  size_t trials = 200;
  double fraction = 0.05;
  double flip = 0.2;
  ValidateOptions validate;
  uint64_t seed = 7;
};

struct VerdictCounts {
  size_t accept = 0;
  size_t accept_with_warning = 0;
  size_t reject = 0;
  size_t insufficient = 0;
  double mean_delta = 0.0;
  double sd_delta = 0.0;
  size_t deltas = 0;
  // Autograder kept in use: Accept or AcceptWithWarning.
  double accept_rate(size_t trials) const;
  double reject_rate(size_t trials) const;
};

struct SimulationReport {
  SimulationConfig config;
  size_t exam_size = 0;
  VerdictCounts clean;
  VerdictCounts degraded;
};

// Repeatedly samples exams from D_V, grades their deferred items with the
// recorded truth, and validates them as-is and after degradation.
SimulationReport RunValidationSimulation(const ScoredDataset& data_v,
                                         const Thresholds& th,
                                         const AccuracyConstraints& constraints,
                                         const ReferenceProfile& reference,
                                         const SimulationConfig& config);

}  // namespace shortgrade

#endif  // SHORTGRADE_VALIDATION_H_
