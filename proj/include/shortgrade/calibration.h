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

#ifndef SHORTGRADE_CALIBRATION_H_
#define SHORTGRADE_CALIBRATION_H_

#include <cstddef>
#include <string>
#include <vector>

#include "shortgrade/corpus.h"
#include "shortgrade/embedding.h"

namespace shortgrade {

// Which auto-graded bucket a statistic refers to.
enum class Side { kIncorrect, kCorrect };

std::string_view SideName(Side side);

struct ScoredRecord {
  GradingRecord record;
  double s = 0.0;
};

struct ScoredDataset {
  std::vector<ScoredRecord> items;
  CorpusRole role = CorpusRole::kValidation;
};

// Pairs records with precomputed scores; throws on size mismatch or
// non-finite scores.
ScoredDataset MakeScoredDataset(const Corpus& corpus,
                                const std::vector<double>& scores);
ScoredDataset ScoreCorpus(const Corpus& corpus, const EmbedderConfig& config,
                          const ProjectionHead* head = nullptr);

// Minimum accuracy demanded on the auto-incorrect / auto-correct buckets.
struct AccuracyConstraints {
  double c_min_incorrect = 0.95;
  double c_min_correct = 0.9;

  void Validate() const;
  bool operator==(const AccuracyConstraints&) const = default;
};

struct Thresholds {
  double t_incorrect = 0.0;
  double t_star = 0.0;
  double t_correct = 0.0;
  // Set when the raw correct threshold fell below the incorrect one and was
  // raised to it.
  bool normalized = false;

  // Throws kInvalidArgument unless t_incorrect <= t_correct.
  void Validate() const;
  bool operator==(const Thresholds&) const = default;
};

enum class Bucket { kIncorrect, kDeferred, kCorrect };

// s < T^i -> incorrect, T^i <= s <= T^c -> deferred, s > T^c -> correct.
Bucket Classify(double s, const Thresholds& th);

struct Partition {
  // Indices into ScoredDataset::items, in input order.
  std::vector<size_t> incorrect;
  std::vector<size_t> deferred;
  std::vector<size_t> correct;
};

Partition PartitionItems(const ScoredDataset& data, const Thresholds& th);

struct CoverageReport {
  size_t n_incorrect = 0;
  size_t n_deferred = 0;
  size_t n_correct = 0;
  size_t total = 0;
  double f_incorrect = 0.0;
  double f_correct = 0.0;
  double f_deferred = 0.0;
};

CoverageReport Coverage(const ScoredDataset& data, const Thresholds& th);

// Accuracy over one bucket. An empty bucket reports 1.0 with n = 0 and must
// be read as "no evidence".
struct BucketAccuracy {
  double accuracy = 1.0;
  size_t n = 0;
  bool vacuous() const { return n == 0; }
};

// kCorrect: share graded Correct among s > T.
// kIncorrect: share graded Incorrect among s < T.
BucketAccuracy AccuracyEasy(const ScoredDataset& data, double t, Side side);

// Share graded as `side` among lo <= s <= hi. Throws when lo > hi.
BucketAccuracy AccuracyDifficult(const ScoredDataset& data, double lo,
                                 double hi, Side side);

// Sorted candidates: one sentinel below the minimum score, the midpoints of
// consecutive distinct scores, one sentinel above the maximum. Empty input
// yields no candidates.
std::vector<double> CandidateThresholds(const ScoredDataset& data);

struct OptimalThreshold {
  double t_star = 0.0;
  double accuracy = 0.0;
};

// Candidate maximizing single-threshold accuracy (s > T predicts Correct);
// ties go to the smallest candidate. Throws kEmptyDataset on empty input.
OptimalThreshold FindOptimalThreshold(const ScoredDataset& data);

struct Calibration {
  Thresholds thresholds;
  CoverageReport coverage;
  AccuracyConstraints constraints;
  double t_star_accuracy = 0.0;
  // No candidate met the side's constraint; that bucket is empty.
  bool incorrect_unmet = false;
  bool correct_unmet = false;
};

// T^i = largest candidate whose non-empty incorrect bucket meets
// c_min_incorrect, T^c = smallest candidate whose non-empty correct bucket
// meets c_min_correct; T^c is raised to T^i if it lands below it.
Calibration Calibrate(const ScoredDataset& data,
                      const AccuracyConstraints& constraints);

struct ClassMetrics {
  double threshold = 0.0;
  size_t true_correct = 0;     // graded Correct, predicted Correct
  size_t false_correct = 0;    // graded Incorrect, predicted Correct
  size_t true_incorrect = 0;   // graded Incorrect, predicted Incorrect
  size_t false_incorrect = 0;  // graded Correct, predicted Incorrect
  double precision_correct = 1.0;
  double recall_correct = 1.0;
  double precision_incorrect = 1.0;
  double recall_incorrect = 1.0;
  double accuracy = 0.0;
  // Names of the ratios that were 0/0 and reported as 1.0.
  std::vector<std::string> undefined;
};

ClassMetrics MetricsAt(const ScoredDataset& data, double t);

struct CurvePoint {
  double threshold = 0.0;
  double accuracy = 1.0;
  double coverage = 0.0;
  size_t n = 0;
};

// AccuracyEasy on an evenly spaced grid over [min s, max s].
std::vector<CurvePoint> AccuracyCurve(const ScoredDataset& data, Side side,
                                      size_t n_points);

// "threshold,accuracy,coverage,n" header plus one row per point.
std::string CurveCsv(const std::vector<CurvePoint>& points);

// Operating points reported for a fine-tuned transformer encoder on a large
// proprietary corpus. They document the target regime only; no local
// backend reproduces them.
namespace published {
inline constexpr double kTStar = 0.76;
inline constexpr double kTStarAccuracy = 0.865;
inline constexpr double kTunedClassOneRecall = 0.90;
inline constexpr double kCoverageCorrectAt90 = 0.49;
inline constexpr double kCoverageIncorrectAt95 = 0.13;
inline constexpr double kCombinedCoverage = 0.62;
inline constexpr double kCombinedAccuracy = 0.92;
}  // namespace published

}  // namespace shortgrade

#endif  // SHORTGRADE_CALIBRATION_H_
