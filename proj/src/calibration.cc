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

#include "shortgrade/calibration.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shortgrade/error.h"

namespace shortgrade {

namespace {

struct SortedScores {
  std::vector<double> s;       // ascending
  std::vector<bool> correct;   // grade of s[k]
};

SortedScores SortScores(const ScoredDataset& data) {
  std::vector<std::pair<double, bool>> pairs;
  pairs.reserve(data.items.size());
  for (const ScoredRecord& item : data.items) {
    pairs.emplace_back(item.s, item.record.grade == Grade::kCorrect);
  }
  std::sort(pairs.begin(), pairs.end());
  SortedScores out;
  for (const auto& [s, c] : pairs) {
    out.s.push_back(s);
    out.correct.push_back(c);
  }
  return out;
}

std::vector<double> CandidatesFromSorted(const std::vector<double>& sorted) {
  std::vector<double> candidates;
  if (sorted.empty()) return candidates;
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  candidates.reserve(distinct.size() + 1);
  candidates.push_back(distinct.front() - 1.0);
  for (size_t k = 0; k + 1 < distinct.size(); ++k) {
    candidates.push_back(distinct[k] + (distinct[k + 1] - distinct[k]) / 2.0);
  }
  candidates.push_back(distinct.back() + 1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  return candidates;
}

bool Meets(size_t hits, size_t n, double c_min) {
  return n > 0 && static_cast<double>(hits) / static_cast<double>(n) >= c_min;
}

double Ratio(size_t num, size_t den, const char* name,
             std::vector<std::string>& undefined) {
  if (den == 0) {
    undefined.emplace_back(name);
    return 1.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view SideName(Side side) {
  return side == Side::kCorrect ? "correct" : "incorrect";
}

ScoredDataset MakeScoredDataset(const Corpus& corpus,
                                const std::vector<double>& scores) {
  if (scores.size() != corpus.records.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "score count does not match record count");
  }
  ScoredDataset data;
  data.role = corpus.role;
  data.items.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite similarity for " + corpus.records[i].record_id);
    }
    data.items.push_back({corpus.records[i], scores[i]});
  }
  return data;
}

ScoredDataset ScoreCorpus(const Corpus& corpus, const EmbedderConfig& config,
                          const ProjectionHead* head) {
  return MakeScoredDataset(corpus, Similarities(corpus.records, config, head));
}

void AccuracyConstraints::Validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(c_min_incorrect) || !in_unit(c_min_correct)) {
    throw Error(ErrorCode::kInvalidArgument,
                "accuracy constraints must lie in [0, 1]");
  }
}

void Thresholds::Validate() const {
  if (!std::isfinite(t_incorrect) || !std::isfinite(t_correct) ||
      !std::isfinite(t_star)) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must be finite");
  }
  if (t_incorrect > t_correct) {
    throw Error(ErrorCode::kInvalidArgument,
                "t_incorrect must not exceed t_correct");
  }
}

Bucket Classify(double s, const Thresholds& th) {
  if (s < th.t_incorrect) return Bucket::kIncorrect;
  if (s > th.t_correct) return Bucket::kCorrect;
  return Bucket::kDeferred;
}

Partition PartitionItems(const ScoredDataset& data, const Thresholds& th) {
  th.Validate();
  Partition p;
  for (size_t i = 0; i < data.items.size(); ++i) {
    switch (Classify(data.items[i].s, th)) {
      case Bucket::kIncorrect:
        p.incorrect.push_back(i);
        break;
      case Bucket::kDeferred:
        p.deferred.push_back(i);
        break;
      case Bucket::kCorrect:
        p.correct.push_back(i);
        break;
    }
  }
  return p;
}

CoverageReport Coverage(const ScoredDataset& data, const Thresholds& th) {
  CoverageReport report;
  for (const ScoredRecord& item : data.items) {
    switch (Classify(item.s, th)) {
      case Bucket::kIncorrect:
        ++report.n_incorrect;
        break;
      case Bucket::kDeferred:
        ++report.n_deferred;
        break;
      case Bucket::kCorrect:
        ++report.n_correct;
        break;
    }
  }
  report.total = data.items.size();
  if (report.total > 0) {
    const double n = static_cast<double>(report.total);
    report.f_incorrect = static_cast<double>(report.n_incorrect) / n;
    report.f_correct = static_cast<double>(report.n_correct) / n;
    report.f_deferred = static_cast<double>(report.n_deferred) / n;
  }
  return report;
}

BucketAccuracy AccuracyEasy(const ScoredDataset& data, double t, Side side) {
  size_t n = 0;
  size_t hits = 0;
  for (const ScoredRecord& item : data.items) {
    const bool in_bucket = side == Side::kCorrect ? item.s > t : item.s < t;
    if (!in_bucket) continue;
    ++n;
    const bool is_correct = item.record.grade == Grade::kCorrect;
    if (is_correct == (side == Side::kCorrect)) ++hits;
  }
  if (n == 0) return {1.0, 0};
  return {static_cast<double>(hits) / static_cast<double>(n), n};
}

BucketAccuracy AccuracyDifficult(const ScoredDataset& data, double lo,
                                 double hi, Side side) {
  if (lo > hi) {
    throw Error(ErrorCode::kInvalidArgument, "difficult band has lo > hi");
  }
  size_t n = 0;
  size_t hits = 0;
  for (const ScoredRecord& item : data.items) {
    if (item.s < lo || item.s > hi) continue;
    ++n;
    const bool is_correct = item.record.grade == Grade::kCorrect;
    if (is_correct == (side == Side::kCorrect)) ++hits;
  }
  if (n == 0) return {1.0, 0};
  return {static_cast<double>(hits) / static_cast<double>(n), n};
}

std::vector<double> CandidateThresholds(const ScoredDataset& data) {
  return CandidatesFromSorted(SortScores(data).s);
}

OptimalThreshold FindOptimalThreshold(const ScoredDataset& data) {
  if (data.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot search a threshold on no data");
  }
  const SortedScores sorted = SortScores(data);
  const std::vector<double> candidates = CandidatesFromSorted(sorted.s);
  const size_t n = sorted.s.size();
  size_t total_correct = 0;
  for (bool c : sorted.correct) total_correct += c ? 1 : 0;

  // Items with s <= candidate are predicted Incorrect.
  size_t at_or_below = 0;
  size_t correct_at_or_below = 0;
  size_t best_hits = 0;
  double best_t = candidates.front();
  bool first = true;
  for (double t : candidates) {
    while (at_or_below < n && sorted.s[at_or_below] <= t) {
      correct_at_or_below += sorted.correct[at_or_below] ? 1 : 0;
      ++at_or_below;
    }
    const size_t incorrect_below = at_or_below - correct_at_or_below;
    const size_t correct_above = total_correct - correct_at_or_below;
    const size_t hits = incorrect_below + correct_above;
    if (first || hits > best_hits) {
      best_hits = hits;
      best_t = t;
      first = false;
    }
  }
  return {best_t, static_cast<double>(best_hits) / static_cast<double>(n)};
}

Calibration Calibrate(const ScoredDataset& data,
                      const AccuracyConstraints& constraints) {
  constraints.Validate();
  if (data.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot calibrate on an empty dataset");
  }
  const SortedScores sorted = SortScores(data);
  const std::vector<double> candidates = CandidatesFromSorted(sorted.s);
  const size_t n = sorted.s.size();
  size_t total_correct = 0;
  for (bool c : sorted.correct) total_correct += c ? 1 : 0;

  bool have_incorrect = false;
  bool have_correct = false;
  double t_incorrect = candidates.front();
  double t_correct = candidates.back();

  size_t below = 0;               // s < t
  size_t correct_below = 0;
  size_t at_or_below = 0;         // s <= t
  size_t correct_at_or_below = 0;
  for (double t : candidates) {
    while (below < n && sorted.s[below] < t) {
      correct_below += sorted.correct[below] ? 1 : 0;
      ++below;
    }
    while (at_or_below < n && sorted.s[at_or_below] <= t) {
      correct_at_or_below += sorted.correct[at_or_below] ? 1 : 0;
      ++at_or_below;
    }
    // Largest qualifying T^i: keep overwriting while ascending.
    if (Meets(below - correct_below, below, constraints.c_min_incorrect)) {
      t_incorrect = t;
      have_incorrect = true;
    }
    // Smallest qualifying T^c: first hit wins.
    const size_t above = n - at_or_below;
    if (!have_correct &&
        Meets(total_correct - correct_at_or_below, above,
              constraints.c_min_correct)) {
      t_correct = t;
      have_correct = true;
    }
  }

  Calibration result;
  result.constraints = constraints;
  result.incorrect_unmet = !have_incorrect;
  result.correct_unmet = !have_correct;
  result.thresholds.t_incorrect = have_incorrect ? t_incorrect : candidates.front();
  result.thresholds.t_correct = have_correct ? t_correct : candidates.back();
  if (result.thresholds.t_correct < result.thresholds.t_incorrect) {
    result.thresholds.t_correct = result.thresholds.t_incorrect;
    result.thresholds.normalized = true;
  }
  const OptimalThreshold optimal = FindOptimalThreshold(data);
  result.thresholds.t_star = optimal.t_star;
  result.t_star_accuracy = optimal.accuracy;
  result.coverage = Coverage(data, result.thresholds);
  return result;
}

ClassMetrics MetricsAt(const ScoredDataset& data, double t) {
  if (data.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "metrics need at least one item");
  }
  ClassMetrics m;
  m.threshold = t;
  for (const ScoredRecord& item : data.items) {
    const bool predicted_correct = item.s > t;
    const bool is_correct = item.record.grade == Grade::kCorrect;
    if (predicted_correct && is_correct) ++m.true_correct;
    if (predicted_correct && !is_correct) ++m.false_correct;
    if (!predicted_correct && !is_correct) ++m.true_incorrect;
    if (!predicted_correct && is_correct) ++m.false_incorrect;
  }
  m.precision_correct = Ratio(m.true_correct, m.true_correct + m.false_correct,
                              "precision_correct", m.undefined);
  m.recall_correct = Ratio(m.true_correct, m.true_correct + m.false_incorrect,
                           "recall_correct", m.undefined);
  m.precision_incorrect =
      Ratio(m.true_incorrect, m.true_incorrect + m.false_incorrect,
            "precision_incorrect", m.undefined);
  m.recall_incorrect = Ratio(m.true_incorrect, m.true_incorrect + m.false_correct,
                             "recall_incorrect", m.undefined);
  m.accuracy = static_cast<double>(m.true_correct + m.true_incorrect) /
               static_cast<double>(data.items.size());
  return m;
}

std::vector<CurvePoint> AccuracyCurve(const ScoredDataset& data, Side side,
                                      size_t n_points) {
  if (n_points < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a curve needs at least 2 points");
  }
  std::vector<CurvePoint> curve;
  if (data.items.empty()) return curve;
  double lo = data.items.front().s;
  double hi = lo;
  for (const ScoredRecord& item : data.items) {
    lo = std::min(lo, item.s);
    hi = std::max(hi, item.s);
  }
  const double total = static_cast<double>(data.items.size());
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  curve.reserve(n_points);
  for (size_t k = 0; k < n_points; ++k) {
    const double t = k + 1 == n_points ? hi : lo + step * static_cast<double>(k);
    const BucketAccuracy acc = AccuracyEasy(data, t, side);
    curve.push_back({t, acc.accuracy, static_cast<double>(acc.n) / total, acc.n});
  }
  return curve;
}

std::string CurveCsv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,accuracy,coverage,n\n";
  for (const CurvePoint& p : points) {
    out << p.threshold << ',' << p.accuracy << ',' << p.coverage << ',' << p.n
        << '\n';
  }
  return out.str();
}

}  // namespace shortgrade
