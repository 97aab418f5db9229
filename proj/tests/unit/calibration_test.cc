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
#include <random>

#include "gtest/gtest.h"
#include "oracles.h"
#include "shortgrade/error.h"

namespace shortgrade {
namespace {

ScoredDataset Make(const std::vector<std::pair<double, char>>& rows) {
  ScoredDataset data;
  size_t i = 0;
  for (const auto& [s, g] : rows) {
    ScoredRecord r;
    r.record.record_id = "r" + std::to_string(i++);
    r.record.question_id = "q";
    r.record.grade = g == 'C' ? Grade::kCorrect : Grade::kIncorrect;
    r.s = s;
    data.items.push_back(r);
  }
  return data;
}

ScoredDataset FourItems() { return Make({{0.1, 'I'}, {0.3, 'I'}, {0.6, 'C'}, {0.9, 'C'}}); }

TEST(Classify, SampleSimilarities) {
  const Thresholds th{0.5, 0.7, 0.9, false};
  EXPECT_EQ(Classify(0.455, th), Bucket::kIncorrect);
  EXPECT_EQ(Classify(0.507, th), Bucket::kDeferred);
  EXPECT_EQ(Classify(0.997, th), Bucket::kCorrect);
}

TEST(Classify, BoundaryTiesDefer) {
  const Thresholds th{0.4, 0.4, 0.4, false};
  EXPECT_EQ(Classify(0.4, th), Bucket::kDeferred);
  const Thresholds wide{0.2, 0.5, 0.8, false};
  EXPECT_EQ(Classify(0.2, wide), Bucket::kDeferred);
  EXPECT_EQ(Classify(0.8, wide), Bucket::kDeferred);
}

TEST(PartitionItems, DisjointAndExhaustive) {
  std::mt19937_64 rng(1);
  const ScoredDataset data = oracle::RandomScored(rng, 1000);
  const Thresholds th{0.2, 0.3, 0.45, false};
  const Partition p = PartitionItems(data, th);
  std::vector<int> seen(data.items.size(), 0);
  for (size_t i : p.incorrect) {
    ++seen[i];
    EXPECT_LT(data.items[i].s, 0.2);
  }
  for (size_t i : p.deferred) {
    ++seen[i];
    EXPECT_GE(data.items[i].s, 0.2);
    EXPECT_LE(data.items[i].s, 0.45);
  }
  for (size_t i : p.correct) {
    ++seen[i];
    EXPECT_GT(data.items[i].s, 0.45);
  }
  EXPECT_EQ(p.incorrect.size() + p.deferred.size() + p.correct.size(), 1000u);
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(PartitionItems, RejectsCrossedThresholds) {
  EXPECT_THROW(PartitionItems(FourItems(), Thresholds{0.6, 0.5, 0.4, false}), Error);
}

TEST(AccuracyEasy, Examples) {
  const ScoredDataset four = FourItems();
  const BucketAccuracy below = AccuracyEasy(four, 0.9, Side::kIncorrect);
  EXPECT_EQ(below.n, 3u);
  EXPECT_DOUBLE_EQ(below.accuracy, 2.0 / 3.0);

  const BucketAccuracy above = AccuracyEasy(four, 0.95, Side::kCorrect);
  EXPECT_TRUE(above.vacuous());
  EXPECT_EQ(above.accuracy, 1.0);

  const ScoredDataset all_correct = Make({{0.5, 'C'}, {0.6, 'C'}, {0.7, 'C'}});
  const BucketAccuracy all = AccuracyEasy(all_correct, 0.4, Side::kCorrect);
  EXPECT_EQ(all.n, 3u);
  EXPECT_EQ(all.accuracy, 1.0);
}

TEST(AccuracyDifficult, Examples) {
  const ScoredDataset data =
      Make({{0.05, 'I'}, {0.15, 'C'}, {0.2, 'I'}, {0.3, 'I'}, {0.35, 'C'},
            {0.4, 'C'}, {0.5, 'I'}, {0.6, 'C'}, {0.7, 'C'}, {0.8, 'C'}});
  // Band [0.15, 0.4] holds 0.15 C, 0.2 I, 0.3 I, 0.35 C, 0.4 C.
  const BucketAccuracy inc = AccuracyDifficult(data, 0.15, 0.4, Side::kIncorrect);
  EXPECT_EQ(inc.n, 5u);
  EXPECT_DOUBLE_EQ(inc.accuracy, 2.0 / 5.0);
  const BucketAccuracy cor = AccuracyDifficult(data, 0.15, 0.4, Side::kCorrect);
  EXPECT_DOUBLE_EQ(cor.accuracy, 3.0 / 5.0);

  const BucketAccuracy pure = AccuracyDifficult(data, 0.6, 0.8, Side::kCorrect);
  EXPECT_EQ(pure.accuracy, 1.0);
  EXPECT_EQ(pure.n, 3u);

  const BucketAccuracy empty = AccuracyDifficult(data, 0.81, 0.9, Side::kCorrect);
  EXPECT_TRUE(empty.vacuous());
  EXPECT_EQ(empty.accuracy, 1.0);

  EXPECT_THROW(AccuracyDifficult(data, 0.5, 0.4, Side::kCorrect), Error);
}

TEST(CandidateThresholds, MidpointsAndSentinels) {
  const std::vector<double> c = CandidateThresholds(Make({{0.3, 'I'}, {0.1, 'I'}, {0.3, 'C'}}));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_DOUBLE_EQ(c[0], 0.1 - 1.0);
  EXPECT_DOUBLE_EQ(c[1], 0.2);
  EXPECT_DOUBLE_EQ(c[2], 0.3 + 1.0);
}

TEST(FindOptimalThreshold, FourItems) {
  const OptimalThreshold opt = FindOptimalThreshold(FourItems());
  EXPECT_DOUBLE_EQ(opt.t_star, 0.44999999999999996);
  EXPECT_EQ(opt.accuracy, 1.0);
}

TEST(FindOptimalThreshold, AllCorrectPicksLowerSentinel) {
  const OptimalThreshold opt = FindOptimalThreshold(Make({{0.2, 'C'}, {0.7, 'C'}}));
  EXPECT_DOUBLE_EQ(opt.t_star, 0.2 - 1.0);
  EXPECT_EQ(opt.accuracy, 1.0);
}

TEST(FindOptimalThreshold, EmptyIsAnError) {
  EXPECT_THROW(FindOptimalThreshold(ScoredDataset{}), Error);
}

TEST(FindOptimalThreshold, BeatsBothBaseRates) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const ScoredDataset data = oracle::RandomScored(rng, 1 + t % 60);
    size_t correct = 0;
    for (const auto& r : data.items) correct += r.record.grade == Grade::kCorrect;
    const double base = double(std::max(correct, data.items.size() - correct)) /
                        double(data.items.size());
    EXPECT_GE(FindOptimalThreshold(data).accuracy, base);
  }
}

TEST(Calibrate, FourItemsStrictConstraints) {
  const Calibration cal = Calibrate(FourItems(), AccuracyConstraints{1.0, 1.0});
  EXPECT_DOUBLE_EQ(cal.thresholds.t_incorrect, 0.44999999999999996);
  EXPECT_DOUBLE_EQ(cal.thresholds.t_correct, 0.44999999999999996);
  EXPECT_DOUBLE_EQ(cal.thresholds.t_star, 0.44999999999999996);
  EXPECT_FALSE(cal.thresholds.normalized);
  EXPECT_EQ(cal.coverage.n_deferred, 0u);
  EXPECT_DOUBLE_EQ(cal.coverage.f_incorrect, 0.5);
  EXPECT_DOUBLE_EQ(cal.coverage.f_correct, 0.5);
}

TEST(Calibrate, VacuousConstraintsLeaveNothingDeferred) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const ScoredDataset data = oracle::RandomScored(rng, 5 + t * 3);
    const Calibration cal = Calibrate(data, AccuracyConstraints{0.0, 0.0});
    EXPECT_EQ(cal.thresholds.t_incorrect, cal.thresholds.t_correct);
    const Partition p = PartitionItems(data, cal.thresholds);
    EXPECT_EQ(p.deferred.size(), cal.coverage.n_deferred);
    // Only items sitting exactly on the shared threshold can defer, and
    // candidate thresholds never coincide with scores.
    EXPECT_EQ(cal.coverage.f_deferred, 0.0);
  }
}

TEST(Calibrate, UnmetSideHasEmptyBucket) {
  const ScoredDataset data = Make({{0.1, 'C'}, {0.2, 'I'}, {0.3, 'C'}, {0.4, 'I'}});
  const Calibration cal = Calibrate(data, AccuracyConstraints{1.0, 1.0});
  EXPECT_TRUE(cal.incorrect_unmet || cal.coverage.n_incorrect > 0);
  const Calibration none = Calibrate(Make({{0.1, 'C'}, {0.2, 'C'}}), AccuracyConstraints{0.5, 0.5});
  EXPECT_TRUE(none.incorrect_unmet);
  EXPECT_EQ(none.coverage.n_incorrect, 0u);
  EXPECT_FALSE(none.correct_unmet);
}

TEST(Calibrate, EmptyDataAndBadConstraints) {
  EXPECT_THROW(Calibrate(ScoredDataset{}, AccuracyConstraints{}), Error);
  EXPECT_THROW(Calibrate(FourItems(), AccuracyConstraints{1.5, 0.9}), Error);
}

TEST(Calibrate, AgreesWithBruteForceOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const ScoredDataset data = oracle::RandomScored(rng, 1 + t % 120);
    const double ci = unit(rng), cc = unit(rng);
    const Calibration cal = Calibrate(data, AccuracyConstraints{ci, cc});
    const oracle::Result want = oracle::Calibrate(oracle::Items(data), ci, cc);
    EXPECT_EQ(cal.thresholds.t_incorrect, want.t_incorrect);
    EXPECT_EQ(cal.thresholds.t_correct, want.t_correct);
    EXPECT_EQ(cal.thresholds.t_star, want.t_star);
    EXPECT_EQ(cal.thresholds.normalized, want.normalized);
    EXPECT_DOUBLE_EQ(cal.t_star_accuracy, want.t_star_accuracy);
    EXPECT_EQ(cal.coverage.n_incorrect, want.n_incorrect);
    EXPECT_EQ(cal.coverage.n_correct, want.n_correct);
  }
}

TEST(Calibrate, ConstraintsHoldAndAreMaximal) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const ScoredDataset data = oracle::RandomScored(rng, 10 + t);
    const AccuracyConstraints c{0.9, 0.85};
    const Calibration cal = Calibrate(data, c);
    const auto items = oracle::Items(data);
    const oracle::Easy low = oracle::EasyIncorrect(items, cal.thresholds.t_incorrect);
    if (low.n > 0) {
      EXPECT_GE(low.accuracy(), c.c_min_incorrect);
    }
    for (double cand : oracle::Candidates(items)) {
      if (cand > cal.thresholds.t_incorrect) {
        const oracle::Easy e = oracle::EasyIncorrect(items, cand);
        EXPECT_TRUE(e.n == 0 || e.accuracy() < c.c_min_incorrect);
      }
    }
  }
}

TEST(Calibrate, PermutationInvariant) {
  std::mt19937_64 rng(14);
  ScoredDataset data = oracle::RandomScored(rng, 200);
  const Calibration a = Calibrate(data, AccuracyConstraints{});
  std::shuffle(data.items.begin(), data.items.end(), rng);
  const Calibration b = Calibrate(data, AccuracyConstraints{});
  EXPECT_EQ(a.thresholds, b.thresholds);
  EXPECT_EQ(a.t_star_accuracy, b.t_star_accuracy);
}

TEST(Calibrate, TighterConstraintNeverGrowsBuckets) {
  std::mt19937_64 rng(15);
  const ScoredDataset data = oracle::RandomScored(rng, 400);
  double prev_fc = 2.0;
  for (double c = 0.5; c <= 1.0; c += 0.05) {
    const Calibration cal = Calibrate(data, AccuracyConstraints{0.0, c});
    EXPECT_LE(cal.coverage.f_correct, prev_fc);
    prev_fc = cal.coverage.f_correct;
  }
}

TEST(Coverage, FractionsSumToOne) {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 50; ++t) {
    const ScoredDataset data = oracle::RandomScored(rng, 1 + t * 7);
    const CoverageReport r = Coverage(data, Thresholds{0.1, 0.2, 0.3, false});
    EXPECT_NEAR(r.f_incorrect + r.f_deferred + r.f_correct, 1.0, 1e-12);
    EXPECT_EQ(r.total, data.items.size());
  }
}

TEST(Coverage, Arithmetic) {
  std::vector<std::pair<double, char>> rows;
  for (int i = 0; i < 200; ++i) rows.emplace_back(i < 26 ? 0.1 : 0.8, 'C');
  const CoverageReport r = Coverage(Make(rows), Thresholds{0.5, 0.6, 0.7, false});
  EXPECT_DOUBLE_EQ(r.f_incorrect, 0.13);
  const CoverageReport all = Coverage(FourItems(), Thresholds{-2.0, -2.0, -2.0, false});
  EXPECT_EQ(all.f_correct, 1.0);
}

TEST(MetricsAt, ConfusionByHand) {
  const ClassMetrics m = MetricsAt(Make({{0.1, 'I'}, {0.3, 'C'}, {0.6, 'I'}, {0.9, 'C'}}), 0.45);
  EXPECT_EQ(m.true_correct, 1u);
  EXPECT_EQ(m.false_correct, 1u);
  EXPECT_EQ(m.true_incorrect, 1u);
  EXPECT_EQ(m.false_incorrect, 1u);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.precision_correct, 0.5);
  EXPECT_DOUBLE_EQ(m.recall_correct, 0.5);
  EXPECT_DOUBLE_EQ(m.precision_incorrect, 0.5);
  EXPECT_DOUBLE_EQ(m.recall_incorrect, 0.5);
  EXPECT_TRUE(m.undefined.empty());
}

TEST(MetricsAt, SeparatedAndUndefined) {
  const ClassMetrics sep = MetricsAt(FourItems(), 0.45);
  EXPECT_EQ(sep.accuracy, 1.0);
  EXPECT_EQ(sep.precision_correct, 1.0);
  EXPECT_EQ(sep.recall_incorrect, 1.0);
  const ClassMetrics none = MetricsAt(Make({{0.5, 'C'}}), 0.9);
  EXPECT_FALSE(none.undefined.empty());
  EXPECT_EQ(none.precision_correct, 1.0);
  EXPECT_THROW(MetricsAt(ScoredDataset{}, 0.5), Error);
}

TEST(AccuracyCurve, MonotoneCoverageAndEndpoints) {
  std::mt19937_64 rng(17);
  const ScoredDataset data = oracle::RandomScored(rng, 300);
  const auto inc = AccuracyCurve(data, Side::kIncorrect, 51);
  const auto cor = AccuracyCurve(data, Side::kCorrect, 51);
  ASSERT_EQ(inc.size(), 51u);
  for (size_t i = 1; i < inc.size(); ++i) {
    EXPECT_GE(inc[i].coverage, inc[i - 1].coverage);
    EXPECT_LE(cor[i].coverage, cor[i - 1].coverage);
  }
  for (const auto* p : {&inc.front(), &inc.back()}) {
    const BucketAccuracy direct = AccuracyEasy(data, p->threshold, Side::kIncorrect);
    EXPECT_EQ(p->accuracy, direct.accuracy);
    EXPECT_EQ(p->n, direct.n);
  }
  EXPECT_THROW(AccuracyCurve(data, Side::kCorrect, 1), Error);
}

TEST(CurveCsv, HeaderAndRows) {
  const std::string csv = CurveCsv({{0.5, 1.0, 0.25, 3}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold,accuracy,coverage,n");
}

}  // namespace
}  // namespace shortgrade
