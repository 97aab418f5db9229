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

#include "shortgrade/validation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "shortgrade/error.h"
#include "shortgrade/rng.h"

namespace shortgrade {

namespace {

// One item as seen by the band statistics.
struct Observation {
  double s;
  Grade truth;
};

struct BandStats {
  size_t n_incorrect = 0;
  size_t hits_incorrect = 0;
  size_t n_correct = 0;
  size_t hits_correct = 0;
  size_t n_pooled = 0;
  size_t hits_pooled = 0;
};

BandStats ComputeBands(const std::vector<Observation>& observations,
                       const DifficultBands& bands, double t_star) {
  BandStats stats;
  for (const Observation& o : observations) {
    const bool in_incorrect =
        o.s >= bands.incorrect_lo && o.s <= bands.incorrect_hi;
    const bool in_correct = o.s >= bands.correct_lo && o.s <= bands.correct_hi;
    if (in_incorrect) {
      ++stats.n_incorrect;
      if (o.truth == Grade::kIncorrect) ++stats.hits_incorrect;
    }
    if (in_correct) {
      ++stats.n_correct;
      if (o.truth == Grade::kCorrect) ++stats.hits_correct;
    }
    if (in_incorrect || in_correct) {
      ++stats.n_pooled;
      const Grade predicted = o.s > t_star ? Grade::kCorrect : Grade::kIncorrect;
      if (predicted == o.truth) ++stats.hits_pooled;
    }
  }
  return stats;
}

double Share(size_t hits, size_t n) {
  return n == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(n);
}

double SampleSd(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Grade Flip(Grade g) {
  return g == Grade::kCorrect ? Grade::kIncorrect : Grade::kCorrect;
}

Grade Truth(const GradingSession& session, const ScoredRecord& item) {
  auto it = session.manual_grades.find(item.record.record_id);
  return it == session.manual_grades.end() ? item.record.grade : it->second.grade;
}

Grade AutoGrade(DecisionKind kind) {
  return kind == DecisionKind::kAutoCorrect ? Grade::kCorrect : Grade::kIncorrect;
}

const SigmaEntry* NearestSigma(const ReferenceProfile& reference, size_t size) {
  const SigmaEntry* best = nullptr;
  size_t best_gap = std::numeric_limits<size_t>::max();
  for (const SigmaEntry& entry : reference.sigma) {
    const size_t gap = entry.exam_size > size ? entry.exam_size - size
                                              : size - entry.exam_size;
    if (gap < best_gap) {
      best = &entry;
      best_gap = gap;
    }
  }
  return best;
}

// Binomial spread of a band accuracy when no bootstrap table is available.
double BinomialSigma(double p, size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

std::optional<double> ZScore(const std::optional<double>& delta, double sigma) {
  if (!delta) return std::nullopt;
  if (sigma > 0.0) return *delta / sigma;
  if (*delta > 0.0) return std::numeric_limits<double>::infinity();
  if (*delta < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

SideValidation SideFrom(size_t hits, size_t n, double reference_accuracy,
                        size_t n_reference, size_t n_min) {
  SideValidation side;
  side.n_diff = n;
  side.n_reference = n_reference;
  side.reference_accuracy = reference_accuracy;
  if (n > 0) side.exam_accuracy = Share(hits, n);
  if (n > 0 && n_reference > 0) {
    side.delta = *side.exam_accuracy - reference_accuracy;
    side.recommended_tightening = std::max(0.0, -*side.delta);
  }
  side.sufficient = n >= n_min && n_reference > 0;
  return side;
}

void RequireOpenForSpotCheck(const GradingSession& session) {
  if (session.status == SessionStatus::kValidated ||
      session.status == SessionStatus::kRejected) {
    throw Error(ErrorCode::kConflict,
                "session " + session.session_id + " is already closed");
  }
}

}  // namespace

std::string_view VerdictName(Verdict verdict) {
  switch (verdict) {
    case Verdict::kAccept:
      return "accept";
    case Verdict::kAcceptWithWarning:
      return "accept_with_warning";
    case Verdict::kReject:
      return "reject";
    case Verdict::kInsufficientEvidence:
      return "insufficient_evidence";
  }
  return "insufficient_evidence";
}

std::string_view RiskMethodName(RiskMethod method) {
  return method == RiskMethod::kNormalTail ? "normal_tail" : "monte_carlo";
}

DifficultBands DifficultBandsFor(const Thresholds& th) {
  DifficultBands bands;
  bands.incorrect_lo = th.t_incorrect;
  bands.incorrect_hi = std::min(th.t_star, th.t_correct);
  bands.correct_lo = std::max(th.t_star, th.t_incorrect);
  bands.correct_hi = th.t_correct;
  return bands;
}

ReferenceProfile BuildReference(const ScoredDataset& data_v,
                                const Thresholds& th,
                                const std::vector<size_t>& exam_sizes,
                                size_t bootstrap_trials, uint64_t seed) {
  if (data_v.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "reference dataset is empty");
  }
  th.Validate();
  const DifficultBands bands = DifficultBandsFor(th);
  std::vector<Observation> all;
  all.reserve(data_v.items.size());
  for (const ScoredRecord& item : data_v.items) {
    all.push_back({item.s, item.record.grade});
  }

  ReferenceProfile ref;
  ref.thresholds = th;
  ref.n_total = all.size();
  const BandStats stats = ComputeBands(all, bands, th.t_star);
  ref.n_diff_incorrect = stats.n_incorrect;
  ref.n_diff_correct = stats.n_correct;
  ref.c_diff_incorrect = Share(stats.hits_incorrect, stats.n_incorrect);
  ref.c_diff_correct = Share(stats.hits_correct, stats.n_correct);
  ref.c_diff_pooled = Share(stats.hits_pooled, stats.n_pooled);
  const BucketAccuracy easy_i = AccuracyEasy(data_v, th.t_incorrect, Side::kIncorrect);
  const BucketAccuracy easy_c = AccuracyEasy(data_v, th.t_correct, Side::kCorrect);
  ref.c_easy_incorrect = easy_i.accuracy;
  ref.n_easy_incorrect = easy_i.n;
  ref.c_easy_correct = easy_c.accuracy;
  ref.n_easy_correct = easy_c.n;
  ref.single_threshold_accuracy = MetricsAt(data_v, th.t_star).accuracy;

  const std::set<size_t> sizes(exam_sizes.begin(), exam_sizes.end());
  size_t size_index = 0;
  for (size_t size : sizes) {
    if (size == 0 || size > all.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "exam size " + std::to_string(size) + " not in [1, " +
                      std::to_string(all.size()) + "]");
    }
    std::vector<double> acc_i, acc_c, acc_p;
    SigmaEntry entry;
    entry.exam_size = size;
    const uint64_t size_seed = DeriveSeed(seed, size_index++);
    std::vector<Observation> sample(size);
    for (size_t trial = 0; trial < bootstrap_trials; ++trial) {
      Rng rng(DeriveSeed(size_seed, trial));
      const std::vector<size_t> picked = rng.SampleWithoutReplacement(all.size(), size);
      for (size_t k = 0; k < size; ++k) sample[k] = all[picked[k]];
      const BandStats s = ComputeBands(sample, bands, th.t_star);
      if (s.n_incorrect > 0) acc_i.push_back(Share(s.hits_incorrect, s.n_incorrect));
      if (s.n_correct > 0) acc_c.push_back(Share(s.hits_correct, s.n_correct));
      if (s.n_pooled > 0) {
        const double pooled = Share(s.hits_pooled, s.n_pooled);
        acc_p.push_back(pooled);
        entry.pooled_deviations.push_back(pooled - ref.c_diff_pooled);
      }
    }
    entry.sigma_diff_incorrect = SampleSd(acc_i);
    entry.sigma_diff_correct = SampleSd(acc_c);
    entry.sigma_diff_pooled = SampleSd(acc_p);
    ref.sigma.push_back(std::move(entry));
  }
  return ref;
}

TailRisk EstimateRisk(double delta, double sigma) {
  if (sigma < 0.0) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  TailRisk risk;
  if (sigma == 0.0) {
    risk.z = delta > 0.0   ? std::numeric_limits<double>::infinity()
             : delta < 0.0 ? -std::numeric_limits<double>::infinity()
                           : 0.0;
    risk.probability = delta > 0.0 ? 0.0 : delta < 0.0 ? 1.0 : 0.5;
    return risk;
  }
  risk.z = delta / sigma;
  risk.probability = 0.5 * std::erfc(risk.z / std::sqrt(2.0));
  return risk;
}

TailRisk EstimateRiskEmpirical(double delta, const std::vector<double>& null_deltas) {
  TailRisk risk;
  if (null_deltas.empty()) return risk;
  const double sd = SampleSd(null_deltas);
  risk.z = sd > 0.0 ? delta / sd : 0.0;
  size_t at_or_above = 0;
  for (double d : null_deltas) {
    if (d >= delta) ++at_or_above;
  }
  risk.probability =
      static_cast<double>(at_or_above) / static_cast<double>(null_deltas.size());
  return risk;
}

ValidationReport Validate(GradingSession& session, const ValidateOptions& options) {
  if (session.status == SessionStatus::kOpen) {
    throw Error(ErrorCode::kConflict,
                "ungraded deferred items remain in session " + session.session_id);
  }
  if (session.status != SessionStatus::kAwaitingValidation) {
    throw Error(ErrorCode::kConflict,
                "session " + session.session_id + " is already " +
                    std::string(SessionStatusName(session.status)));
  }
  for (const std::string& id : session.queue) {
    if (session.manual_grades.count(id) == 0) {
      throw Error(ErrorCode::kConflict, "deferred item " + id + " is ungraded");
    }
  }

  const Thresholds& th = session.thresholds;
  const DifficultBands bands = DifficultBandsFor(th);
  std::vector<Observation> deferred;
  for (const std::string& id : session.queue) {
    deferred.push_back({session.item(id).s, session.manual_grades.at(id).grade});
  }
  const BandStats exam = ComputeBands(deferred, bands, th.t_star);
  const ReferenceProfile& ref = session.reference;
  const size_t n_ref_pooled = ref.n_diff_incorrect + ref.n_diff_correct;

  ValidationReport report;
  report.m = options.m;
  report.n_min = options.n_min;
  report.incorrect = SideFrom(exam.hits_incorrect, exam.n_incorrect,
                              ref.c_diff_incorrect, ref.n_diff_incorrect,
                              options.n_min);
  report.correct = SideFrom(exam.hits_correct, exam.n_correct,
                            ref.c_diff_correct, ref.n_diff_correct, options.n_min);
  report.n_diff_pooled = exam.n_pooled;
  const bool pooled_sufficient = exam.n_pooled >= options.n_min && n_ref_pooled > 0;
  if (exam.n_pooled > 0 && n_ref_pooled > 0) {
    report.delta_pooled = Share(exam.hits_pooled, exam.n_pooled) - ref.c_diff_pooled;
    report.recommended_tightening = std::max(0.0, -*report.delta_pooled);
  }

  // Risk: z = delta / sigma at the nearest bootstrapped exam size.
  const size_t exam_size = session.items.items.size();
  const SigmaEntry* sigma = NearestSigma(ref, exam_size);
  const double sigma_i = sigma ? sigma->sigma_diff_incorrect
                               : BinomialSigma(ref.c_diff_incorrect, exam.n_incorrect);
  const double sigma_c = sigma ? sigma->sigma_diff_correct
                               : BinomialSigma(ref.c_diff_correct, exam.n_correct);
  const double sigma_p = sigma ? sigma->sigma_diff_pooled
                               : BinomialSigma(ref.c_diff_pooled, exam.n_pooled);
  report.risk.z_incorrect = ZScore(report.incorrect.delta, sigma_i);
  report.risk.z_correct = ZScore(report.correct.delta, sigma_c);
  report.risk.z_pooled = ZScore(report.delta_pooled, sigma_p);
  report.risk.method = options.risk_method;
  if (report.delta_pooled) {
    if (options.risk_method == RiskMethod::kMonteCarlo && sigma != nullptr &&
        !sigma->pooled_deviations.empty()) {
      report.risk.violation_probability =
          EstimateRiskEmpirical(*report.delta_pooled, sigma->pooled_deviations)
              .probability;
    } else {
      report.risk.method = RiskMethod::kNormalTail;
      report.risk.violation_probability =
          EstimateRisk(*report.delta_pooled, sigma_p).probability;
    }
  } else {
    report.notes.push_back("no difficult items: risk is uninformative");
  }

  for (Side side : {Side::kIncorrect, Side::kCorrect}) {
    const SideValidation& sv =
        side == Side::kIncorrect ? report.incorrect : report.correct;
    if (!sv.sufficient) {
      report.spot_check_sides.push_back(side);
      report.notes.push_back(std::string(SideName(side)) + " side has " +
                             std::to_string(sv.n_diff) +
                             " difficult items; spot check required");
    }
  }

  if (!pooled_sufficient) {
    report.verdict = Verdict::kInsufficientEvidence;
  } else if (*report.delta_pooled < -options.m) {
    report.verdict = Verdict::kReject;
  } else if (!report.spot_check_sides.empty()) {
    report.verdict = Verdict::kInsufficientEvidence;
  } else {
    const bool side_below =
        (report.incorrect.delta && *report.incorrect.delta < -options.m) ||
        (report.correct.delta && *report.correct.delta < -options.m);
    report.verdict = side_below ? Verdict::kAcceptWithWarning : Verdict::kAccept;
    if (side_below) {
      report.notes.push_back("one side's difficult accuracy is below reference");
    }
  }
  if (session.synthetic) report.notes.push_back("synthetic (degraded) session");

  switch (report.verdict) {
    case Verdict::kAccept:
    case Verdict::kAcceptWithWarning:
      session.status = SessionStatus::kValidated;
      break;
    case Verdict::kReject:
      session.status = SessionStatus::kRejected;
      break;
    case Verdict::kInsufficientEvidence:
      break;
  }
  session.validation = report;
  return report;
}

size_t SpotCheckSampleSize(double c_min, double confidence) {
  if (confidence <= 0.0 || c_min <= 0.0) return 1;
  if (c_min >= 1.0 || confidence >= 1.0) return std::numeric_limits<size_t>::max();
  const double target = 1.0 - confidence;
  double estimate = std::ceil(std::log(target) / std::log(c_min));
  size_t n = static_cast<size_t>(std::max(1.0, estimate));
  // Guard against rounding in the log ratio.
  while (n > 1 && std::pow(c_min, static_cast<double>(n - 1)) <= target) --n;
  while (std::pow(c_min, static_cast<double>(n)) > target) ++n;
  return n;
}

double BinomialConfidence(size_t n, size_t errors, double c_min) {
  if (n == 0) return 0.0;
  const double e = 1.0 - c_min;
  if (e <= 0.0) return 0.0;
  if (e >= 1.0) return errors >= n ? 0.0 : 1.0;
  if (errors == 0) return 1.0 - std::pow(c_min, static_cast<double>(n));
  if (errors >= n) return 0.0;
  double cdf = 0.0;
  const double log_e = std::log(e);
  const double log_ok = std::log1p(-e);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  for (size_t j = 0; j <= errors; ++j) {
    const double jj = static_cast<double>(j);
    const double log_term = lgn - std::lgamma(jj + 1.0) -
                            std::lgamma(static_cast<double>(n - j) + 1.0) +
                            jj * log_e + static_cast<double>(n - j) * log_ok;
    cdf += std::exp(log_term);
  }
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

SpotCheckPlan PlanSpotCheck(GradingSession& session, Side side,
                            double target_confidence, uint64_t seed) {
  RequireOpenForSpotCheck(session);
  if (!(target_confidence >= 0.0 && target_confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target confidence must be in [0, 1)");
  }
  const double c_min = side == Side::kCorrect ? session.constraints.c_min_correct
                                              : session.constraints.c_min_incorrect;
  const bool lenient = c_min < session.reference.single_threshold_accuracy;
  bool requested = false;
  if (session.validation) {
    const auto& sides = session.validation->spot_check_sides;
    requested = std::find(sides.begin(), sides.end(), side) != sides.end();
  }
  if (!lenient && !requested) {
    throw Error(ErrorCode::kConflict,
                std::string(SideName(side)) +
                    " side is covered by the difficult-band check; no spot check "
                    "needed");
  }

  const DecisionKind kind = side == Side::kCorrect ? DecisionKind::kAutoCorrect
                                                   : DecisionKind::kAutoIncorrect;
  std::vector<std::string> bucket;
  for (const ScoredRecord& item : session.items.items) {
    if (session.decisions.at(item.record.record_id).kind == kind) {
      bucket.push_back(item.record.record_id);
    }
  }

  SpotCheckPlan plan;
  plan.side = side;
  plan.target_confidence = target_confidence;
  plan.c_min = c_min;
  plan.bucket_size = bucket.size();
  const size_t needed = SpotCheckSampleSize(c_min, target_confidence);
  plan.sample_size = std::min(needed, bucket.size());
  Rng rng(seed);
  for (size_t i : rng.SampleWithoutReplacement(bucket.size(), plan.sample_size)) {
    plan.record_ids.push_back(bucket[i]);
  }
  plan.achievable_confidence =
      bucket.empty() ? 1.0 : BinomialConfidence(plan.sample_size, 0, c_min);
  session.spot_checks[side] = plan;
  session.spot_check_results.erase(side);
  return plan;
}

SpotCheckResult EvaluateSpotCheck(GradingSession& session, Side side) {
  auto it = session.spot_checks.find(side);
  if (it == session.spot_checks.end()) {
    throw Error(ErrorCode::kConflict,
                "no spot check planned for the " + std::string(SideName(side)) +
                    " side");
  }
  const SpotCheckPlan& plan = it->second;
  SpotCheckResult result;
  result.side = side;
  for (const std::string& id : plan.record_ids) {
    auto grade = session.manual_grades.find(id);
    if (grade == session.manual_grades.end()) {
      throw Error(ErrorCode::kConflict, "spot-check item " + id + " is ungraded");
    }
    ++result.n;
    if (grade->second.grade != AutoGrade(session.decisions.at(id).kind)) {
      ++result.errors;
    }
  }
  result.observed_accuracy = Share(result.n - result.errors, result.n);
  result.pass = result.n == 0 || result.observed_accuracy >= plan.c_min;
  result.achieved_confidence =
      plan.bucket_size == 0 ? 1.0
                            : BinomialConfidence(result.n, result.errors, plan.c_min);
  session.spot_check_results[side] = result;

  // A validation that stopped at insufficient evidence resolves once every
  // requested side has a spot-check outcome.
  if (session.validation &&
      session.validation->verdict == Verdict::kInsufficientEvidence &&
      session.status == SessionStatus::kAwaitingValidation) {
    bool all_done = true;
    bool all_pass = true;
    for (Side s : session.validation->spot_check_sides) {
      auto r = session.spot_check_results.find(s);
      if (r == session.spot_check_results.end()) {
        all_done = false;
      } else {
        all_pass = all_pass && r->second.pass;
      }
    }
    const auto& pooled = session.validation->delta_pooled;
    const bool pooled_ok = !pooled || *pooled >= -session.validation->m;
    if (all_done) {
      session.status = all_pass && pooled_ok ? SessionStatus::kValidated
                                             : SessionStatus::kRejected;
    } else if (!result.pass) {
      session.status = SessionStatus::kRejected;
    }
  }
  return result;
}

GradingSession SimulateDegraded(const GradingSession& session, double f,
                                uint64_t seed) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "flip fraction must be in [0, 1]");
  }
  GradingSession out = session;
  out.synthetic = true;
  std::vector<size_t> easy_matching, hard_matching;
  for (size_t i = 0; i < out.items.items.size(); ++i) {
    const ScoredRecord& item = out.items.items[i];
    const Decision& d = out.decisions.at(item.record.record_id);
    const Grade truth = Truth(out, item);
    if (d.kind == DecisionKind::kDeferred) {
      if (truth == d.single_threshold_prediction) hard_matching.push_back(i);
    } else if (truth == AutoGrade(d.kind)) {
      easy_matching.push_back(i);
    }
  }
  Rng rng(seed);
  for (const std::vector<size_t>* stratum : {&easy_matching, &hard_matching}) {
    const size_t k = stratum->size();
    const size_t flips =
        static_cast<size_t>(std::floor(f * static_cast<double>(k) + 1e-9));
    for (size_t pick : rng.SampleWithoutReplacement(k, flips)) {
      ScoredRecord& item = out.items.items[(*stratum)[pick]];
      item.record.grade = Flip(item.record.grade);
      auto manual = out.manual_grades.find(item.record.record_id);
      if (manual != out.manual_grades.end()) {
        manual->second.grade = Flip(manual->second.grade);
      }
    }
  }
  return out;
}

ScoredDataset SampleExam(const ScoredDataset& data_v, double fraction,
                         uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exam fraction must be in (0, 1]");
  }
  const size_t n = data_v.items.size();
  const size_t k = std::min(
      n, static_cast<size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  Rng rng(seed);
  std::vector<size_t> picked = rng.SampleWithoutReplacement(n, k);
  std::sort(picked.begin(), picked.end());
  ScoredDataset exam;
  exam.role = CorpusRole::kExam;
  exam.items.reserve(k);
  for (size_t i : picked) exam.items.push_back(data_v.items[i]);
  return exam;
}

double VerdictCounts::accept_rate(size_t trials) const {
  return trials == 0 ? 0.0
                     : static_cast<double>(accept + accept_with_warning) /
                           static_cast<double>(trials);
}

double VerdictCounts::reject_rate(size_t trials) const {
  return trials == 0 ? 0.0
                     : static_cast<double>(reject) / static_cast<double>(trials);
}

namespace {

void Tally(VerdictCounts& counts, const ValidationReport& report,
           std::vector<double>& deltas) {
  switch (report.verdict) {
    case Verdict::kAccept:
      ++counts.accept;
      break;
    case Verdict::kAcceptWithWarning:
      ++counts.accept_with_warning;
      break;
    case Verdict::kReject:
      ++counts.reject;
      break;
    case Verdict::kInsufficientEvidence:
      ++counts.insufficient;
      break;
  }
  if (report.delta_pooled) deltas.push_back(*report.delta_pooled);
}

void FinishDeltas(VerdictCounts& counts, const std::vector<double>& deltas) {
  counts.deltas = deltas.size();
  if (deltas.empty()) return;
  double mean = 0.0;
  for (double d : deltas) mean += d;
  counts.mean_delta = mean / static_cast<double>(deltas.size());
  counts.sd_delta = SampleSd(deltas);
}

void GradeDeferredFromTruth(GradingSession& session) {
  for (const std::string& id : std::vector<std::string>(session.queue)) {
    SubmitManualGrade(session, id, session.item(id).record.grade, "simulation", "");
  }
}

}  // namespace

SimulationReport RunValidationSimulation(const ScoredDataset& data_v,
                                         const Thresholds& th,
                                         const AccuracyConstraints& constraints,
                                         const ReferenceProfile& reference,
                                         const SimulationConfig& config) {
  SimulationReport report;
  report.config = config;
  std::vector<double> clean_deltas, degraded_deltas;
  for (size_t trial = 0; trial < config.trials; ++trial) {
    const ScoredDataset exam =
        SampleExam(data_v, config.fraction, DeriveSeed(config.seed, 2 * trial));
    report.exam_size = exam.items.size();
    const GradingSession opened = OpenSession("sim-" + std::to_string(trial), exam,
                                              th, constraints, reference);

    GradingSession clean = opened;
    GradeDeferredFromTruth(clean);
    Tally(report.clean, Validate(clean, config.validate), clean_deltas);

    GradingSession degraded = SimulateDegraded(
        opened, config.flip, DeriveSeed(config.seed, 2 * trial + 1));
    GradeDeferredFromTruth(degraded);
    Tally(report.degraded, Validate(degraded, config.validate), degraded_deltas);
  }
  FinishDeltas(report.clean, clean_deltas);
  FinishDeltas(report.degraded, degraded_deltas);
  return report;
}

}  // namespace shortgrade
