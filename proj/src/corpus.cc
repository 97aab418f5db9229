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

#include "shortgrade/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "shortgrade/error.h"
#include "shortgrade/rng.h"
#include "shortgrade/serialization.h"
#include "shortgrade/text.h"

namespace shortgrade {

namespace {

using nlohmann::json;

std::string TupleKey(const GradingRecord& r, bool with_grade) {
  std::string key = NormalizeText(r.question);
  key += '\x1f';
  key += NormalizeText(r.correct_answer);
  key += '\x1f';
  key += NormalizeText(r.given_answer);
  if (with_grade) {
    key += '\x1f';
    key += r.grade == Grade::kCorrect ? 'C' : 'I';
  }
  return key;
}

// Identifiers may arrive as strings or integers.
std::optional<GradingRecord> ParseRecordLine(const std::string& line,
                                             size_t line_number,
                                             const FieldLimits& limits,
                                             std::string& reason) {
  json object = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (object.is_discarded()) {
    reason = "invalid JSON";
    return std::nullopt;
  }
  return RecordFromJson(object, line_number, limits, reason);
}

}  // namespace

std::string_view GradeName(Grade grade) {
  return grade == Grade::kCorrect ? "correct" : "incorrect";
}

std::optional<Grade> ParseGrade(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "correct") return Grade::kCorrect;
  if (lower == "incorrect") return Grade::kIncorrect;
  return std::nullopt;
}

std::string_view CorpusRoleName(CorpusRole role) {
  switch (role) {
    case CorpusRole::kTrain:
      return "train";
    case CorpusRole::kValidation:
      return "validation";
    case CorpusRole::kTest:
      return "test";
    case CorpusRole::kExam:
      return "exam";
  }
  return "train";
}

IngestResult Ingest(std::istream& source, const FieldLimits& limits) {
  if (!source) throw Error(ErrorCode::kIo, "record source is not readable");

  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_number = 0;
  while (std::getline(source, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string reason;
    std::optional<GradingRecord> record =
        ParseRecordLine(line, line_number, limits, reason);
    if (record && !seen_ids.insert(record->record_id).second) {
      reason = "duplicate record_id: " + record->record_id;
      record.reset();
    }
    if (!record) {
      ++result.report.rejected;
      result.report.rejections.push_back({line_number, reason});
      continue;
    }
    ++result.report.accepted;
    result.corpus.records.push_back(std::move(*record));
  }
  if (source.bad()) throw Error(ErrorCode::kIo, "error while reading records");

  for (const GradeConflict& conflict : FindGradeConflicts(result.corpus)) {
    result.report.duplicate_conflicts += conflict.record_ids.size();
  }
  return result;
}

IngestResult IngestFile(const std::string& path, const FieldLimits& limits) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return Ingest(in, limits);
}

Corpus Deduplicate(const Corpus& corpus) {
  Corpus out;
  out.role = corpus.role;
  std::unordered_set<std::string> seen;
  for (const GradingRecord& record : corpus.records) {
    if (seen.insert(TupleKey(record, /*with_grade=*/true)).second) {
      out.records.push_back(record);
    }
  }
  return out;
}

std::vector<GradeConflict> FindGradeConflicts(const Corpus& corpus) {
  struct Group {
    size_t first_index;
    bool has_correct = false;
    bool has_incorrect = false;
    std::vector<std::string> ids;
  };
  std::unordered_map<std::string, Group> groups;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const GradingRecord& r = corpus.records[i];
    auto [it, inserted] = groups.try_emplace(TupleKey(r, false), Group{i, false, false, {}});
    (r.grade == Grade::kCorrect ? it->second.has_correct
                                : it->second.has_incorrect) = true;
    it->second.ids.push_back(r.record_id);
  }

  std::vector<std::pair<size_t, GradeConflict>> ordered;
  for (auto& [key, group] : groups) {
    if (!group.has_correct || !group.has_incorrect) continue;
    const GradingRecord& r = corpus.records[group.first_index];
    ordered.push_back({group.first_index,
                       {r.question, r.correct_answer, r.given_answer,
                        std::move(group.ids)}});
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<GradeConflict> out;
  for (auto& [index, conflict] : ordered) out.push_back(std::move(conflict));
  return out;
}

Corpus Balance(const Corpus& corpus, uint64_t seed) {
  const std::vector<GradingRecord>& records = corpus.records;
  size_t n_correct = 0;
  for (const GradingRecord& r : records) {
    if (r.grade == Grade::kCorrect) ++n_correct;
  }
  const size_t n_incorrect = records.size() - n_correct;
  if (n_correct == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "balance requires at least one Correct record");
  }
  if (n_incorrect > n_correct) {
    throw Error(ErrorCode::kInvalidArgument,
                "balance only adds Incorrect negatives, but Incorrect (" +
                    std::to_string(n_incorrect) + ") outnumbers Correct (" +
                    std::to_string(n_correct) + ")");
  }

  // Records grouped by question, groups in first-appearance order, so that
  // "any record of another question" is a contiguous complement.
  std::unordered_map<std::string, size_t> group_of_question;
  std::vector<std::vector<size_t>> groups;
  for (size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] =
        group_of_question.try_emplace(records[i].question_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  if (groups.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "balance requires at least 2 distinct question_ids");
  }

  Corpus out = corpus;
  if (n_correct == n_incorrect) return out;

  std::vector<size_t> order;
  std::vector<size_t> group_begin(groups.size());
  std::vector<size_t> group_of_record(records.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    group_begin[g] = order.size();
    for (size_t i : groups[g]) {
      group_of_record[i] = g;
      order.push_back(i);
    }
  }

  std::unordered_set<std::string> ids;
  for (const GradingRecord& r : records) ids.insert(r.record_id);

  Rng rng(seed);
  const size_t needed = n_correct - n_incorrect;
  for (size_t k = 0; k < needed; ++k) {
    const size_t anchor = rng.UniformIndex(records.size());
    const size_t g = group_of_record[anchor];
    const size_t group_size = groups[g].size();
    size_t r = rng.UniformIndex(records.size() - group_size);
    if (r >= group_begin[g]) r += group_size;
    const GradingRecord& donor = records[order[r]];
    const GradingRecord& base = records[anchor];

    GradingRecord negative;
    negative.record_id = base.record_id + "#neg" + std::to_string(k);
    while (!ids.insert(negative.record_id).second) negative.record_id += "'";
    negative.question_id = base.question_id;
    negative.question = base.question;
    negative.correct_answer = base.correct_answer;
    negative.given_answer = donor.given_answer;
    negative.grade = Grade::kIncorrect;
    negative.language = base.language;
    negative.synthetic = true;
    out.records.push_back(std::move(negative));
  }
  return out;
}

CorpusSplit SplitByQuestion(const Corpus& corpus, size_t n_validation_questions,
                            size_t n_test_questions, uint64_t seed) {
  std::vector<std::string> questions;
  std::unordered_set<std::string> seen;
  for (const GradingRecord& r : corpus.records) {
    if (seen.insert(r.question_id).second) questions.push_back(r.question_id);
  }
  const size_t held_out = n_validation_questions + n_test_questions;
  if (held_out > 0 && questions.size() <= held_out) {
    throw Error(ErrorCode::kInsufficientData,
                "split needs more than " + std::to_string(held_out) +
                    " distinct questions, got " +
                    std::to_string(questions.size()));
  }

  Rng rng(seed);
  rng.Shuffle(questions);
  std::unordered_map<std::string, CorpusRole> role_of;
  for (size_t i = 0; i < questions.size(); ++i) {
    role_of[questions[i]] = i < n_validation_questions ? CorpusRole::kValidation
                            : i < held_out             ? CorpusRole::kTest
                                                       : CorpusRole::kTrain;
  }

  CorpusSplit split;
  split.train.role = CorpusRole::kTrain;
  split.validation.role = CorpusRole::kValidation;
  split.test.role = CorpusRole::kTest;
  for (const GradingRecord& r : corpus.records) {
    switch (role_of[r.question_id]) {
      case CorpusRole::kValidation:
        split.validation.records.push_back(r);
        break;
      case CorpusRole::kTest:
        split.test.records.push_back(r);
        break;
      default:
        split.train.records.push_back(r);
        break;
    }
  }
  return split;
}

CorpusStats ComputeStats(const Corpus& corpus) {
  CorpusStats stats;
  stats.record_count = corpus.records.size();
  size_t n_correct = 0;
  std::unordered_map<std::string, std::set<std::string>> answers;
  for (const GradingRecord& r : corpus.records) {
    if (r.grade == Grade::kCorrect) ++n_correct;
    answers[r.question_id].insert(r.given_answer);
    ++stats.answer_word_count[SplitWords(r.given_answer).size()];
    ++stats.records_per_language[r.language.value_or("und")];
  }
  stats.question_count = answers.size();
  for (const auto& [question, unique] : answers) {
    ++stats.unique_answers_per_question[unique.size()];
  }
  stats.correct_fraction =
      stats.record_count == 0
          ? 0.0
          : static_cast<double>(n_correct) / static_cast<double>(stats.record_count);
  return stats;
}

}  // namespace shortgrade
