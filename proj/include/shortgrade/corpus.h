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

#ifndef SHORTGRADE_CORPUS_H_
#define SHORTGRADE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace shortgrade {

enum class Grade { kCorrect, kIncorrect };

enum class CorpusRole { kTrain, kValidation, kTest, kExam };

// One (question, teacher answer, student answer, grade) tuple.
struct GradingRecord {
  std::string record_id;
  std::string question_id;
  std::string question;
  std::string correct_answer;
  std::string given_answer;
  Grade grade = Grade::kIncorrect;
  std::optional<std::string> language;
  // Produced by negative sampling; always graded Incorrect.
  bool synthetic = false;

  bool operator==(const GradingRecord&) const = default;
};

struct Corpus {
  std::vector<GradingRecord> records;
  CorpusRole role = CorpusRole::kTrain;
};

struct FieldLimits {
  size_t max_question_chars = 128;
  size_t max_answer_chars = 64;
};

struct Rejection {
  size_t line = 0;
  std::string reason;
};

struct IngestReport {
  size_t accepted = 0;
  size_t rejected = 0;
  // Records whose (question, correct_answer, given_answer) also appears with
  // the opposite grade.
  size_t duplicate_conflicts = 0;
  std::vector<Rejection> rejections;
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

// Reads the JSONL record schema. Malformed lines are rejected with a reason
// and never abort the stream; an unreadable stream throws kIo.
IngestResult Ingest(std::istream& source, const FieldLimits& limits = {});
IngestResult IngestFile(const std::string& path, const FieldLimits& limits = {});

// First occurrence of each normalized (Q, A^c, A^g, G) wins; order is stable.
Corpus Deduplicate(const Corpus& corpus);

struct GradeConflict {
  std::string question;
  std::string correct_answer;
  std::string given_answer;
  std::vector<std::string> record_ids;
};

// Groups of records that agree on (Q, A^c, A^g) but carry both grades.
std::vector<GradeConflict> FindGradeConflicts(const Corpus& corpus);

// Adds cross-question negatives until Correct and Incorrect counts are equal.
// Throws kInvalidArgument when Incorrect already outnumbers Correct.
Corpus Balance(const Corpus& corpus, uint64_t seed);

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

// Question-disjoint split; all answers of a question stay together.
CorpusSplit SplitByQuestion(const Corpus& corpus, size_t n_validation_questions,
                            size_t n_test_questions, uint64_t seed);

struct CorpusStats {
  size_t record_count = 0;
  size_t question_count = 0;
  double correct_fraction = 0.0;
  // unique given answers -> number of questions with that many.
  std::map<size_t, size_t> unique_answers_per_question;
  // words in the given answer -> number of records.
  std::map<size_t, size_t> answer_word_count;
  // Missing language tags are counted under "und".
  std::map<std::string, size_t> records_per_language;
};

CorpusStats ComputeStats(const Corpus& corpus);

std::string_view GradeName(Grade grade);
// Accepts "correct" / "incorrect" in any case.
std::optional<Grade> ParseGrade(std::string_view text);
std::string_view CorpusRoleName(CorpusRole role);

}  // namespace shortgrade

#endif  // SHORTGRADE_CORPUS_H_
