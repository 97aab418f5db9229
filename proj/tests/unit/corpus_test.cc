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

#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "oracles.h"
#include "shortgrade/error.h"
#include "shortgrade/text.h"

namespace shortgrade {
namespace {

std::string Line(const std::string& qid, const std::string& question,
                 const std::string& given, const std::string& grade,
                 const std::string& id = "") {
  std::string line = "{";
  if (!id.empty()) line += "\"record_id\":\"" + id + "\",";
  line += "\"question_id\":\"" + qid + "\",\"question\":\"" + question +
          "\",\"correct_answer\":\"ref\",\"given_answer\":\"" + given +
          "\",\"grade\":\"" + grade + "\"}";
  return line;
}

IngestResult IngestText(const std::string& text) {
  std::istringstream in(text);
  return Ingest(in);
}

TEST(Ingest, TruncatesLongQuestionTo128Characters) {
  const IngestResult r = IngestText(Line("1", std::string(300, 'x'), "a", "correct"));
  ASSERT_EQ(r.corpus.records.size(), 1u);
  EXPECT_EQ(CodePointCount(r.corpus.records[0].question), 128u);
}

TEST(Ingest, TruncatesAnswersTo64Characters) {
  const IngestResult r = IngestText(Line("1", "q", std::string(100, 'y'), "correct"));
  ASSERT_EQ(r.corpus.records.size(), 1u);
  EXPECT_EQ(CodePointCount(r.corpus.records[0].given_answer), 64u);
}

TEST(Ingest, EmptyStreamGivesEmptyCorpusAndZeroStats) {
  const IngestResult r = IngestText("");
  EXPECT_TRUE(r.corpus.records.empty());
  EXPECT_EQ(r.report.accepted, 0u);
  const CorpusStats stats = ComputeStats(r.corpus);
  EXPECT_EQ(stats.record_count, 0u);
  EXPECT_EQ(stats.question_count, 0u);
  EXPECT_EQ(stats.correct_fraction, 0.0);
  EXPECT_TRUE(stats.unique_answers_per_question.empty());
}

TEST(Ingest, MapsGradeStrings) {
  const IngestResult r =
      IngestText(Line("1", "q", "a", "correct") + "\n" + Line("1", "q", "b", "incorrect"));
  ASSERT_EQ(r.corpus.records.size(), 2u);
  EXPECT_EQ(r.corpus.records[0].grade, Grade::kCorrect);
  EXPECT_EQ(r.corpus.records[1].grade, Grade::kIncorrect);
}

TEST(Ingest, NormalizesText) {
  const IngestResult r = IngestText(Line("1", "  Which  WORD ", "To   Sit", "correct"));
  ASSERT_EQ(r.corpus.records.size(), 1u);
  EXPECT_EQ(r.corpus.records[0].question, "which word");
  EXPECT_EQ(r.corpus.records[0].given_answer, "to sit");
}

TEST(Ingest, AssignsMissingRecordIds) {
  const IngestResult r = IngestText("\n" + Line("7", "q", "a", "correct"));
  ASSERT_EQ(r.corpus.records.size(), 1u);
  EXPECT_EQ(r.corpus.records[0].record_id, "q7#2");
}

TEST(Ingest, RejectsInvalidRecordsWithoutFailing) {
  const std::string text = Line("1", "q", "a", "correct", "x") + "\n" +
                           "not json\n" +
                           "{\"question_id\":\"1\",\"question\":\"q\"}\n" +
                           Line("1", "q", "a", "partial") + "\n" +
                           Line("1", "   ", "a", "correct") + "\n" +
                           Line("1", "q", "b", "correct", "x") + "\n";
  const IngestResult r = IngestText(text);
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.report.rejected, 5u);
  ASSERT_EQ(r.report.rejections.size(), 5u);
  EXPECT_EQ(r.report.rejections[0].line, 2u);
  EXPECT_EQ(r.report.rejections[1].reason, "missing field: correct_answer");
  EXPECT_NE(r.report.rejections[4].reason.find("duplicate record_id"), std::string::npos);
}

TEST(Ingest, CountsGradeConflicts) {
  const IngestResult r =
      IngestText(Line("1", "q", "a", "correct") + "\n" + Line("1", "q", "a", "incorrect"));
  EXPECT_EQ(r.report.duplicate_conflicts, 2u);
}

TEST(Ingest, UnreadableFileIsAnIoError) {
  try {
    IngestFile("/nonexistent/records.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Ingest, NeverExceedsLimitsOnRandomInput) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 200);
  std::string text;
  for (int i = 0; i < 200; ++i) {
    text += Line(std::to_string(i), "q" + std::string(len(rng), 'a'),
                 std::string(len(rng), 'b'), "correct") +
            "\n";
  }
  const IngestResult r = IngestText(text);
  for (const GradingRecord& rec : r.corpus.records) {
    EXPECT_LE(CodePointCount(rec.question), 128u);
    EXPECT_LE(CodePointCount(rec.given_answer), 64u);
    EXPECT_LE(CodePointCount(rec.correct_answer), 64u);
  }
}

GradingRecord Rec(const std::string& id, const std::string& qid, const std::string& given,
                  Grade grade) {
  GradingRecord r;
  r.record_id = id;
  r.question_id = qid;
  r.question = "question " + qid;
  r.correct_answer = "ref";
  r.given_answer = given;
  r.grade = grade;
  return r;
}

TEST(Deduplicate, KeepsOneOfIdenticalRecords) {
  Corpus c;
  c.records = {Rec("a", "1", "x", Grade::kCorrect), Rec("b", "1", "x", Grade::kCorrect)};
  const Corpus d = Deduplicate(c);
  ASSERT_EQ(d.records.size(), 1u);
  EXPECT_EQ(d.records[0].record_id, "a");
}

TEST(Deduplicate, KeepsConflictingGrades) {
  Corpus c;
  c.records = {Rec("a", "1", "x", Grade::kCorrect), Rec("b", "1", "x", Grade::kIncorrect)};
  EXPECT_EQ(Deduplicate(c).records.size(), 2u);
  const auto conflicts = FindGradeConflicts(c);
  ASSERT_EQ(conflicts.size(), 1u);
  EXPECT_EQ(conflicts[0].record_ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Deduplicate, PlantedDuplicatesMatchBruteForceCount) {
  std::mt19937_64 rng(11);
  Corpus c;
  for (int i = 0; i < 60; ++i) {
    c.records.push_back(Rec("u" + std::to_string(i), std::to_string(i % 9),
                            "given " + std::to_string(i), i % 3 ? Grade::kCorrect
                                                                : Grade::kIncorrect));
  }
  std::uniform_int_distribution<size_t> pick(0, 59);
  for (int i = 0; i < 40; ++i) {
    GradingRecord dup = c.records[pick(rng)];
    dup.record_id = "d" + std::to_string(i);
    c.records.push_back(dup);
  }
  std::shuffle(c.records.begin(), c.records.end(), rng);
  std::set<std::tuple<std::string, std::string, std::string, int>> distinct;
  for (const auto& r : c.records) {
    distinct.insert({r.question, r.correct_answer, r.given_answer, int(r.grade)});
  }
  const Corpus d = Deduplicate(c);
  EXPECT_EQ(d.records.size(), distinct.size());
  EXPECT_EQ(d.records.size(), 60u);
  EXPECT_EQ(Deduplicate(d).records, d.records);
}

TEST(Deduplicate, KeepsFirstOccurrenceOrder) {
  Corpus c;
  c.records = {Rec("a", "1", "x", Grade::kCorrect), Rec("b", "2", "y", Grade::kCorrect),
               Rec("c", "1", "x", Grade::kCorrect), Rec("d", "3", "z", Grade::kCorrect)};
  const Corpus d = Deduplicate(c);
  ASSERT_EQ(d.records.size(), 3u);
  EXPECT_EQ(d.records[0].record_id, "a");
  EXPECT_EQ(d.records[1].record_id, "b");
  EXPECT_EQ(d.records[2].record_id, "d");
}

Corpus Mix(size_t correct, size_t incorrect, size_t questions) {
  Corpus c;
  for (size_t i = 0; i < correct + incorrect; ++i) {
    c.records.push_back(Rec("r" + std::to_string(i), std::to_string(i % questions),
                            "g" + std::to_string(i),
                            i < correct ? Grade::kCorrect : Grade::kIncorrect));
  }
  return c;
}

TEST(Balance, AddsSixteenNegativesTo58To42) {
  const Corpus b = Balance(Mix(58, 42, 10), 1);
  size_t correct = 0, incorrect = 0, synthetic = 0;
  for (const auto& r : b.records) {
    (r.grade == Grade::kCorrect ? correct : incorrect)++;
    synthetic += r.synthetic;
  }
  EXPECT_EQ(correct, 58u);
  EXPECT_EQ(incorrect, 58u);
  EXPECT_EQ(synthetic, 16u);
}

TEST(Balance, BalancedInputIsAFixedPoint) {
  const Corpus c = Mix(50, 50, 10);
  EXPECT_EQ(Balance(c, 3).records, c.records);
}

TEST(Balance, SyntheticNegativesAreCrossQuestionOnExhaustiveCheck) {
  const Corpus c = Mix(150, 50, 13);
  const Corpus b = Balance(c, 9);
  std::multimap<std::string, std::string> answer_to_question;
  for (const auto& r : c.records) answer_to_question.insert({r.given_answer, r.question_id});
  size_t synthetic = 0;
  for (const auto& r : b.records) {
    if (!r.synthetic) continue;
    ++synthetic;
    EXPECT_EQ(r.grade, Grade::kIncorrect);
    auto [lo, hi] = answer_to_question.equal_range(r.given_answer);
    ASSERT_NE(lo, hi);
    for (auto it = lo; it != hi; ++it) EXPECT_NE(it->second, r.question_id);
  }
  EXPECT_EQ(synthetic, 100u);
  // Superset of the input.
  for (size_t i = 0; i < c.records.size(); ++i) EXPECT_EQ(b.records[i], c.records[i]);
}

TEST(Balance, IsDeterministicGivenSeed) {
  const Corpus c = Mix(70, 30, 8);
  EXPECT_EQ(Balance(c, 4).records, Balance(c, 4).records);
  EXPECT_NE(Balance(c, 4).records, Balance(c, 5).records);
}

TEST(Balance, RefusesWhenIncorrectOutnumberCorrect) {
  EXPECT_THROW(Balance(Mix(10, 20, 5), 1), Error);
  EXPECT_THROW(Balance(Mix(10, 5, 1), 1), Error);
  EXPECT_THROW(Balance(Mix(0, 0, 1), 1), Error);
}

TEST(SplitByQuestion, ThirtyQuestionsSplitTenTenTen) {
  const Corpus c = Mix(90, 60, 30);
  const CorpusSplit s = SplitByQuestion(c, 10, 10, 2);
  auto questions = [](const Corpus& part) {
    std::set<std::string> q;
    for (const auto& r : part.records) q.insert(r.question_id);
    return q;
  };
  EXPECT_EQ(questions(s.train).size(), 10u);
  EXPECT_EQ(questions(s.validation).size(), 10u);
  EXPECT_EQ(questions(s.test).size(), 10u);
  EXPECT_EQ(s.train.records.size() + s.validation.records.size() + s.test.records.size(),
            c.records.size());
  EXPECT_EQ(s.validation.role, CorpusRole::kValidation);
  EXPECT_EQ(s.test.role, CorpusRole::kTest);
}

TEST(SplitByQuestion, ZeroHeldOutKeepsEverything) {
  const Corpus c = Mix(10, 10, 4);
  const CorpusSplit s = SplitByQuestion(c, 0, 0, 2);
  EXPECT_EQ(s.train.records, c.records);
  EXPECT_TRUE(s.validation.records.empty());
  EXPECT_TRUE(s.test.records.empty());
}

TEST(SplitByQuestion, UnionEqualsInputOnRandomCorpora) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Corpus c = oracle::RandomCorpus(rng, 5 + trial % 20, 6, 0.6);
    const CorpusSplit s = SplitByQuestion(c, 2, 2, trial);
    std::multiset<std::string> in, out;
    for (const auto& r : c.records) in.insert(r.record_id);
    for (const Corpus* part : {&s.train, &s.validation, &s.test}) {
      for (const auto& r : part->records) out.insert(r.record_id);
    }
    EXPECT_EQ(in, out);
  }
}

TEST(SplitByQuestion, InsufficientQuestionsNamesCounts) {
  try {
    SplitByQuestion(Mix(10, 10, 4), 3, 2, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
    const std::string message = e.what();
    EXPECT_NE(message.find("more than 5"), std::string::npos);
    EXPECT_NE(message.find("got 4"), std::string::npos);
  }
}

TEST(ComputeStats, OneQuestionThreeIdenticalAnswers) {
  Corpus c;
  for (int i = 0; i < 3; ++i) {
    c.records.push_back(Rec("r" + std::to_string(i), "1", "same", Grade::kCorrect));
  }
  const CorpusStats s = ComputeStats(c);
  EXPECT_EQ(s.unique_answers_per_question, (std::map<size_t, size_t>{{1, 1}}));
}

TEST(ComputeStats, CorrectFractionOf58To42) {
  EXPECT_DOUBLE_EQ(ComputeStats(Mix(58, 42, 10)).correct_fraction, 0.58);
}

TEST(ComputeStats, CountsWordsOfTheGivenAnswer) {
  Corpus c;
  c.records.push_back(Rec("r", "1", "to sit", Grade::kCorrect));
  const CorpusStats s = ComputeStats(c);
  EXPECT_EQ(s.answer_word_count, (std::map<size_t, size_t>{{2, 1}}));
  EXPECT_EQ(s.records_per_language, (std::map<std::string, size_t>{{"und", 1}}));
}

TEST(ComputeStats, HistogramMassesMatchCounts) {
  std::mt19937_64 rng(8);
  const Corpus c = oracle::RandomCorpus(rng, 40, 7, 0.5);
  const CorpusStats s = ComputeStats(c);
  size_t questions = 0, records = 0, languages = 0;
  for (const auto& [k, v] : s.unique_answers_per_question) questions += v;
  for (const auto& [k, v] : s.answer_word_count) records += v;
  for (const auto& [k, v] : s.records_per_language) languages += v;
  EXPECT_EQ(questions, s.question_count);
  EXPECT_EQ(records, s.record_count);
  EXPECT_EQ(languages, s.record_count);
}

}  // namespace
}  // namespace shortgrade
