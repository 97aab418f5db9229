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

#include "shortgrade/synthetic.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "shortgrade/error.h"
#include "shortgrade/rng.h"

namespace shortgrade {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                   "p", "r", "s", "t", "v", "z", "br", "kr",
                                   "st", "tr", "pl", "sh"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ei"};

std::string PseudoWord(Rng& rng, size_t syllables) {
  std::string word;
  for (size_t i = 0; i < syllables; ++i) {
    word += kOnsets[rng.UniformIndex(std::size(kOnsets))];
    word += kVowels[rng.UniformIndex(std::size(kVowels))];
  }
  if (rng.UniformIndex(2) == 0) word += "n";
  return word;
}

std::vector<std::string> DistinctWords(Rng& rng, size_t count,
                                       std::set<std::string>& used) {
  std::vector<std::string> words;
  while (words.size() < count) {
    std::string w = PseudoWord(rng, 2 + rng.UniformIndex(2));
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

}  // namespace

Corpus MakeSyntheticCorpus(const SyntheticCorpusConfig& config) {
  if (config.concepts < 2 || config.synonyms_per_concept < 1 ||
      config.questions < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least 2 concepts, 1 synonym and 1 question");
  }
  Rng vocab_rng(config.vocabulary_seed);
  std::set<std::string> used;
  std::vector<std::vector<std::string>> synonyms(config.concepts);
  for (auto& group : synonyms) {
    group = DistinctWords(vocab_rng, config.synonyms_per_concept, used);
  }
  const std::vector<std::string> topics = DistinctWords(vocab_rng, 40, used);
  Rng rng(config.seed);
  static const char* kTemplates[] = {"which word means %", "name the % term",
                                     "what do we call %", "give the word for %"};

  Corpus corpus;
  corpus.role = CorpusRole::kTrain;
  for (size_t q = 0; q < config.questions; ++q) {
    const size_t concept_id = rng.UniformIndex(config.concepts);
    std::string question = kTemplates[rng.UniformIndex(std::size(kTemplates))];
    const std::string topic = topics[rng.UniformIndex(topics.size())] + " " +
                              std::to_string(q);
    question.replace(question.find('%'), 1, topic);
    const std::string qid = "sq" + std::to_string(q);
    const std::string& reference = synonyms[concept_id][0];

    size_t k = 0;
    auto add = [&](const std::string& answer, Grade grade) {
      GradingRecord r;
      r.record_id = qid + "-" + std::to_string(k++);
      r.question_id = qid;
      r.question = question;
      r.correct_answer = reference;
      r.given_answer = answer;
      r.grade = grade;
      r.language = "und";
      corpus.records.push_back(std::move(r));
    };
    for (size_t i = 0; i < config.correct_per_question; ++i) {
      const auto& group = synonyms[concept_id];
      add(group[rng.UniformIndex(group.size())], Grade::kCorrect);
    }
    for (size_t i = 0; i < config.incorrect_per_question; ++i) {
      size_t other = rng.UniformIndex(config.concepts - 1);
      if (other >= concept_id) ++other;
      const auto& group = synonyms[other];
      add(group[rng.UniformIndex(group.size())], Grade::kIncorrect);
    }
  }
  return corpus;
}

ScoredDataset MakeSyntheticScores(const SyntheticScoreConfig& config) {
  if (!(config.correct_fraction >= 0.0 && config.correct_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "correct_fraction must be in [0, 1]");
  }
  Rng rng(config.seed);
  ScoredDataset data;
  data.role = CorpusRole::kValidation;
  data.items.reserve(config.n);
  for (size_t i = 0; i < config.n; ++i) {
    ScoredRecord item;
    GradingRecord& r = item.record;
    r.record_id = "s" + std::to_string(i);
    r.question_id = "sq" + std::to_string(i / 10);
    r.question = "question " + std::to_string(i / 10);
    r.correct_answer = "reference " + std::to_string(i / 10);
    r.given_answer = "answer " + std::to_string(i);
    const bool correct = rng.Uniform01() < config.correct_fraction;
    r.grade = correct ? Grade::kCorrect : Grade::kIncorrect;
    const double z = rng.Normal();
    const double s = correct ? config.mean_correct + config.sd_correct * z
                             : config.mean_incorrect + config.sd_incorrect * z;
    item.s = std::clamp(s, -1.0, 1.0);
    data.items.push_back(std::move(item));
  }
  return data;
}

}  // namespace shortgrade
