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

// Seeded synthetic fixtures: a grading corpus with a learnable synonym
// structure and labeled similarity scores with overlapping class
// distributions.

#ifndef SHORTGRADE_SYNTHETIC_H_
#define SHORTGRADE_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include "shortgrade/calibration.h"
#include "shortgrade/corpus.h"

namespace shortgrade {

struct SyntheticCorpusConfig {
  size_t concepts = 24;
  size_t synonyms_per_concept = 4;
  size_t questions = 200;
  size_t correct_per_question = 5;
  size_t incorrect_per_question = 5;
  // Draws questions and answers.
  uint64_t seed = 42;
  // Draws the concept vocabulary; corpora sharing it are exchangeable.
  uint64_t vocabulary_seed = 42;
};

// Every concept owns a few pseudo-word synonyms. A question asks for one
// concept; its reference answer is that concept's first synonym. Correct
// answers use any synonym of the concept, incorrect answers a synonym of a
// different concept. Lexical overlap alone cannot separate the classes.
Corpus MakeSyntheticCorpus(const SyntheticCorpusConfig& config);

struct SyntheticScoreConfig {
  size_t n = 5000;
  double correct_fraction = 0.5;
  double mean_correct = 0.78;
  double sd_correct = 0.12;
  double mean_incorrect = 0.55;
  double sd_incorrect = 0.15;
  uint64_t seed = 42;
};

// Scores are drawn from one normal per class and clamped to [-1, 1].
ScoredDataset MakeSyntheticScores(const SyntheticScoreConfig& config);

}  // namespace shortgrade

#endif  // SHORTGRADE_SYNTHETIC_H_
