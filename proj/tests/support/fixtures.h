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

#ifndef SHORTGRADE_TESTS_SUPPORT_FIXTURES_H_
#define SHORTGRADE_TESTS_SUPPORT_FIXTURES_H_

#include <string>
#include <utility>
#include <vector>

#include "shortgrade/calibration.h"

namespace shortgrade::testing {

// Rows of (similarity, 'C' or 'I'); record ids are r0, r1, ...
inline ScoredDataset MakeScored(const std::vector<std::pair<double, char>>& rows) {
  ScoredDataset data;
  size_t i = 0;
  for (const auto& [s, g] : rows) {
    ScoredRecord r;
    r.record.record_id = "r" + std::to_string(i);
    r.record.question_id = "q" + std::to_string(i % 5);
    r.record.question = "question " + std::to_string(i % 5);
    r.record.correct_answer = "answer";
    r.record.given_answer = "given " + std::to_string(i);
    r.record.grade = g == 'C' ? Grade::kCorrect : Grade::kIncorrect;
    r.s = s;
    data.items.push_back(r);
    ++i;
  }
  return data;
}

// Appends `count` copies of (s, grade) to rows.
inline void Repeat(std::vector<std::pair<double, char>>& rows, size_t count, double s,
                   char grade) {
  for (size_t i = 0; i < count; ++i) rows.emplace_back(s, grade);
}

}  // namespace shortgrade::testing

#endif  // SHORTGRADE_TESTS_SUPPORT_FIXTURES_H_
