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

#ifndef SHORTGRADE_TEXT_H_
#define SHORTGRADE_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace shortgrade {

// NFC, lowercase (root locale), whitespace runs collapsed to one ASCII space,
// leading/trailing whitespace removed. Ill-formed UTF-8 becomes U+FFFD.
std::string NormalizeText(std::string_view text);

// Number of Unicode code points in well-formed UTF-8.
size_t CodePointCount(std::string_view utf8);

// Keeps the first `max_code_points` code points.
std::string TruncateCodePoints(std::string_view utf8, size_t max_code_points);

// Byte slices of each code point, in order. The views alias `utf8`.
std::vector<std::string_view> SplitCodePoints(std::string_view utf8);

// Splits on ASCII spaces; text is expected to be normalized already.
std::vector<std::string_view> SplitWords(std::string_view text);

}  // namespace shortgrade

#endif  // SHORTGRADE_TEXT_H_
