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

#ifndef SHORTGRADE_CLI_H_
#define SHORTGRADE_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace shortgrade {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

// Runs one command line. `args` excludes the program name. Results go to
// `out` unless an --output path is given; errors go to `err` as a single
// JSON line.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace shortgrade

#endif  // SHORTGRADE_CLI_H_
