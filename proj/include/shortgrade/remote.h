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

#ifndef SHORTGRADE_REMOTE_H_
#define SHORTGRADE_REMOTE_H_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "shortgrade/embedding.h"

namespace shortgrade {

using QuestionAnswer = std::pair<std::string, std::string>;

// POST <url>/embed with {"pairs": [[q, a], ...]} in chunks of at most
// remote.batch_cap pairs. Vectors come back in request order and are
// re-normalized locally. Failures surface as kTransport,
// kMalformedResponse or kDimensionMismatch; there is no local fallback.
std::vector<PairVector> EmbedBatchRemote(const std::vector<QuestionAnswer>& pairs,
                                         const RemoteBackendConfig& remote,
                                         size_t expected_dim);

}  // namespace shortgrade

#endif  // SHORTGRADE_REMOTE_H_
