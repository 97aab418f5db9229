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

#ifndef SHORTGRADE_EMBEDDING_H_
#define SHORTGRADE_EMBEDDING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shortgrade/corpus.h"

namespace shortgrade {

enum class EmbedderKind { kHashedNGram, kRemote };

struct RemoteBackendConfig {
  // Base URL, e.g. "http://127.0.0.1:8081"; requests go to <url>/embed.
  std::string url;
  int timeout_ms = 10000;
  size_t batch_cap = 32;
  // Name of the environment variable holding a static bearer token; empty
  // disables the Authorization header.
  std::string token_env;
};

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHashedNGram;
  // Character n-gram lengths; word unigrams are always included.
  std::vector<int> ngram_sizes = {3, 4};
  size_t hash_dim = size_t{1} << 15;
  size_t projection_dim = 128;
  uint64_t hash_seed = 0;
  std::optional<RemoteBackendConfig> remote;

  // Throws kInvalidArgument on a power-of-two or dimension violation.
  void Validate() const;
};

// Unit-norm embedding of one (question, answer) pair.
struct PairVector {
  std::vector<double> values;
};

// L2-normalized signed hashed features of "question <sep> answer", sorted by
// index. `empty_answer` marks the zero-feature case that embeds to e_0.
struct HashedFeatures {
  std::vector<uint32_t> index;
  std::vector<double> value;
  bool empty_answer = false;
};

// Linear map from hashed features to the embedding space, row-major
// hash_dim x projection_dim.
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(size_t hash_dim, size_t projection_dim);

  // W[i][j] = 1 iff i mod projection_dim == j: folds the hashed space onto
  // the projection dimension. Used when no trained head is given and as the
  // training initialization.
  static ProjectionHead Fold(size_t hash_dim, size_t projection_dim);

  size_t hash_dim() const { return hash_dim_; }
  size_t projection_dim() const { return projection_dim_; }

  double* row(size_t i) { return weights_.data() + i * projection_dim_; }
  const double* row(size_t i) const {
    return weights_.data() + i * projection_dim_;
  }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  bool AllFinite() const;

  // Training metadata.
  size_t epochs = 0;
  std::vector<double> loss_history;  // [0] is the untrained loss.
  double final_loss() const {
    return loss_history.empty() ? 0.0 : loss_history.back();
  }

  // Binary format: "SGHEAD01", u64 header length, JSON header (dims, embedder
  // settings, training metadata), then little-endian float64 weights.
  void Save(const std::string& path, const EmbedderConfig& config) const;
  static ProjectionHead Load(const std::string& path,
                             EmbedderConfig* config_out = nullptr);

 private:
  size_t hash_dim_ = 0;
  size_t projection_dim_ = 0;
  std::vector<double> weights_;
};

struct TrainConfig {
  double margin = 0.2;
  double learning_rate = 1e-3;
  size_t epochs = 10;
  size_t batch_size = 32;
  uint64_t seed = 0;

  void Validate() const;
};

HashedFeatures HashPairFeatures(std::string_view question,
                                std::string_view answer,
                                const EmbedderConfig& config);

// Raw hashed feature keys (before hashing) of the pair, for inspection and
// for oracles that intersect feature sets.
std::vector<std::string> PairFeatureKeys(std::string_view question,
                                         std::string_view answer,
                                         const EmbedderConfig& config);

// Projects features through `head` (the fold map when null) and
// re-normalizes; a zero projection or empty answer yields e_0.
PairVector ProjectFeatures(const HashedFeatures& features,
                           const ProjectionHead* head,
                           const EmbedderConfig& config);

PairVector EmbedPair(std::string_view question, std::string_view answer,
                     const EmbedderConfig& config,
                     const ProjectionHead* head = nullptr);

// Clamped to [-1, 1]. Throws kDimensionMismatch on unequal sizes.
double Cosine(const PairVector& u, const PairVector& v);
double Cosine(const std::vector<double>& u, const std::vector<double>& v);

// s = cos(embed(Q, A^c), embed(Q, A^g)).
double Similarity(const GradingRecord& record, const EmbedderConfig& config,
                  const ProjectionHead* head = nullptr);

// Scores every record; remote backends are called in capped batches.
std::vector<double> Similarities(const std::vector<GradingRecord>& records,
                                 const EmbedderConfig& config,
                                 const ProjectionHead* head = nullptr);

// label = +1: 1 - cos.  label = -1: max(0, cos - margin).
double PairLoss(double cos_value, int label, double margin);

// One (v_c, v_g) training pair in hashed-feature form.
struct TrainingPair {
  HashedFeatures reference;  // (Q, A^c)
  HashedFeatures given;      // (Q, A^g)
  int label = 1;
};

std::vector<TrainingPair> MakeTrainingPairs(
    const std::vector<GradingRecord>& records, const EmbedderConfig& config);

// Sparse gradient: only rows touched by the batch.
struct HeadGradient {
  std::vector<uint32_t> rows;
  std::vector<double> values;  // rows.size() x projection_dim
};

// Mean pair loss of `pairs` under `head`.
double ProjectionObjective(const ProjectionHead& head,
                           const std::vector<TrainingPair>& pairs,
                           double margin);

// Mean pair loss and its gradient with respect to the head weights.
std::pair<double, HeadGradient> ProjectionObjectiveGradient(
    const ProjectionHead& head, const std::vector<TrainingPair>& pairs,
    double margin);

// Mini-batch gradient descent on the mean pair loss, starting from the fold
// map. Records graded Correct are positives. Throws kEmptyDataset on an empty
// corpus and kDivergence when a loss becomes non-finite.
ProjectionHead TrainProjection(const Corpus& corpus,
                               const EmbedderConfig& embed_config,
                               const TrainConfig& train_config);

}  // namespace shortgrade

#endif  // SHORTGRADE_EMBEDDING_H_
