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

#include "shortgrade/embedding.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "shortgrade/error.h"
#include "shortgrade/remote.h"
#include "shortgrade/rng.h"
#include "shortgrade/text.h"

namespace shortgrade {

namespace {

constexpr char kSeparator = '\x1f';
constexpr char kHeadMagic[8] = {'S', 'G', 'H', 'E', 'A', 'D', '0', '1'};

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t HashKey(std::string_view key, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Mix64(h ^ Mix64(seed));
}

std::string StripSeparator(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != kSeparator) out.push_back(c);
  }
  return out;
}

PairVector UnitBasis(size_t dim) {
  PairVector v;
  v.values.assign(dim, 0.0);
  if (dim > 0) v.values[0] = 1.0;
  return v;
}

// y = W^T x over the sparse rows of x.
void ProjectInto(const HashedFeatures& x, const ProjectionHead& head,
                 std::vector<double>& y) {
  const size_t d = head.projection_dim();
  y.assign(d, 0.0);
  for (size_t k = 0; k < x.index.size(); ++k) {
    const double* w = head.row(x.index[k]);
    const double xv = x.value[k];
    for (size_t j = 0; j < d; ++j) y[j] += xv * w[j];
  }
}

double Norm(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void RequireHeadMatches(const ProjectionHead& head, const EmbedderConfig& config) {
  if (head.hash_dim() != config.hash_dim ||
      head.projection_dim() != config.projection_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "projection head is " + std::to_string(head.hash_dim()) + "x" +
                    std::to_string(head.projection_dim()) +
                    " but the embedder expects " +
                    std::to_string(config.hash_dim) + "x" +
                    std::to_string(config.projection_dim));
  }
}

// Projected, not yet normalized, embedding of one side of a pair. `fixed`
// is set when the vector is the constant e_0 (and so carries no gradient).
struct Forward {
  std::vector<double> y;
  double norm = 0.0;
  bool fixed = false;
};

Forward RunForward(const HashedFeatures& x, const ProjectionHead& head) {
  Forward f;
  if (!x.empty_answer) {
    ProjectInto(x, head, f.y);
    f.norm = Norm(f.y);
  }
  if (x.empty_answer || f.norm == 0.0) {
    f.y = UnitBasis(head.projection_dim()).values;
    f.norm = 1.0;
    f.fixed = true;
  }
  return f;
}

double PairCos(const Forward& c, const Forward& g) {
  return Dot(c.y, g.y) / (c.norm * g.norm);
}

double LossSlope(double cos_value, int label, double margin) {
  if (label > 0) return -1.0;
  return cos_value > margin ? 1.0 : 0.0;
}

// Accumulates `scale * dcos/dy` for one side into the rows of x.
void AccumulateSide(const HashedFeatures& x, const Forward& self,
                    const Forward& other, double cos_value, double scale,
                    size_t d, std::vector<double>& grad_dense,
                    std::vector<uint8_t>& touched,
                    std::vector<uint32_t>& touched_rows) {
  if (self.fixed || scale == 0.0) return;
  std::vector<double> dy(d);
  const double inv = 1.0 / (self.norm * other.norm);
  const double self_sq = self.norm * self.norm;
  for (size_t j = 0; j < d; ++j) {
    dy[j] = scale * (other.y[j] * inv - cos_value * self.y[j] / self_sq);
  }
  for (size_t k = 0; k < x.index.size(); ++k) {
    const uint32_t i = x.index[k];
    if (!touched[i]) {
      touched[i] = 1;
      touched_rows.push_back(i);
    }
    double* g = grad_dense.data() + static_cast<size_t>(i) * d;
    const double xv = x.value[k];
    for (size_t j = 0; j < d; ++j) g[j] += xv * dy[j];
  }
}

// Batch gradient into a dense buffer; returns the summed loss.
double BatchGradient(const ProjectionHead& head,
                     const std::vector<TrainingPair>& pairs,
                     const std::vector<size_t>& batch, double margin,
                     double scale, std::vector<double>& grad_dense,
                     std::vector<uint8_t>& touched,
                     std::vector<uint32_t>& touched_rows) {
  const size_t d = head.projection_dim();
  double loss = 0.0;
  for (size_t p : batch) {
    const TrainingPair& pair = pairs[p];
    const Forward c = RunForward(pair.reference, head);
    const Forward g = RunForward(pair.given, head);
    const double cos_value = PairCos(c, g);
    loss += PairLoss(cos_value, pair.label, margin);
    const double slope = LossSlope(cos_value, pair.label, margin) * scale;
    AccumulateSide(pair.reference, c, g, cos_value, slope, d, grad_dense,
                   touched, touched_rows);
    AccumulateSide(pair.given, g, c, cos_value, slope, d, grad_dense, touched,
                   touched_rows);
  }
  return loss;
}

}  // namespace

void EmbedderConfig::Validate() const {
  if (kind == EmbedderKind::kRemote) {
    if (!remote || remote->url.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "remote embedder requires a backend URL");
    }
    if (remote->batch_cap == 0) {
      throw Error(ErrorCode::kInvalidArgument, "remote batch_cap must be >= 1");
    }
  }
  if (projection_dim < 1 || hash_dim < projection_dim) {
    throw Error(ErrorCode::kInvalidArgument,
                "require hash_dim >= projection_dim >= 1");
  }
  if (!std::has_single_bit(hash_dim)) {
    throw Error(ErrorCode::kInvalidArgument, "hash_dim must be a power of two");
  }
  if (hash_dim > (size_t{1} << 31)) {
    throw Error(ErrorCode::kInvalidArgument, "hash_dim too large");
  }
  for (int n : ngram_sizes) {
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram sizes must be >= 1");
  }
}

void TrainConfig::Validate() const {
  if (!(margin >= 0.0 && margin < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "margin must be in [0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
  }
  if (batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
}

ProjectionHead::ProjectionHead(size_t hash_dim, size_t projection_dim)
    : hash_dim_(hash_dim),
      projection_dim_(projection_dim),
      weights_(hash_dim * projection_dim, 0.0) {}

ProjectionHead ProjectionHead::Fold(size_t hash_dim, size_t projection_dim) {
  ProjectionHead head(hash_dim, projection_dim);
  for (size_t i = 0; i < hash_dim; ++i) head.row(i)[i % projection_dim] = 1.0;
  return head;
}

bool ProjectionHead::AllFinite() const {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double w) { return std::isfinite(w); });
}

void ProjectionHead::Save(const std::string& path,
                          const EmbedderConfig& config) const {
  static_assert(std::endian::native == std::endian::little,
                "head files are little-endian");
  nlohmann::json header = {
      {"hash_dim", hash_dim_},
      {"projection_dim", projection_dim_},
      {"ngram_sizes", config.ngram_sizes},
      {"hash_seed", config.hash_seed},
      {"epochs", epochs},
      {"loss_history", loss_history},
  };
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  const uint64_t length = text.size();
  out.write(kHeadMagic, sizeof(kHeadMagic));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

ProjectionHead ProjectionHead::Load(const std::string& path,
                                    EmbedderConfig* config_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  uint64_t length = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || std::memcmp(magic, kHeadMagic, sizeof(magic)) != 0 ||
      length > (1u << 24)) {
    throw Error(ErrorCode::kInvalidArgument, path + " is not a projection head");
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const nlohmann::json header =
      nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (header.is_discarded() || !header.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, path + ": corrupt head header");
  }
  ProjectionHead head(header.at("hash_dim").get<size_t>(),
                      header.at("projection_dim").get<size_t>());
  head.epochs = header.value("epochs", size_t{0});
  head.loss_history =
      header.value("loss_history", std::vector<double>{});
  in.read(reinterpret_cast<char*>(head.weights_.data()),
          static_cast<std::streamsize>(head.weights_.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::kIo, path + ": truncated weights");
  if (config_out != nullptr) {
    config_out->kind = EmbedderKind::kHashedNGram;
    config_out->hash_dim = head.hash_dim_;
    config_out->projection_dim = head.projection_dim_;
    config_out->ngram_sizes = header.value("ngram_sizes", std::vector<int>{3, 4});
    config_out->hash_seed = header.value("hash_seed", uint64_t{0});
  }
  return head;
}

std::vector<std::string> PairFeatureKeys(std::string_view question,
                                         std::string_view answer,
                                         const EmbedderConfig& config) {
  const std::string q = StripSeparator(question);
  const std::string a = StripSeparator(answer);
  std::vector<std::string> keys;

  const std::string sep_word(1, kSeparator);
  auto add_words = [&](std::string_view text) {
    for (std::string_view w : SplitWords(text)) keys.push_back("w:" + std::string(w));
  };
  add_words(q);
  add_words(a);

  const std::string joined = " " + q + " " + sep_word + " " + a + " ";
  const std::vector<std::string_view> cps = SplitCodePoints(joined);
  for (int n : config.ngram_sizes) {
    const size_t len = static_cast<size_t>(n);
    if (cps.size() < len) continue;
    const std::string prefix = "c" + std::to_string(n) + ":";
    for (size_t i = 0; i + len <= cps.size(); ++i) {
      std::string key = prefix;
      bool informative = false;
      for (size_t k = 0; k < len; ++k) {
        const std::string_view cp = cps[i + k];
        informative |= cp != " " && cp != sep_word;
        key.append(cp);
      }
      // Grams made only of padding and the separator are shared by every
      // pair and carry no signal.
      if (informative) keys.push_back(std::move(key));
    }
  }
  return keys;
}

HashedFeatures HashPairFeatures(std::string_view question,
                                std::string_view answer,
                                const EmbedderConfig& config) {
  HashedFeatures features;
  features.empty_answer = answer.empty();
  if (features.empty_answer) return features;

  const uint64_t mask = config.hash_dim - 1;
  std::vector<std::pair<uint32_t, double>> entries;
  for (const std::string& key : PairFeatureKeys(question, answer, config)) {
    const uint64_t h = HashKey(key, config.hash_seed);
    const double sign = (Mix64(h ^ 0x5bd1e9955bd1e995ULL) >> 63) ? -1.0 : 1.0;
    entries.emplace_back(static_cast<uint32_t>(h & mask), sign);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [index, value] : entries) {
    if (!features.index.empty() && features.index.back() == index) {
      features.value.back() += value;
    } else {
      features.index.push_back(index);
      features.value.push_back(value);
    }
  }
  // Drop entries cancelled by sign collisions.
  size_t kept = 0;
  for (size_t k = 0; k < features.index.size(); ++k) {
    if (features.value[k] != 0.0) {
      features.index[kept] = features.index[k];
      features.value[kept] = features.value[k];
      ++kept;
    }
  }
  features.index.resize(kept);
  features.value.resize(kept);

  const double norm = Norm(features.value);
  if (norm > 0.0) {
    for (double& v : features.value) v /= norm;
  }
  return features;
}

PairVector ProjectFeatures(const HashedFeatures& features,
                           const ProjectionHead* head,
                           const EmbedderConfig& config) {
  const size_t d = config.projection_dim;
  if (features.empty_answer || features.index.empty()) return UnitBasis(d);

  PairVector out;
  if (head != nullptr) {
    RequireHeadMatches(*head, config);
    ProjectInto(features, *head, out.values);
  } else {
    out.values.assign(d, 0.0);
    for (size_t k = 0; k < features.index.size(); ++k) {
      out.values[features.index[k] % d] += features.value[k];
    }
  }
  const double norm = Norm(out.values);
  if (norm == 0.0 || !std::isfinite(norm)) return UnitBasis(d);
  for (double& v : out.values) v /= norm;
  return out;
}

PairVector EmbedPair(std::string_view question, std::string_view answer,
                     const EmbedderConfig& config, const ProjectionHead* head) {
  if (config.kind == EmbedderKind::kRemote) {
    config.Validate();
    std::vector<PairVector> out = EmbedBatchRemote(
        {{std::string(question), std::string(answer)}}, *config.remote,
        config.projection_dim);
    return std::move(out.front());
  }
  return ProjectFeatures(HashPairFeatures(question, answer, config), head, config);
}

double Cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(u.size()) +
                    " and " + std::to_string(v.size()));
  }
  const double denom = Norm(u) * Norm(v);
  if (denom == 0.0) return 0.0;
  return std::clamp(Dot(u, v) / denom, -1.0, 1.0);
}

double Cosine(const PairVector& u, const PairVector& v) {
  return Cosine(u.values, v.values);
}

double Similarity(const GradingRecord& record, const EmbedderConfig& config,
                  const ProjectionHead* head) {
  if (config.kind == EmbedderKind::kRemote) {
    return Similarities({record}, config, head).front();
  }
  return Cosine(EmbedPair(record.question, record.correct_answer, config, head),
                EmbedPair(record.question, record.given_answer, config, head));
}

std::vector<double> Similarities(const std::vector<GradingRecord>& records,
                                 const EmbedderConfig& config,
                                 const ProjectionHead* head) {
  std::vector<double> scores(records.size());
  if (config.kind == EmbedderKind::kRemote) {
    config.Validate();
    std::vector<QuestionAnswer> pairs;
    pairs.reserve(records.size() * 2);
    for (const GradingRecord& r : records) {
      pairs.emplace_back(r.question, r.correct_answer);
      pairs.emplace_back(r.question, r.given_answer);
    }
    const std::vector<PairVector> vectors =
        EmbedBatchRemote(pairs, *config.remote, config.projection_dim);
    for (size_t i = 0; i < records.size(); ++i) {
      scores[i] = Cosine(vectors[2 * i], vectors[2 * i + 1]);
    }
    return scores;
  }
  for (size_t i = 0; i < records.size(); ++i) {
    scores[i] = Similarity(records[i], config, head);
  }
  return scores;
}

double PairLoss(double cos_value, int label, double margin) {
  if (label > 0) return 1.0 - cos_value;
  return std::max(0.0, cos_value - margin);
}

std::vector<TrainingPair> MakeTrainingPairs(
    const std::vector<GradingRecord>& records, const EmbedderConfig& config) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(records.size());
  for (const GradingRecord& r : records) {
    pairs.push_back({HashPairFeatures(r.question, r.correct_answer, config),
                     HashPairFeatures(r.question, r.given_answer, config),
                     r.grade == Grade::kCorrect ? 1 : -1});
  }
  return pairs;
}

double ProjectionObjective(const ProjectionHead& head,
                           const std::vector<TrainingPair>& pairs,
                           double margin) {
  if (pairs.empty()) return 0.0;
  double loss = 0.0;
  for (const TrainingPair& pair : pairs) {
    const Forward c = RunForward(pair.reference, head);
    const Forward g = RunForward(pair.given, head);
    loss += PairLoss(PairCos(c, g), pair.label, margin);
  }
  return loss / static_cast<double>(pairs.size());
}

std::pair<double, HeadGradient> ProjectionObjectiveGradient(
    const ProjectionHead& head, const std::vector<TrainingPair>& pairs,
    double margin) {
  HeadGradient gradient;
  if (pairs.empty()) return {0.0, gradient};
  const size_t d = head.projection_dim();
  std::vector<double> dense(head.hash_dim() * d, 0.0);
  std::vector<uint8_t> touched(head.hash_dim(), 0);
  std::vector<size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), size_t{0});
  const double scale = 1.0 / static_cast<double>(pairs.size());
  const double loss = BatchGradient(head, pairs, all, margin, scale, dense,
                                    touched, gradient.rows);
  std::sort(gradient.rows.begin(), gradient.rows.end());
  gradient.values.reserve(gradient.rows.size() * d);
  for (uint32_t r : gradient.rows) {
    const double* g = dense.data() + static_cast<size_t>(r) * d;
    gradient.values.insert(gradient.values.end(), g, g + d);
  }
  return {loss * scale, gradient};
}

ProjectionHead TrainProjection(const Corpus& corpus,
                               const EmbedderConfig& embed_config,
                               const TrainConfig& train_config) {
  embed_config.Validate();
  train_config.Validate();
  if (embed_config.kind != EmbedderKind::kHashedNGram) {
    throw Error(ErrorCode::kInvalidArgument,
                "only the hashed n-gram embedder has a local projection head");
  }
  if (corpus.records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot train on an empty corpus");
  }

  const std::vector<TrainingPair> pairs =
      MakeTrainingPairs(corpus.records, embed_config);
  const double margin = train_config.margin;
  ProjectionHead head =
      ProjectionHead::Fold(embed_config.hash_dim, embed_config.projection_dim);
  head.loss_history.push_back(ProjectionObjective(head, pairs, margin));

  const size_t d = head.projection_dim();
  std::vector<double> dense(head.hash_dim() * d, 0.0);
  std::vector<uint8_t> touched(head.hash_dim(), 0);
  std::vector<uint32_t> touched_rows;
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(train_config.seed);

  for (size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    rng.Shuffle(order);
    for (size_t start = 0; start < order.size(); start += train_config.batch_size) {
      const size_t end = std::min(order.size(), start + train_config.batch_size);
      const std::vector<size_t> batch(order.begin() + start, order.begin() + end);
      const double scale = 1.0 / static_cast<double>(batch.size());
      BatchGradient(head, pairs, batch, margin, scale, dense, touched,
                    touched_rows);
      for (uint32_t r : touched_rows) {
        double* w = head.row(r);
        double* g = dense.data() + static_cast<size_t>(r) * d;
        for (size_t j = 0; j < d; ++j) {
          w[j] -= train_config.learning_rate * g[j];
          g[j] = 0.0;
        }
        touched[r] = 0;
      }
      touched_rows.clear();
    }
    const double loss = ProjectionObjective(head, pairs, margin);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergence,
                  "training diverged in epoch " + std::to_string(epoch));
    }
    head.loss_history.push_back(loss);
    head.epochs = epoch;
  }
  return head;
}

}  // namespace shortgrade
