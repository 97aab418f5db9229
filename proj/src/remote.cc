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

#include "shortgrade/remote.h"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "shortgrade/error.h"

namespace shortgrade {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // prefix + "/embed"
};

Endpoint ParseEndpoint(const std::string& url) {
  const size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "remote URL lacks a scheme: " + url);
  }
  const size_t slash = url.find('/', scheme + 3);
  Endpoint endpoint;
  endpoint.base = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  endpoint.path = prefix + "/embed";
  return endpoint;
}

std::vector<PairVector> PostChunk(httplib::Client& client, const Endpoint& endpoint,
                                  const std::vector<QuestionAnswer>& pairs,
                                  size_t begin, size_t end, size_t expected_dim) {
  nlohmann::json body;
  body["pairs"] = nlohmann::json::array();
  for (size_t i = begin; i < end; ++i) {
    body["pairs"].push_back({pairs[i].first, pairs[i].second});
  }
  httplib::Result result =
      client.Post(endpoint.path, body.dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::kTransport,
                "embedding backend " + endpoint.base + endpoint.path +
                    " unreachable: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::kTransport,
                "embedding backend returned HTTP " +
                    std::to_string(result->status) + ": " +
                    result->body.substr(0, 256));
  }

  const nlohmann::json response =
      nlohmann::json::parse(result->body, nullptr, /*allow_exceptions=*/false);
  if (response.is_discarded() || !response.is_object() ||
      !response.contains("vectors") || !response["vectors"].is_array() ||
      !response.contains("dim") || !response["dim"].is_number_integer()) {
    throw Error(ErrorCode::kMalformedResponse,
                "embedding response must be {\"dim\": int, \"vectors\": [...]}");
  }
  const auto& vectors = response["vectors"];
  if (vectors.size() != end - begin) {
    throw Error(ErrorCode::kMalformedResponse,
                "embedding backend returned " + std::to_string(vectors.size()) +
                    " vectors for " + std::to_string(end - begin) + " pairs");
  }
  const int64_t dim = response["dim"].get<int64_t>();
  if (dim < 0 || static_cast<size_t>(dim) != expected_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding backend dim " + std::to_string(dim) +
                    " != configured " + std::to_string(expected_dim));
  }

  std::vector<PairVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (!v.is_array()) {
      throw Error(ErrorCode::kMalformedResponse, "vector entry is not an array");
    }
    if (v.size() != expected_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector of length " + std::to_string(v.size()) +
                      " != configured " + std::to_string(expected_dim));
    }
    PairVector pv;
    pv.values.reserve(expected_dim);
    double sq = 0.0;
    for (const auto& x : v) {
      if (!x.is_number()) {
        throw Error(ErrorCode::kMalformedResponse, "vector entry is not numeric");
      }
      const double value = x.get<double>();
      pv.values.push_back(value);
      sq += value * value;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kMalformedResponse,
                  "embedding backend returned a zero or non-finite vector");
    }
    for (double& value : pv.values) value /= norm;
    out.push_back(std::move(pv));
  }
  return out;
}

}  // namespace

std::vector<PairVector> EmbedBatchRemote(const std::vector<QuestionAnswer>& pairs,
                                         const RemoteBackendConfig& remote,
                                         size_t expected_dim) {
  if (pairs.empty()) return {};
  if (remote.batch_cap == 0) {
    throw Error(ErrorCode::kInvalidArgument, "remote batch_cap must be >= 1");
  }
  const Endpoint endpoint = ParseEndpoint(remote.url);
  httplib::Client client(endpoint.base);
  const auto timeout = std::chrono::milliseconds(remote.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!remote.token_env.empty()) {
    if (const char* token = std::getenv(remote.token_env.c_str())) {
      client.set_bearer_token_auth(token);
    }
  }

  std::vector<PairVector> out;
  out.reserve(pairs.size());
  for (size_t begin = 0; begin < pairs.size(); begin += remote.batch_cap) {
    const size_t end = std::min(pairs.size(), begin + remote.batch_cap);
    std::vector<PairVector> chunk =
        PostChunk(client, endpoint, pairs, begin, end, expected_dim);
    for (PairVector& v : chunk) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace shortgrade
