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

#include "shortgrade/pipeline.h"

#include <cmath>

#include "shortgrade/error.h"

namespace shortgrade {

namespace {

ScoredDataset RecordsFromBody(const Json& array, const EmbedderConfig& embedder,
                              const ProjectionHead* head) {
  bool missing = false;
  ScoredDataset data = ScoredFromJsonArray(array, FieldLimits{}, &missing);
  if (missing) {
    std::vector<GradingRecord> records;
    records.reserve(data.items.size());
    for (const ScoredRecord& item : data.items) records.push_back(item.record);
    const std::vector<double> scores = Similarities(records, embedder, head);
    for (size_t i = 0; i < data.items.size(); ++i) data.items[i].s = scores[i];
  }
  return data;
}

size_t SizeField(const Json& body, const char* key, size_t fallback) {
  auto it = body.find(key);
  if (it == body.end()) return fallback;
  if (!it->is_number_unsigned()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("field ") + key + " must be a non-negative integer");
  }
  return it->get<size_t>();
}

}  // namespace

CalibrationRequest CalibrationRequestFromJson(const Json& body,
                                              const EmbedderConfig& embedder,
                                              const ProjectionHead* head) {
  if (!body.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "request body must be an object");
  }
  auto records = body.find("records");
  if (records == body.end()) {
    throw Error(ErrorCode::kInvalidArgument, "missing field: records");
  }
  CalibrationRequest request;
  request.data = RecordsFromBody(*records, embedder, head);
  auto reference = body.find("reference_records");
  if (reference != body.end() && !reference->is_null()) {
    request.reference_data = RecordsFromBody(*reference, embedder, head);
  }
  auto constraints = body.find("constraints");
  if (constraints != body.end()) request.constraints = ConstraintsFromJson(*constraints);
  auto sizes = body.find("exam_sizes");
  if (sizes != body.end()) {
    if (!sizes->is_array()) {
      throw Error(ErrorCode::kInvalidArgument, "exam_sizes must be an array");
    }
    for (const Json& n : *sizes) {
      if (!n.is_number_unsigned()) {
        throw Error(ErrorCode::kInvalidArgument, "exam_sizes must hold counts");
      }
      request.exam_sizes.push_back(n.get<size_t>());
    }
  }
  request.bootstrap_trials = SizeField(body, "bootstrap_trials", request.bootstrap_trials);
  request.curve_points = SizeField(body, "curve_points", request.curve_points);
  request.seed = SizeField(body, "seed", request.seed);
  return request;
}

Json CalibrationDocument(const CalibrationRequest& request) {
  if (request.data.items.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "calibration dataset is empty");
  }
  const Calibration calibration = Calibrate(request.data, request.constraints);
  const ScoredDataset& reference_data =
      request.reference_data ? *request.reference_data : request.data;
  std::vector<size_t> sizes = request.exam_sizes;
  if (sizes.empty()) {
    sizes.push_back(static_cast<size_t>(
        std::ceil(0.05 * static_cast<double>(reference_data.items.size()) - 1e-9)));
    if (sizes.back() == 0) sizes.back() = 1;
  }
  const ReferenceProfile reference =
      BuildReference(reference_data, calibration.thresholds, sizes,
                     request.bootstrap_trials, request.seed);

  Json document = ToJson(calibration);
  document["metrics_at_t_star"] =
      ToJson(MetricsAt(request.data, calibration.thresholds.t_star));
  document["curves"] = {
      {"incorrect",
       ToJson(AccuracyCurve(request.data, Side::kIncorrect, request.curve_points))},
      {"correct",
       ToJson(AccuracyCurve(request.data, Side::kCorrect, request.curve_points))}};
  document["reference"] = ToJson(reference);
  document["n"] = request.data.items.size();
  document["seed"] = request.seed;
  document["bootstrap_trials"] = request.bootstrap_trials;
  document["id"] = ContentHash(document.dump());
  return document;
}

StoredCalibration StoredCalibrationFromJson(const Json& document) {
  StoredCalibration stored;
  if (!document.is_object() || !document.contains("id") ||
      !document.at("id").is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "calibration document lacks an id");
  }
  stored.id = document.at("id").get<std::string>();
  stored.thresholds = ThresholdsFromJson(document.at("thresholds"));
  stored.constraints = ConstraintsFromJson(document.at("constraints"));
  stored.reference = ReferenceFromJson(document.at("reference"));
  return stored;
}

}  // namespace shortgrade
