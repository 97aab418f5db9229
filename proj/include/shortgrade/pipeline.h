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

// Pipelines shared by the command line and the HTTP service, so both give
// the same bytes for the same input.

#ifndef SHORTGRADE_PIPELINE_H_
#define SHORTGRADE_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shortgrade/calibration.h"
#include "shortgrade/embedding.h"
#include "shortgrade/serialization.h"
#include "shortgrade/validation.h"

namespace shortgrade {

struct CalibrationRequest {
  ScoredDataset data;
  // Dataset for the validation reference; `data` when absent.
  std::optional<ScoredDataset> reference_data;
  AccuracyConstraints constraints;
  // Bootstrap exam sizes; empty means 5% of the reference dataset.
  std::vector<size_t> exam_sizes;
  size_t bootstrap_trials = 200;
  size_t curve_points = 21;
  uint64_t seed = 42;
};

// Request body of POST /calibrations:
//   {"records": [...], "constraints": {...}, "reference_records": [...],
//    "exam_sizes": [...], "bootstrap_trials": n, "curve_points": n, "seed": n}
// Records without "s" are scored with `embedder` and `head`.
CalibrationRequest CalibrationRequestFromJson(const Json& body,
                                              const EmbedderConfig& embedder,
                                              const ProjectionHead* head);

// Thresholds, coverage, metrics at T*, both accuracy curves and the
// reference profile. "id" is a hash of everything else.
Json CalibrationDocument(const CalibrationRequest& request);

struct StoredCalibration {
  std::string id;
  Thresholds thresholds;
  AccuracyConstraints constraints;
  ReferenceProfile reference;
};

StoredCalibration StoredCalibrationFromJson(const Json& document);

}  // namespace shortgrade

#endif  // SHORTGRADE_PIPELINE_H_
