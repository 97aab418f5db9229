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

#ifndef SHORTGRADE_SERVICE_H_
#define SHORTGRADE_SERVICE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shortgrade/embedding.h"
#include "shortgrade/error.h"
#include "shortgrade/grader.h"
#include "shortgrade/serialization.h"

namespace shortgrade {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string data_dir = "shortgrade-data";
  EmbedderConfig embedder;
  // Optional trained projection head for scoring raw records.
  std::string head_path;
  // Bearer token required on every endpoint except /healthz; empty disables
  // authentication.
  std::string token;
  AccuracyConstraints default_constraints;
  double default_m = 0.0;
  // Snapshot a session after this many events; 0 disables snapshots.
  size_t snapshot_every = 16;

  // Reads a JSON config file:
  //   {"listen": "host:port", "data_dir": ..., "embedder": {...}, "head": ...,
  //    "token": ..., "token_env": "VAR", "default_constraints": {...},
  //    "default_m": ..., "snapshot_every": n}
  static ServiceConfig FromJson(const Json& j);
  static ServiceConfig FromFile(const std::string& path);
  // SHORTGRADE_LISTEN, SHORTGRADE_DATA_DIR and SHORTGRADE_TOKEN override the
  // file.
  void ApplyEnvironment();
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

enum class EventKind {
  kCreated,
  kAutoGraded,
  kManualGrade,
  kSpotCheckPlanned,
  kValidated,
  kRejected
};

std::string_view EventKindName(EventKind kind);
std::optional<EventKind> ParseEventKind(std::string_view text);

struct SessionEvent {
  uint64_t sequence_number = 0;
  std::string timestamp;
  EventKind kind = EventKind::kCreated;
  Json payload;
};

Json ToJson(const SessionEvent& event);
SessionEvent EventFromJson(const Json& j);

// Applies one event to `session`; the Created event replaces it. Live
// requests and log replay go through this same function.
void ApplyEvent(GradingSession& session, const SessionEvent& event);

// Folds a whole event sequence into a session.
GradingSession ReplayEvents(const std::vector<SessionEvent>& events);

// Reads data_dir/sessions/<id>/events.jsonl. A torn final line (no trailing
// newline and unparsable) is ignored.
std::vector<SessionEvent> ReadEventLog(const std::string& path);

// Durable grading service. Sessions persist as append-only event logs and
// are replayed on construction. Handle() is transport independent and
// thread safe; Serve() exposes it over HTTP.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // `headers` keys are lower case.
  HttpResponse Handle(const std::string& method, const std::string& path,
                      const std::string& body,
                      const std::map<std::string, std::string>& headers = {});

  // Export document of GET /sessions/{id}.
  Json ExportSession(const std::string& session_id);

  // Binds and blocks until Stop(). Returns false if binding failed.
  bool Serve();
  // Binds now and returns the port; ServeBound() then blocks.
  int Bind();
  bool ServeBound();
  void Stop();

  const ServiceConfig& config() const { return config_; }

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
  ServiceConfig config_;
};

// HTTP status for an error code.
int HttpStatusFor(ErrorCode code);

}  // namespace shortgrade

#endif  // SHORTGRADE_SERVICE_H_
