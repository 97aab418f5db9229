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

#include "shortgrade/service.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "httplib.h"
#include "shortgrade/pipeline.h"
#include "shortgrade/validation.h"

namespace shortgrade {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

std::string NowTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch())
                          .count() %
                      1000;
  std::tm tm{};
  gmtime_r(&seconds, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

bool ValidId(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

void SyncPath(const fs::path& path, int flags) {
  const int fd = ::open(path.c_str(), flags);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

void AppendDurably(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw Error(ErrorCode::kIo, "cannot append to " + path.string());
    }
    written += static_cast<size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kIo, "cannot sync " + path.string());
}

void WriteAtomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  WriteTextFile(tmp.string(), text);
  SyncPath(tmp, O_RDONLY);
  fs::rename(tmp, path);
  SyncPath(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

Json ParseBody(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  Json j = Json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Invalid("request body is not valid JSON");
  if (!j.is_object()) Invalid("request body must be a JSON object");
  return j;
}

std::string StringField(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    Invalid(std::string("missing field: ") + key);
  }
  return it->get<std::string>();
}

HttpResponse JsonResponse(int status, const Json& body) {
  return {status, body.dump() + "\n"};
}

HttpResponse ErrorResponse(int status, std::string_view code,
                           const std::string& message) {
  return JsonResponse(status, {{"error", {{"code", code}, {"message", message}}}});
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

bool SpotCheckIncludes(const GradingSession& session, const std::string& id) {
  for (const auto& [side, plan] : session.spot_checks) {
    for (const std::string& planned : plan.record_ids) {
      if (planned == id) return true;
    }
  }
  return false;
}

}  // namespace

std::string_view EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kCreated:
      return "Created";
    case EventKind::kAutoGraded:
      return "AutoGraded";
    case EventKind::kManualGrade:
      return "ManualGrade";
    case EventKind::kSpotCheckPlanned:
      return "SpotCheckPlanned";
    case EventKind::kValidated:
      return "Validated";
    case EventKind::kRejected:
      return "Rejected";
  }
  return "Created";
}

std::optional<EventKind> ParseEventKind(std::string_view text) {
  for (EventKind k : {EventKind::kCreated, EventKind::kAutoGraded,
                      EventKind::kManualGrade, EventKind::kSpotCheckPlanned,
                      EventKind::kValidated, EventKind::kRejected}) {
    if (EventKindName(k) == text) return k;
  }
  return std::nullopt;
}

Json ToJson(const SessionEvent& event) {
  return {{"sequence_number", event.sequence_number},
          {"timestamp", event.timestamp},
          {"kind", EventKindName(event.kind)},
          {"payload", event.payload}};
}

SessionEvent EventFromJson(const Json& j) {
  SessionEvent event;
  if (!j.is_object()) Invalid("event must be an object");
  event.sequence_number = j.at("sequence_number").get<uint64_t>();
  event.timestamp = j.at("timestamp").get<std::string>();
  const std::optional<EventKind> kind = ParseEventKind(j.at("kind").get<std::string>());
  if (!kind) Invalid("unknown event kind");
  event.kind = *kind;
  event.payload = j.at("payload");
  return event;
}

void ApplyEvent(GradingSession& session, const SessionEvent& event) {
  const Json& p = event.payload;
  switch (event.kind) {
    case EventKind::kCreated: {
      ScoredDataset items = ScoredFromJsonArray(p.at("items"), FieldLimits{});
      session = OpenSession(p.at("session_id").get<std::string>(), std::move(items),
                            ThresholdsFromJson(p.at("thresholds")),
                            ConstraintsFromJson(p.at("constraints")),
                            ReferenceFromJson(p.at("reference")));
      return;
    }
    case EventKind::kAutoGraded:
      // Auto decisions are part of Created; nothing to apply.
      return;
    case EventKind::kManualGrade: {
      const std::string id = p.at("record_id").get<std::string>();
      const bool spot_check = p.value("spot_check", false);
      if (session.decisions.count(id) == 0) {
        throw Error(ErrorCode::kNotFound, "unknown record " + id);
      }
      if (spot_check && !SpotCheckIncludes(session, id)) {
        throw Error(ErrorCode::kConflict, "record " + id + " is not in a spot check");
      }
      if (!spot_check && session.decisions.at(id).kind != DecisionKind::kDeferred) {
        throw Error(ErrorCode::kConflict,
                    "record " + id + " was auto-graded and cannot be graded here");
      }
      const std::optional<Grade> grade = ParseGrade(p.at("grade").get<std::string>());
      if (!grade) Invalid("grade must be \"correct\" or \"incorrect\"");
      SubmitManualGrade(session, id, *grade, p.at("grader_id").get<std::string>(),
                        event.timestamp);
      if (spot_check) {
        for (Side side : {Side::kIncorrect, Side::kCorrect}) {
          auto plan = session.spot_checks.find(side);
          if (plan == session.spot_checks.end()) continue;
          bool complete = true;
          bool contains = false;
          for (const std::string& planned : plan->second.record_ids) {
            contains = contains || planned == id;
            complete = complete && session.manual_grades.count(planned) > 0;
          }
          if (contains && complete) EvaluateSpotCheck(session, side);
        }
      }
      return;
    }
    case EventKind::kSpotCheckPlanned: {
      const std::optional<Side> side = ParseSide(p.at("side").get<std::string>());
      if (!side) Invalid("side must be \"correct\" or \"incorrect\"");
      PlanSpotCheck(session, *side, p.at("target_confidence").get<double>(),
                    p.at("seed").get<uint64_t>());
      return;
    }
    case EventKind::kValidated:
    case EventKind::kRejected: {
      ValidateOptions options;
      options.m = p.at("m").get<double>();
      options.n_min = p.at("n_min").get<size_t>();
      const std::optional<RiskMethod> method =
          ParseRiskMethod(p.at("risk_method").get<std::string>());
      if (!method) Invalid("unknown risk_method");
      options.risk_method = *method;
      Validate(session, options);
      return;
    }
  }
}

GradingSession ReplayEvents(const std::vector<SessionEvent>& events) {
  GradingSession session;
  for (const SessionEvent& event : events) ApplyEvent(session, event);
  return session;
}

std::vector<SessionEvent> ReadEventLog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<SessionEvent> events;
  size_t start = 0;
  while (start < text.size()) {
    const size_t end = text.find('\n', start);
    const bool terminated = end != std::string::npos;
    const std::string line =
        text.substr(start, terminated ? end - start : std::string::npos);
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      if (!terminated) break;  // torn tail of an interrupted append
      throw Error(ErrorCode::kIo, "corrupt event in " + path);
    }
    SessionEvent event = EventFromJson(j);
    if (!events.empty() && event.sequence_number <= events.back().sequence_number) {
      throw Error(ErrorCode::kIo, "non-increasing sequence number in " + path);
    }
    events.push_back(std::move(event));
    if (!terminated) break;
    start = end + 1;
  }
  return events;
}

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDimensionMismatch:
      return 400;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kInsufficientData:
      return 422;
    case ErrorCode::kTransport:
    case ErrorCode::kMalformedResponse:
      return 502;
    case ErrorCode::kIo:
    case ErrorCode::kDivergence:
      return 500;
  }
  return 500;
}

ServiceConfig ServiceConfig::FromJson(const Json& j) {
  ServiceConfig config;
  if (!j.is_object()) Invalid("service config must be an object");
  auto has = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
  if (has("listen")) {
    const std::string listen = j.at("listen").get<std::string>();
    const size_t colon = listen.rfind(':');
    if (colon == std::string::npos) Invalid("listen must be host:port");
    config.host = listen.substr(0, colon);
    config.port = std::stoi(listen.substr(colon + 1));
  }
  if (has("data_dir")) config.data_dir = j.at("data_dir").get<std::string>();
  if (has("embedder")) config.embedder = EmbedderConfigFromJson(j.at("embedder"));
  if (has("head")) config.head_path = j.at("head").get<std::string>();
  if (has("token")) config.token = j.at("token").get<std::string>();
  if (has("token_env")) {
    const char* value = std::getenv(j.at("token_env").get<std::string>().c_str());
    if (value != nullptr) config.token = value;
  }
  if (has("default_constraints")) {
    config.default_constraints = ConstraintsFromJson(j.at("default_constraints"));
  }
  if (has("default_m")) config.default_m = j.at("default_m").get<double>();
  if (has("snapshot_every")) config.snapshot_every = j.at("snapshot_every").get<size_t>();
  return config;
}

ServiceConfig ServiceConfig::FromFile(const std::string& path) {
  return FromJson(ReadJsonFile(path));
}

void ServiceConfig::ApplyEnvironment() {
  if (const char* listen = std::getenv("SHORTGRADE_LISTEN")) {
    const std::string value = listen;
    const size_t colon = value.rfind(':');
    try {
      if (colon == std::string::npos) {
        port = std::stoi(value);
      } else {
        host = value.substr(0, colon);
        port = std::stoi(value.substr(colon + 1));
      }
    } catch (const std::exception&) {
      Invalid("SHORTGRADE_LISTEN must be host:port or port");
    }
  }
  if (const char* dir = std::getenv("SHORTGRADE_DATA_DIR")) data_dir = dir;
  if (const char* token_value = std::getenv("SHORTGRADE_TOKEN")) token = token_value;
}

struct SessionSlot {
  std::mutex mutex;
  GradingSession session;
  uint64_t sequence_number = 0;
  uint64_t snapshot_sequence = 0;
  fs::path dir;
};

class Service::Impl {
 public:
  explicit Impl(const ServiceConfig& config) : config_(config) {
    root_ = config_.data_dir;
    fs::create_directories(root_ / "sessions");
    fs::create_directories(root_ / "calibrations");
    // Fail fast when the directory is not writable.
    const fs::path probe = root_ / ".write-probe";
    WriteTextFile(probe.string(), "ok\n");
    fs::remove(probe);
    embedder_ = config_.embedder;
    if (!config_.head_path.empty()) {
      head_ = ProjectionHead::Load(config_.head_path, &embedder_);
    }
    LoadSessions();
  }

  HttpResponse Handle(const std::string& method, const std::string& path,
                      const std::string& body,
                      const std::map<std::string, std::string>& headers) {
    try {
      const std::vector<std::string> parts = SplitPath(path);
      if (parts.size() == 1 && parts[0] == "healthz") {
        return JsonResponse(200, {{"status", "ok"}});
      }
      Authorize(headers);
      return Route(method, parts, body);
    } catch (const Error& e) {
      return ErrorResponse(HttpStatusFor(e.code()), ErrorCodeName(e.code()), e.what());
    } catch (const Json::exception& e) {
      return ErrorResponse(400, "invalid_argument", e.what());
    } catch (const std::exception& e) {
      return ErrorResponse(500, "internal", e.what());
    }
  }

  Json Export(const std::string& id) {
    SessionSlot& slot = Slot(id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    return ExportLocked(slot);
  }

 private:
  void Authorize(const std::map<std::string, std::string>& headers) {
    if (config_.token.empty()) return;
    auto it = headers.find("authorization");
    if (it == headers.end() || it->second != "Bearer " + config_.token) {
      throw Error(ErrorCode::kUnauthorized, "missing or invalid bearer token");
    }
  }

  HttpResponse Route(const std::string& method, const std::vector<std::string>& parts,
                     const std::string& body) {
    auto expect = [&](const char* wanted) {
      if (method != wanted) {
        throw MethodNotAllowed{};
      }
    };
    try {
      if (parts.empty()) throw NotRouted{};
      if (parts[0] == "calibrations") {
        if (parts.size() == 1) {
          expect("POST");
          return CreateCalibration(ParseBody(body));
        }
        if (parts.size() == 2) {
          expect("GET");
          return {200, CalibrationText(parts[1])};
        }
        throw NotRouted{};
      }
      if (parts[0] != "sessions") throw NotRouted{};
      if (parts.size() == 1) {
        if (method == "GET") return ListSessions();
        expect("POST");
        return CreateSession(ParseBody(body));
      }
      const std::string& id = parts[1];
      if (parts.size() == 2) {
        expect("GET");
        return JsonResponse(200, Export(id));
      }
      const std::string& action = parts[2];
      if (parts.size() == 3 && action == "queue") {
        expect("GET");
        return Queue(id);
      }
      if (parts.size() == 3 && action == "events") {
        expect("GET");
        return Events(id);
      }
      if (parts.size() == 3 && action == "grades") {
        expect("POST");
        return Grade(id, ParseBody(body), false);
      }
      if (parts.size() == 3 && action == "validate") {
        expect("POST");
        return ValidateSession(id, ParseBody(body));
      }
      if (parts.size() == 3 && action == "spot-check") {
        expect("POST");
        return PlanSpot(id, ParseBody(body));
      }
      if (parts.size() == 4 && action == "spot-check" && parts[3] == "grades") {
        expect("POST");
        return Grade(id, ParseBody(body), true);
      }
      throw NotRouted{};
    } catch (const MethodNotAllowed&) {
      return ErrorResponse(405, "method_not_allowed", method + " not allowed here");
    } catch (const NotRouted&) {
      return ErrorResponse(404, "not_found", "no such endpoint");
    }
  }

  struct MethodNotAllowed {};
  struct NotRouted {};

  // Calibrations.

  HttpResponse CreateCalibration(const Json& body) {
    const CalibrationRequest request =
        CalibrationRequestFromJson(body, embedder_, head_ ? &*head_ : nullptr);
    const Json document = CalibrationDocument(request);
    const std::string id = document.at("id").get<std::string>();
    const std::string text = document.dump() + "\n";
    {
      std::lock_guard<std::mutex> lock(calibrations_mutex_);
      const fs::path path = root_ / "calibrations" / (id + ".json");
      if (!fs::exists(path)) WriteAtomically(path, text);
      calibrations_[id] = StoredCalibrationFromJson(document);
    }
    return {201, text};
  }

  std::string CalibrationText(const std::string& id) {
    if (!ValidId(id)) throw Error(ErrorCode::kNotFound, "unknown calibration " + id);
    const fs::path path = root_ / "calibrations" / (id + ".json");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kNotFound, "unknown calibration " + id);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  StoredCalibration Calibration(const std::string& id) {
    {
      std::lock_guard<std::mutex> lock(calibrations_mutex_);
      auto it = calibrations_.find(id);
      if (it != calibrations_.end()) return it->second;
    }
    const Json document = Json::parse(CalibrationText(id));
    StoredCalibration stored = StoredCalibrationFromJson(document);
    std::lock_guard<std::mutex> lock(calibrations_mutex_);
    calibrations_[id] = stored;
    return stored;
  }

  // Sessions.

  HttpResponse ListSessions() {
    Json list = Json::array();
    std::vector<std::pair<std::string, std::shared_ptr<SessionSlot>>> slots;
    {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      slots.assign(sessions_.begin(), sessions_.end());
    }
    for (auto& [id, slot] : slots) {
      std::lock_guard<std::mutex> lock(slot->mutex);
      list.push_back({{"session_id", id},
                      {"status", SessionStatusName(slot->session.status)},
                      {"sequence_number", slot->sequence_number}});
    }
    return JsonResponse(200, {{"sessions", list}});
  }

  HttpResponse CreateSession(const Json& body) {
    const StoredCalibration calibration =
        Calibration(StringField(body, "calibration_id"));
    auto records = body.find("records");
    if (records == body.end()) Invalid("missing field: records");
    bool missing = false;
    ScoredDataset items = ScoredFromJsonArray(*records, FieldLimits{}, &missing);
    if (items.items.empty()) {
      throw Error(ErrorCode::kEmptyDataset, "exam has no records");
    }
    if (missing) {
      std::vector<GradingRecord> raw;
      for (const ScoredRecord& item : items.items) raw.push_back(item.record);
      const std::vector<double> scores =
          Similarities(raw, embedder_, head_ ? &*head_ : nullptr);
      for (size_t i = 0; i < items.items.size(); ++i) items.items[i].s = scores[i];
    }
    const AccuracyConstraints constraints =
        body.contains("constraints") ? ConstraintsFromJson(body.at("constraints"))
                                     : calibration.constraints;

    Json item_array = Json::array();
    for (const ScoredRecord& item : items.items) item_array.push_back(ScoredToJson(item));

    std::lock_guard<std::mutex> lock(sessions_mutex_);
    std::string id;
    if (body.contains("session_id")) {
      id = StringField(body, "session_id");
      if (!ValidId(id)) Invalid("session_id must match [A-Za-z0-9_-]{1,64}");
      if (sessions_.count(id) > 0 || fs::exists(root_ / "sessions" / id)) {
        throw Error(ErrorCode::kConflict, "session " + id + " already exists");
      }
    } else {
      const std::string basis = calibration.id + item_array.dump();
      for (size_t k = sessions_.size();; ++k) {
        id = "s" + ContentHash(basis + "#" + std::to_string(k));
        if (sessions_.count(id) == 0 && !fs::exists(root_ / "sessions" / id)) break;
      }
    }

    SessionEvent event;
    event.sequence_number = 1;
    event.timestamp = NowTimestamp();
    event.kind = EventKind::kCreated;
    event.payload = {{"session_id", id},
                     {"calibration_id", calibration.id},
                     {"items", item_array},
                     {"thresholds", ToJson(calibration.thresholds)},
                     {"constraints", ToJson(constraints)},
                     {"reference", ToJson(calibration.reference)}};
    auto slot = std::make_shared<SessionSlot>();
    ApplyEvent(slot->session, event);
    slot->dir = root_ / "sessions" / id;
    fs::create_directories(slot->dir);
    SyncPath(slot->dir.parent_path(), O_RDONLY | O_DIRECTORY);
    AppendDurably(slot->dir / "events.jsonl", ToJson(event).dump() + "\n");
    slot->sequence_number = 1;
    sessions_[id] = slot;
    return JsonResponse(201, Envelope(*slot));
  }

  Json Envelope(const SessionSlot& slot) {
    return {{"session_id", slot.session.session_id},
            {"sequence_number", slot.sequence_number},
            {"status", SessionStatusName(slot.session.status)},
            {"summary", ToJson(Summarize(slot.session))}};
  }

  Json ExportLocked(const SessionSlot& slot) {
    Json j = ToJson(slot.session);
    j["sequence_number"] = slot.sequence_number;
    return j;
  }

  SessionSlot& Slot(const std::string& id) {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session " + id);
    return *it->second;
  }

  HttpResponse Queue(const std::string& id) {
    SessionSlot& slot = Slot(id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    const GradingSession& s = slot.session;
    Json items = Json::array();
    for (const std::string& record_id : s.queue) {
      const ScoredRecord& item = s.item(record_id);
      auto grade = s.manual_grades.find(record_id);
      items.push_back({{"record_id", record_id},
                       {"question", item.record.question},
                       {"correct_answer", item.record.correct_answer},
                       {"given_answer", item.record.given_answer},
                       {"s", item.s},
                       {"graded", grade != s.manual_grades.end()},
                       {"grade", grade != s.manual_grades.end()
                                     ? Json(GradeName(grade->second.grade))
                                     : Json(nullptr)}});
    }
    const std::optional<ScoredRecord> head = NextDeferred(s);
    Json j = Envelope(slot);
    j["items"] = items;
    j["head"] = head ? Json(head->record.record_id) : Json(nullptr);
    return JsonResponse(200, j);
  }

  HttpResponse Events(const std::string& id) {
    SessionSlot& slot = Slot(id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    Json events = Json::array();
    for (const SessionEvent& e : ReadEventLog((slot.dir / "events.jsonl").string())) {
      events.push_back(ToJson(e));
    }
    return JsonResponse(200, {{"session_id", id}, {"events", events}});
  }

  // Applies the event to a copy, persists it, then publishes the copy.
  template <typename Respond>
  HttpResponse Mutate(const std::string& id, EventKind kind, Json payload,
                      Respond respond) {
    SessionSlot& slot = Slot(id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    GradingSession next = slot.session;
    SessionEvent event;
    event.sequence_number = slot.sequence_number + 1;
    event.timestamp = NowTimestamp();
    event.kind = kind;
    event.payload = std::move(payload);
    ApplyEvent(next, event);
    if (kind == EventKind::kValidated && next.validation &&
        next.validation->verdict == Verdict::kReject) {
      event.kind = EventKind::kRejected;
    }
    AppendDurably(slot.dir / "events.jsonl", ToJson(event).dump() + "\n");
    slot.session = std::move(next);
    slot.sequence_number = event.sequence_number;
    MaybeSnapshot(slot);
    Json j = Envelope(slot);
    respond(slot.session, j);
    return JsonResponse(200, j);
  }

  HttpResponse Grade(const std::string& id, const Json& body, bool spot_check) {
    const std::string grade = StringField(body, "grade");
    if (!ParseGrade(grade)) Invalid("grade must be \"correct\" or \"incorrect\"");
    Json payload = {{"record_id", StringField(body, "record_id")},
                    {"grade", grade},
                    {"grader_id", body.contains("grader_id")
                                      ? StringField(body, "grader_id")
                                      : std::string("anonymous")},
                    {"spot_check", spot_check}};
    return Mutate(id, EventKind::kManualGrade, std::move(payload),
                  [spot_check](const GradingSession& s, Json& j) {
                    if (!spot_check) return;
                    Json results = Json::object();
                    for (const auto& [side, r] : s.spot_check_results) {
                      results[SideName(side)] = ToJson(r);
                    }
                    j["spot_check_results"] = results;
                  });
  }

  HttpResponse ValidateSession(const std::string& id, const Json& body) {
    const double m = body.contains("m") ? body.at("m").get<double>() : config_.default_m;
    const size_t n_min = body.contains("n_min") ? body.at("n_min").get<size_t>() : 5;
    const std::string method =
        body.contains("risk_method") ? StringField(body, "risk_method") : "normal_tail";
    if (!ParseRiskMethod(method)) Invalid("unknown risk_method " + method);
    Json payload = {{"m", m}, {"n_min", n_min}, {"risk_method", method}};
    return Mutate(id, EventKind::kValidated, std::move(payload),
                  [](const GradingSession& s, Json& j) {
                    j["report"] = ToJson(*s.validation);
                  });
  }

  HttpResponse PlanSpot(const std::string& id, const Json& body) {
    const std::string side = StringField(body, "side");
    const std::optional<Side> parsed = ParseSide(side);
    if (!parsed) Invalid("side must be \"correct\" or \"incorrect\"");
    const double confidence =
        body.contains("target_confidence") ? body.at("target_confidence").get<double>()
                                           : 0.95;
    const uint64_t seed = body.contains("seed") ? body.at("seed").get<uint64_t>() : 42;
    Json payload = {{"side", side}, {"target_confidence", confidence}, {"seed", seed}};
    return Mutate(id, EventKind::kSpotCheckPlanned, std::move(payload),
                  [parsed](const GradingSession& s, Json& j) {
                    j["plan"] = ToJson(s.spot_checks.at(*parsed));
                  });
  }

  // Persistence.

  void MaybeSnapshot(SessionSlot& slot) {
    if (config_.snapshot_every == 0) return;
    if (slot.sequence_number - slot.snapshot_sequence < config_.snapshot_every) return;
    const Json snapshot = {{"sequence_number", slot.sequence_number},
                           {"session", ToJson(slot.session)}};
    WriteAtomically(slot.dir / "snapshot.json", snapshot.dump() + "\n");
    slot.snapshot_sequence = slot.sequence_number;
  }

  void LoadSessions() {
    for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
      if (!entry.is_directory()) continue;
      const fs::path log = entry.path() / "events.jsonl";
      if (!fs::exists(log)) continue;
      auto slot = std::make_shared<SessionSlot>();
      slot->dir = entry.path();
      TrimTornTail(log);
      const std::vector<SessionEvent> events = ReadEventLog(log.string());
      if (events.empty()) continue;
      uint64_t applied = 0;
      const fs::path snapshot_path = entry.path() / "snapshot.json";
      if (fs::exists(snapshot_path)) {
        const Json snapshot = ReadJsonFile(snapshot_path.string());
        applied = snapshot.at("sequence_number").get<uint64_t>();
        slot->session = SessionFromJson(snapshot.at("session"));
        slot->snapshot_sequence = applied;
      }
      for (const SessionEvent& event : events) {
        if (event.sequence_number <= applied) continue;
        ApplyEvent(slot->session, event);
      }
      slot->sequence_number = events.back().sequence_number;
      sessions_[slot->session.session_id] = slot;
    }
  }

  // Drops an unterminated final line so later appends start on a fresh line.
  static void TrimTornTail(const fs::path& log) {
    std::ifstream in(log, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.empty() || text.back() == '\n') return;
    const size_t keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
    in.close();
    fs::resize_file(log, keep);
  }

  ServiceConfig config_;
  fs::path root_;
  EmbedderConfig embedder_;
  std::optional<ProjectionHead> head_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::mutex calibrations_mutex_;
  std::map<std::string, StoredCalibration> calibrations_;

 public:
  httplib::Server server;
};

Service::Service(ServiceConfig config)
    : impl_(std::make_unique<Impl>(config)), config_(std::move(config)) {}

Service::~Service() = default;

HttpResponse Service::Handle(const std::string& method, const std::string& path,
                             const std::string& body,
                             const std::map<std::string, std::string>& headers) {
  return impl_->Handle(method, path, body, headers);
}

Json Service::ExportSession(const std::string& session_id) {
  return impl_->Export(session_id);
}

int Service::Bind() {
  httplib::Server& server = impl_->server;
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> headers;
    for (const auto& [key, value] : req.headers) {
      std::string lower = key;
      for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      headers[lower] = value;
    }
    const HttpResponse response = Handle(req.method, req.path, req.body, headers);
    res.status = response.status;
    res.set_content(response.body, "application/json");
  };
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  server.Put(".*", dispatch);
  server.Delete(".*", dispatch);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.set_default_headers(
      {{"Access-Control-Allow-Origin", "*"},
       {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
       {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  if (config_.port == 0) return server.bind_to_any_port(config_.host);
  return server.bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::ServeBound() { return impl_->server.listen_after_bind(); }

bool Service::Serve() {
  if (Bind() < 0) return false;
  return ServeBound();
}

void Service::Stop() { impl_->server.stop(); }

}  // namespace shortgrade
