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

#include "shortgrade/cli.h"

#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "shortgrade/calibration.h"
#include "shortgrade/corpus.h"
#include "shortgrade/embedding.h"
#include "shortgrade/error.h"
#include "shortgrade/grader.h"
#include "shortgrade/rng.h"
#include "shortgrade/pipeline.h"
#include "shortgrade/serialization.h"
#include "shortgrade/service.h"
#include "shortgrade/synthetic.h"
#include "shortgrade/validation.h"

namespace shortgrade {

namespace {

constexpr uint64_t kDefaultSeed = 42;

struct Context {
  std::ostream& out;
  std::string output;

  void Emit(const std::string& text) const {
    if (output.empty() || output == "-") {
      out << text;
    } else {
      WriteTextFile(output, text);
    }
  }
  void EmitJson(const Json& j) const { Emit(DumpJson(j)); }
};

Corpus ReadCorpus(const std::string& path, const FieldLimits& limits = {}) {
  return IngestFile(path, limits).corpus;
}

std::string CorpusText(const Corpus& corpus) {
  std::ostringstream text;
  WriteCorpusJsonl(text, corpus);
  return text.str();
}

std::string ScoredText(const ScoredDataset& data) {
  std::ostringstream text;
  WriteScoredJsonl(text, data);
  return text.str();
}

EmbedderConfig LoadEmbedder(const std::string& config_path, const std::string& head_path,
                            std::optional<ProjectionHead>& head) {
  EmbedderConfig config;
  if (!config_path.empty()) config = EmbedderConfigFromJson(ReadJsonFile(config_path));
  if (!head_path.empty()) head = ProjectionHead::Load(head_path, &config);
  return config;
}

Json CountsJson(const Corpus& corpus) {
  size_t correct = 0;
  size_t synthetic = 0;
  for (const GradingRecord& r : corpus.records) {
    correct += r.grade == Grade::kCorrect;
    synthetic += r.synthetic;
  }
  return {{"records", corpus.records.size()},
          {"correct", correct},
          {"incorrect", corpus.records.size() - correct},
          {"synthetic", synthetic}};
}

// The standard fixture: scores for calibration and an independent
// reference set drawn from the same distributions.
struct StandardScores {
  ScoredDataset calibration;
  ScoredDataset reference;
};

StandardScores MakeStandardScores(size_t n) {
  SyntheticScoreConfig config;
  config.n = n;
  config.seed = 1;
  StandardScores scores;
  scores.calibration = MakeSyntheticScores(config);
  config.seed = 42;
  scores.reference = MakeSyntheticScores(config);
  return scores;
}

volatile std::sig_atomic_t g_stop_requested = 0;
Service* g_service = nullptr;

void HandleStopSignal(int) {
  g_stop_requested = 1;
  if (g_service != nullptr) g_service->Stop();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Selective autograding of short free-text answers", "shortgrade"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "shortgrade 0.1.0");

  Context ctx{out, {}};
  std::function<void()> action;
  FieldLimits limits;
  uint64_t seed = kDefaultSeed;

  std::map<std::string, std::pair<CLI::Option*, uint64_t>> seed_options;
  auto add_seed = [&](CLI::App* sub, uint64_t fallback) {
    CLI::Option* option = sub->add_option(
        "--seed", seed, "Random seed (default " + std::to_string(fallback) + ")");
    seed_options[sub->get_name()] = {option, fallback};
    return option;
  };

  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", ctx.output, "Output path (default stdout)");
  };

  // ingest
  {
    auto* sub = app.add_subcommand("ingest", "Normalize and validate raw JSONL records");
    auto input = std::make_shared<std::string>();
    auto report_path = std::make_shared<std::string>();
    auto dedup = std::make_shared<bool>(false);
    sub->add_option("-i,--input", *input, "Raw records (JSONL)")->required();
    sub->add_option("--report", *report_path, "Write the ingestion report here");
    sub->add_flag("--dedup", *dedup, "Drop duplicate tuples, first occurrence wins");
    sub->add_option("--max-question-chars", limits.max_question_chars);
    sub->add_option("--max-answer-chars", limits.max_answer_chars);
    add_output(sub);
    sub->callback([&, input, report_path, dedup] {
      action = [&, input, report_path, dedup] {
        IngestResult result = IngestFile(*input, limits);
        Json report = ToJson(result.report);
        if (*dedup) {
          const size_t before = result.corpus.records.size();
          result.corpus = Deduplicate(result.corpus);
          report["duplicates_removed"] = before - result.corpus.records.size();
        }
        if (ctx.output.empty()) {
          // Without an output file the report is the result.
          ctx.EmitJson(report);
          return;
        }
        ctx.Emit(CorpusText(result.corpus));
        if (!report_path->empty()) {
          WriteTextFile(*report_path, DumpJson(report));
        } else {
          out << DumpJson(report);
        }
      };
    });
  }

  // stats
  {
    auto* sub = app.add_subcommand("stats", "Corpus statistics");
    auto input = std::make_shared<std::string>();
    sub->add_option("-i,--input", *input, "Records (JSONL)")->required();
    add_output(sub);
    sub->callback([&, input] {
      action = [&, input] { ctx.EmitJson(ToJson(ComputeStats(ReadCorpus(*input)))); };
    });
  }

  // balance
  {
    auto* sub = app.add_subcommand("balance", "Add cross-question negatives");
    auto input = std::make_shared<std::string>();
    sub->add_option("-i,--input", *input, "Records (JSONL)")->required();
    add_seed(sub, kDefaultSeed);
    add_output(sub);
    sub->callback([&, input] {
      action = [&, input] {
        const Corpus corpus = ReadCorpus(*input);
        const Corpus balanced = Balance(corpus, seed);
        const Json summary = {{"seed", seed},
                              {"before", CountsJson(corpus)},
                              {"after", CountsJson(balanced)}};
        if (ctx.output.empty()) {
          ctx.EmitJson(summary);
          return;
        }
        ctx.Emit(CorpusText(balanced));
        out << DumpJson(summary);
      };
    });
  }

  // split
  {
    auto* sub = app.add_subcommand("split", "Question-disjoint train/validation/test split");
    auto input = std::make_shared<std::string>();
    auto n_val = std::make_shared<size_t>(0);
    auto n_test = std::make_shared<size_t>(0);
    auto prefix = std::make_shared<std::string>();
    sub->add_option("-i,--input", *input, "Records (JSONL)")->required();
    sub->add_option("--validation-questions", *n_val)->required();
    sub->add_option("--test-questions", *n_test)->required();
    sub->add_option("--out-prefix", *prefix,
                    "Writes <prefix>train.jsonl, <prefix>validation.jsonl, "
                    "<prefix>test.jsonl")
        ->required();
    add_seed(sub, kDefaultSeed);
    add_output(sub);
    sub->callback([&, input, n_val, n_test, prefix] {
      action = [&, input, n_val, n_test, prefix] {
        const CorpusSplit split = SplitByQuestion(ReadCorpus(*input), *n_val, *n_test, seed);
        WriteTextFile(*prefix + "train.jsonl", CorpusText(split.train));
        WriteTextFile(*prefix + "validation.jsonl", CorpusText(split.validation));
        WriteTextFile(*prefix + "test.jsonl", CorpusText(split.test));
        ctx.EmitJson({{"seed", seed},
                      {"train", CountsJson(split.train)},
                      {"validation", CountsJson(split.validation)},
                      {"test", CountsJson(split.test)}});
      };
    });
  }

  // train
  {
    auto* sub = app.add_subcommand("train", "Train the projection head");
    auto input = std::make_shared<std::string>();
    auto head_out = std::make_shared<std::string>();
    auto embedder_path = std::make_shared<std::string>();
    auto train = std::make_shared<TrainConfig>();
    sub->add_option("-i,--input", *input, "Training records (JSONL)")->required();
    sub->add_option("--head", *head_out, "Where to write the trained head")->required();
    sub->add_option("--embedder", *embedder_path, "Embedder config (JSON)");
    sub->add_option("--margin", train->margin)->default_val(0.2);
    sub->add_option("--learning-rate", train->learning_rate)->default_val(1e-3);
    sub->add_option("--epochs", train->epochs)->default_val(10);
    sub->add_option("--batch-size", train->batch_size)->default_val(32);
    add_seed(sub, kDefaultSeed);
    add_output(sub);
    sub->callback([&, input, head_out, embedder_path, train] {
      action = [&, input, head_out, embedder_path, train] {
        std::optional<ProjectionHead> unused;
        const EmbedderConfig config = LoadEmbedder(*embedder_path, "", unused);
        train->seed = seed;
        const ProjectionHead head = TrainProjection(ReadCorpus(*input), config, *train);
        head.Save(*head_out, config);
        ctx.EmitJson({{"seed", seed},
                      {"epochs", head.epochs},
                      {"loss_history", head.loss_history},
                      {"final_loss", head.final_loss()},
                      {"head", *head_out}});
      };
    });
  }

  // score
  {
    auto* sub = app.add_subcommand("score", "Score records by embedding similarity");
    auto input = std::make_shared<std::string>();
    auto head_path = std::make_shared<std::string>();
    auto embedder_path = std::make_shared<std::string>();
    sub->add_option("-i,--input", *input, "Records (JSONL)")->required();
    sub->add_option("--head", *head_path, "Trained projection head");
    sub->add_option("--embedder", *embedder_path, "Embedder config (JSON)");
    add_output(sub);
    sub->callback([&, input, head_path, embedder_path] {
      action = [&, input, head_path, embedder_path] {
        std::optional<ProjectionHead> head;
        const EmbedderConfig config = LoadEmbedder(*embedder_path, *head_path, head);
        const ScoredDataset data =
            ScoreCorpus(ReadCorpus(*input), config, head ? &*head : nullptr);
        ctx.Emit(ScoredText(data));
      };
    });
  }

  // calibrate
  {
    auto* sub = app.add_subcommand("calibrate", "Calibrate thresholds and the reference");
    auto input = std::make_shared<std::string>();
    auto payload = std::make_shared<std::string>();
    auto reference = std::make_shared<std::string>();
    auto request = std::make_shared<CalibrationRequest>();
    auto head_path = std::make_shared<std::string>();
    auto embedder_path = std::make_shared<std::string>();
    auto* in_opt = sub->add_option("-i,--input", *input, "Scored records (JSONL)");
    auto* payload_opt = sub->add_option(
        "--payload", *payload, "A POST /calibrations request body (JSON)");
    in_opt->excludes(payload_opt);
    sub->add_option("--reference", *reference, "Scored reference records (JSONL)")
        ->excludes(payload_opt);
    auto* ci = sub->add_option("--cmin-incorrect", request->constraints.c_min_incorrect)
                   ->default_val(0.95);
    auto* cc = sub->add_option("--cmin-correct", request->constraints.c_min_correct)
                   ->default_val(0.9);
    auto* sizes = sub->add_option("--exam-size", request->exam_sizes,
                                  "Bootstrap exam sizes (default 5% of the reference)");
    auto* trials = sub->add_option("--bootstrap-trials", request->bootstrap_trials)
                       ->default_val(200);
    auto* points = sub->add_option("--curve-points", request->curve_points)->default_val(21);
    auto* seed_opt = add_seed(sub, kDefaultSeed);
    for (CLI::Option* o : {ci, cc, sizes, trials, points, seed_opt}) o->excludes(payload_opt);
    sub->add_option("--head", *head_path, "Head for records without scores");
    sub->add_option("--embedder", *embedder_path, "Embedder config (JSON)");
    add_output(sub);
    sub->callback([&, input, payload, reference, request, head_path, embedder_path] {
      action = [&, input, payload, reference, request, head_path, embedder_path] {
        if (input->empty() && payload->empty()) {
          throw CLI::RequiredError("--input or --payload");
        }
        CalibrationRequest req = *request;
        if (!payload->empty()) {
          std::optional<ProjectionHead> head;
          const EmbedderConfig config = LoadEmbedder(*embedder_path, *head_path, head);
          req = CalibrationRequestFromJson(ReadJsonFile(*payload), config,
                                           head ? &*head : nullptr);
        } else {
          req.data = ReadScoredJsonlFile(*input);
          if (!reference->empty()) req.reference_data = ReadScoredJsonlFile(*reference);
          req.constraints.Validate();
          req.seed = seed;
        }
        ctx.Emit(CalibrationDocument(req).dump() + "\n");
      };
    });
  }

  // grade
  {
    auto* sub = app.add_subcommand("grade", "Open a grading session for one exam");
    auto input = std::make_shared<std::string>();
    auto calibration = std::make_shared<std::string>();
    auto grades = std::make_shared<std::string>();
    auto session_id = std::make_shared<std::string>("exam");
    sub->add_option("-i,--input", *input, "Scored exam records (JSONL)")->required();
    sub->add_option("--calibration", *calibration, "Calibration document (JSON)")
        ->required();
    sub->add_option("--grades", *grades,
                    "Manual grades (JSONL of record_id, grade, grader_id)");
    sub->add_option("--session-id", *session_id)->default_val("exam");
    add_output(sub);
    sub->callback([&, input, calibration, grades, session_id] {
      action = [&, input, calibration, grades, session_id] {
        const StoredCalibration cal =
            StoredCalibrationFromJson(ReadJsonFile(*calibration));
        GradingSession session = OpenSession(*session_id, ReadScoredJsonlFile(*input),
                                             cal.thresholds, cal.constraints,
                                             cal.reference);
        if (!grades->empty()) {
          std::ifstream in(*grades);
          if (!in) throw Error(ErrorCode::kIo, "cannot open " + *grades);
          std::string line;
          size_t line_number = 0;
          while (std::getline(in, line)) {
            ++line_number;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const Json g = Json::parse(line, nullptr, false);
            if (g.is_discarded() || !g.is_object()) {
              throw Error(ErrorCode::kInvalidArgument,
                          "grades line " + std::to_string(line_number) + " is not an object");
            }
            const std::optional<Grade> grade = ParseGrade(g.value("grade", ""));
            if (!grade) {
              throw Error(ErrorCode::kInvalidArgument,
                          "grades line " + std::to_string(line_number) + ": bad grade");
            }
            SubmitManualGrade(session, g.value("record_id", ""), *grade,
                              g.value("grader_id", "cli"), g.value("timestamp", ""));
          }
        }
        ctx.EmitJson(ToJson(session));
      };
    });
  }

  // validate
  {
    auto* sub = app.add_subcommand("validate", "Validate a graded session");
    auto session_path = std::make_shared<std::string>();
    auto session_out = std::make_shared<std::string>();
    auto options = std::make_shared<ValidateOptions>();
    auto method = std::make_shared<std::string>("normal_tail");
    sub->add_option("--session", *session_path, "Session export (JSON)")->required();
    sub->add_option("--m", options->m, "Tolerance on negative delta")->default_val(0.0);
    sub->add_option("--n-min", options->n_min)->default_val(5);
    sub->add_option("--risk-method", *method)
        ->check(CLI::IsMember({"normal_tail", "monte_carlo"}))
        ->default_val("normal_tail");
    sub->add_option("--session-out", *session_out, "Write the updated session here");
    add_output(sub);
    sub->callback([&, session_path, session_out, options, method] {
      action = [&, session_path, session_out, options, method] {
        GradingSession session = SessionFromJson(ReadJsonFile(*session_path));
        ValidateOptions opts = *options;
        opts.risk_method = *ParseRiskMethod(*method);
        const ValidationReport report = Validate(session, opts);
        if (!session_out->empty()) WriteTextFile(*session_out, DumpJson(ToJson(session)));
        Json j = ToJson(report);
        j["status"] = SessionStatusName(session.status);
        ctx.EmitJson(j);
      };
    });
  }

  // simulate
  {
    auto* sub = app.add_subcommand("simulate", "Clean and degraded exam validation trials");
    auto input = std::make_shared<std::string>();
    auto calibration_input = std::make_shared<std::string>();
    auto config = std::make_shared<SimulationConfig>();
    auto constraints = std::make_shared<AccuracyConstraints>();
    auto bootstrap = std::make_shared<size_t>(500);
    auto synthetic_n = std::make_shared<size_t>(5000);
    sub->add_option("-i,--input", *input,
                    "Scored reference records D_V (default: standard synthetic set)");
    sub->add_option("--calibration-input", *calibration_input,
                    "Scored records for calibration (default: independent synthetic set)");
    sub->add_option("--trials", config->trials)->default_val(200);
    sub->add_option("--fraction", config->fraction)->default_val(0.05);
    sub->add_option("--flip", config->flip)->default_val(0.2);
    sub->add_option("--m", config->validate.m)->default_val(0.0);
    sub->add_option("--n-min", config->validate.n_min)->default_val(5);
    sub->add_option("--cmin-incorrect", constraints->c_min_incorrect)->default_val(0.95);
    sub->add_option("--cmin-correct", constraints->c_min_correct)->default_val(0.9);
    sub->add_option("--bootstrap-trials", *bootstrap)->default_val(500);
    sub->add_option("--synthetic-size", *synthetic_n)->default_val(5000);
    add_seed(sub, 7);
    add_output(sub);
    sub->callback([&, input, calibration_input, config, constraints, bootstrap, synthetic_n] {
      action = [&, input, calibration_input, config, constraints, bootstrap, synthetic_n] {
        constraints->Validate();
        StandardScores standard;
        if (input->empty() || calibration_input->empty()) {
          standard = MakeStandardScores(*synthetic_n);
        }
        const ScoredDataset data_v =
            input->empty() ? standard.reference : ReadScoredJsonlFile(*input);
        const ScoredDataset calibration_data =
            calibration_input->empty() ? standard.calibration
                                       : ReadScoredJsonlFile(*calibration_input);
        const Calibration calibration = Calibrate(calibration_data, *constraints);
        SimulationConfig cfg = *config;
        cfg.seed = seed;
        const size_t exam_size =
            SampleExam(data_v, cfg.fraction, 0).items.size();
        const ReferenceProfile reference = BuildReference(
            data_v, calibration.thresholds, {exam_size}, *bootstrap, DeriveSeed(seed, 1u << 20));
        const SimulationReport report = RunValidationSimulation(
            data_v, calibration.thresholds, *constraints, reference, cfg);
        Json j = ToJson(report);
        j["calibration"] = ToJson(calibration);
        j["reference"] = {{"c_diff_incorrect", reference.c_diff_incorrect},
                          {"c_diff_correct", reference.c_diff_correct},
                          {"c_diff_pooled", reference.c_diff_pooled},
                          {"n_total", reference.n_total}};
        j["seed"] = seed;
        ctx.EmitJson(j);
      };
    });
  }

  // curves
  {
    auto* sub = app.add_subcommand("curves", "Accuracy and coverage against threshold (CSV)");
    auto input = std::make_shared<std::string>();
    auto side = std::make_shared<std::string>("correct");
    auto points = std::make_shared<size_t>(101);
    sub->add_option("-i,--input", *input, "Scored records (JSONL)")->required();
    sub->add_option("--side", *side)
        ->check(CLI::IsMember({"correct", "incorrect"}))
        ->default_val("correct");
    sub->add_option("--points", *points)->default_val(101);
    add_output(sub);
    sub->callback([&, input, side, points] {
      action = [&, input, side, points] {
        ctx.Emit(CurveCsv(AccuracyCurve(ReadScoredJsonlFile(*input), *ParseSide(*side),
                                        *points)));
      };
    });
  }

  // synth
  {
    auto* sub = app.add_subcommand("synth", "Write a standard synthetic fixture");
    auto kind = std::make_shared<std::string>("corpus");
    auto corpus = std::make_shared<SyntheticCorpusConfig>();
    auto scores = std::make_shared<SyntheticScoreConfig>();
    sub->add_option("--kind", *kind)->check(CLI::IsMember({"corpus", "scores"}))
        ->default_val("corpus");
    sub->add_option("--questions", corpus->questions)->default_val(200);
    sub->add_option("--vocabulary-seed", corpus->vocabulary_seed)->default_val(42);
    sub->add_option("--n", scores->n, "Scored items")->default_val(5000);
    add_seed(sub, kDefaultSeed);
    add_output(sub);
    sub->callback([&, kind, corpus, scores] {
      action = [&, kind, corpus, scores] {
        if (*kind == "corpus") {
          corpus->seed = seed;
          ctx.Emit(CorpusText(MakeSyntheticCorpus(*corpus)));
        } else {
          scores->seed = seed;
          ctx.Emit(ScoredText(MakeSyntheticScores(*scores)));
        }
      };
    });
  }

  // serve
  {
    auto* sub = app.add_subcommand("serve", "Run the HTTP grading service");
    auto config_path = std::make_shared<std::string>();
    auto listen = std::make_shared<std::string>();
    auto data_dir = std::make_shared<std::string>();
    sub->add_option("--config", *config_path, "Service config (JSON)");
    sub->add_option("--listen", *listen, "host:port (port 0 picks a free one)");
    sub->add_option("--data-dir", *data_dir, "Session and calibration storage");
    sub->callback([&, config_path, listen, data_dir] {
      action = [&, config_path, listen, data_dir] {
        ServiceConfig config =
            config_path->empty() ? ServiceConfig{} : ServiceConfig::FromFile(*config_path);
        config.ApplyEnvironment();
        if (!listen->empty()) {
          Json j = {{"listen", *listen}};
          const ServiceConfig parsed = ServiceConfig::FromJson(j);
          config.host = parsed.host;
          config.port = parsed.port;
        }
        if (!data_dir->empty()) config.data_dir = *data_dir;
        Service service(config);
        const int port = service.Bind();
        if (port < 0) {
          throw Error(ErrorCode::kIo, "cannot listen on " + config.host + ":" +
                                          std::to_string(config.port));
        }
        g_service = &service;
        std::signal(SIGTERM, HandleStopSignal);
        std::signal(SIGINT, HandleStopSignal);
        out << Json({{"listening", {{"host", config.host}, {"port", port}}},
                     {"data_dir", config.data_dir}})
                   .dump()
            << std::endl;
        if (!g_stop_requested) service.ServeBound();
        g_service = nullptr;
      };
    });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << Json({{"error", {{"code", "usage"}, {"message", e.what()}}}}).dump() << '\n';
    return kExitUsageError;
  }
  for (const CLI::App* sub : app.get_subcommands()) {
    auto it = seed_options.find(sub->get_name());
    if (it != seed_options.end() && it->second.first->count() == 0) {
      seed = it->second.second;
    }
  }

  try {
    action();
  } catch (const CLI::ParseError& e) {
    err << Json({{"error", {{"code", "usage"}, {"message", e.what()}}}}).dump() << '\n';
    return kExitUsageError;
  } catch (const Error& e) {
    err << Json({{"error", {{"code", ErrorCodeName(e.code())}, {"message", e.what()}}}})
               .dump()
        << '\n';
    return kExitDomainError;
  } catch (const Json::exception& e) {
    err << Json({{"error", {{"code", "invalid_argument"}, {"message", e.what()}}}}).dump()
        << '\n';
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << Json({{"error", {{"code", "internal"}, {"message", e.what()}}}}).dump() << '\n';
    return kExitDomainError;
  }
  return kExitOk;
}

}  // namespace shortgrade
