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

// Python bindings. Structured values cross the boundary as JSON text so the
// Python side sees the same documents as the CLI and the HTTP service.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "shortgrade/calibration.h"
#include "shortgrade/cli.h"
#include "shortgrade/embedding.h"
#include "shortgrade/error.h"
#include "shortgrade/serialization.h"
#include "shortgrade/service.h"
#include "shortgrade/synthetic.h"
#include "shortgrade/validation.h"

namespace py = pybind11;

namespace shortgrade {
namespace {

ScoredDataset ScoredFromText(const std::string& records_json) {
  bool missing = false;
  ScoredDataset data = ScoredFromJsonArray(Json::parse(records_json), FieldLimits{}, &missing);
  if (missing) throw Error(ErrorCode::kInvalidArgument, "every record needs a score \"s\"");
  return data;
}

EmbedderConfig ConfigFromText(const std::string& config_json) {
  return config_json.empty() ? EmbedderConfig{} : EmbedderConfigFromJson(Json::parse(config_json));
}

std::string CalibrateJson(const std::string& records_json, double c_min_incorrect,
                          double c_min_correct) {
  return ToJson(Calibrate(ScoredFromText(records_json),
                          AccuracyConstraints{c_min_incorrect, c_min_correct}))
      .dump();
}

std::string ClassifyName(double s, double t_incorrect, double t_correct) {
  const Thresholds th{t_incorrect, t_incorrect, t_correct, false};
  switch (Classify(s, th)) {
    case Bucket::kIncorrect:
      return "incorrect";
    case Bucket::kDeferred:
      return "deferred";
    case Bucket::kCorrect:
      return "correct";
  }
  return "deferred";
}

std::vector<double> EmbedPairValues(const std::string& question, const std::string& answer,
                                    const std::string& config_json) {
  return EmbedPair(question, answer, ConfigFromText(config_json)).values;
}

double SimilarityOf(const std::string& question, const std::string& correct_answer,
                    const std::string& given_answer, const std::string& config_json) {
  GradingRecord record;
  record.question = question;
  record.correct_answer = correct_answer;
  record.given_answer = given_answer;
  return Similarity(record, ConfigFromText(config_json));
}

std::tuple<double, double> RiskOf(double delta, double sigma) {
  const TailRisk risk = EstimateRisk(delta, sigma);
  return {risk.z, risk.probability};
}

std::string SyntheticScoresJson(size_t n, uint64_t seed) {
  SyntheticScoreConfig config;
  config.n = n;
  config.seed = seed;
  Json out = Json::array();
  for (const ScoredRecord& item : MakeSyntheticScores(config).items) {
    out.push_back(ScoredToJson(item));
  }
  return out.dump();
}

std::tuple<int, std::string, std::string> RunCliCapture(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = RunCli(args, out, err);
  }
  return {code, out.str(), err.str()};
}

class PyService {
 public:
  explicit PyService(const std::string& config_json)
      : service_(config_json.empty() ? ServiceConfig{}
                                     : ServiceConfig::FromJson(Json::parse(config_json))) {}

  std::tuple<int, std::string> Handle(const std::string& method, const std::string& path,
                                      const std::string& body,
                                      const std::map<std::string, std::string>& headers) {
    py::gil_scoped_release release;
    const HttpResponse r = service_.Handle(method, path, body, headers);
    return {r.status, r.body};
  }

 private:
  Service service_;
};

}  // namespace
}  // namespace shortgrade

PYBIND11_MODULE(_core, m) {
  using namespace shortgrade;
  m.doc() = "shortgrade core bindings";

  static py::handle error_type =
      py::exception<Error>(m, "ShortgradeError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = error_type(e.what());
      instance.attr("code") = py::str(std::string(ErrorCodeName(e.code())));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    } catch (const Json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("calibrate", &CalibrateJson, py::arg("records_json"), py::arg("c_min_incorrect"),
        py::arg("c_min_correct"));
  m.def("classify", &ClassifyName, py::arg("s"), py::arg("t_incorrect"), py::arg("t_correct"));
  m.def("embed_pair", &EmbedPairValues, py::arg("question"), py::arg("answer"),
        py::arg("config_json") = "");
  m.def("similarity", &SimilarityOf, py::arg("question"), py::arg("correct_answer"),
        py::arg("given_answer"), py::arg("config_json") = "");
  m.def("pair_loss", &PairLoss, py::arg("cosine"), py::arg("label"), py::arg("margin"));
  m.def("estimate_risk", &RiskOf, py::arg("delta"), py::arg("sigma"));
  m.def("spot_check_sample_size", &SpotCheckSampleSize, py::arg("c_min"),
        py::arg("confidence"));
  m.def("binomial_confidence", &BinomialConfidence, py::arg("n"), py::arg("errors"),
        py::arg("c_min"));
  m.def("synthetic_scores", &SyntheticScoresJson, py::arg("n"), py::arg("seed"));
  m.def("run_cli", &RunCliCapture, py::arg("args"));

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&>(), py::arg("config_json") = "")
      .def("handle", &PyService::Handle, py::arg("method"), py::arg("path"),
           py::arg("body") = "", py::arg("headers") = std::map<std::string, std::string>{});
}
