# Copyright 2026 The Shortgrade Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python interface to the shortgrade C++ core."""

import json

from shortgrade import _core
from shortgrade._core import ShortgradeError

__all__ = [
    "ShortgradeError",
    "Service",
    "binomial_confidence",
    "calibrate",
    "classify",
    "embed_pair",
    "estimate_risk",
    "pair_loss",
    "run_cli",
    "similarity",
    "spot_check_sample_size",
    "synthetic_scores",
]


def _config(config):
    return "" if config is None else json.dumps(config)


def calibrate(records, c_min_incorrect, c_min_correct):
    """Calibrates thresholds on scored records; returns the calibration dict."""
    return json.loads(_core.calibrate(json.dumps(list(records)), c_min_incorrect, c_min_correct))


def classify(s, t_incorrect, t_correct):
    return _core.classify(s, t_incorrect, t_correct)


def embed_pair(question, answer, config=None):
    return _core.embed_pair(question, answer, _config(config))


def similarity(question, correct_answer, given_answer, config=None):
    return _core.similarity(question, correct_answer, given_answer, _config(config))


def pair_loss(cosine, label, margin=0.2):
    return _core.pair_loss(cosine, label, margin)


def estimate_risk(delta, sigma):
    """Returns (z, probability)."""
    return _core.estimate_risk(delta, sigma)


def spot_check_sample_size(c_min, confidence):
    return _core.spot_check_sample_size(c_min, confidence)


def binomial_confidence(n, errors, c_min):
    return _core.binomial_confidence(n, errors, c_min)


def synthetic_scores(n=5000, seed=42):
    return json.loads(_core.synthetic_scores(n, seed))


def run_cli(args):
    """Runs the command line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])


class Service:
    """In-process HTTP service; requests go through handle() without a socket."""

    def __init__(self, config=None):
        self._service = _core.Service(_config(config))

    def handle(self, method, path, body=None, headers=None):
        """Returns (status, parsed JSON body)."""
        text = "" if body is None else (body if isinstance(body, str) else json.dumps(body))
        status, response = self._service.handle(method, path, text, headers or {})
        return status, json.loads(response) if response else None
