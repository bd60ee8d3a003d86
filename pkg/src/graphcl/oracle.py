"""Client contracts and HTTP clients for the external stance and similarity models.

The stance model and the sentence-pair scorer run out of process; this
module only defines their wire protocol. Anything callable with the same
shape (including an in-process stub) satisfies the contracts used by the
metrics and filtering code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol

import requests

from .codec import serialize_linearized
from .graphs import Graph

SUPPORT = "support"
COUNTER = "counter"
INCORRECT = "incorrect"
STANCE_CLASSES = (SUPPORT, COUNTER, INCORRECT)

STANCE_URL_ENV = "GRAPHCL_STANCE_URL"
SCORER_URL_ENV = "GRAPHCL_SCORER_URL"

_PROB_SUM_TOLERANCE = 1e-6


class OracleUnavailable(RuntimeError):
    """The external stance or scorer endpoint could not produce an answer."""


@dataclass(frozen=True)
class StanceProbs:
    """3-way class distribution over support / counter / incorrect."""

    support: float
    counter: float
    incorrect: float

    def __post_init__(self) -> None:
        total = self.support + self.counter + self.incorrect
        if abs(total - 1.0) > _PROB_SUM_TOLERANCE:
            raise ValueError(f"class probabilities sum to {total}, expected 1")

    def top(self) -> str:
        pairs = [(self.support, SUPPORT), (self.counter, COUNTER), (self.incorrect, INCORRECT)]
        return max(pairs, key=lambda item: item[0])[1]

    def prob(self, stance: str) -> float:
        if stance not in STANCE_CLASSES:
            raise ValueError(f"unknown stance {stance!r}")
        return getattr(self, stance)

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float]) -> "StanceProbs":
        try:
            return cls(float(probs[SUPPORT]), float(probs[COUNTER]), float(probs[INCORRECT]))
        except KeyError as exc:
            raise ValueError(f"missing stance class {exc}") from exc


# (belief, graph) -> StanceProbs; also accepts plain functions and lambdas
class StanceOracle(Protocol):
    def __call__(self, belief: str, graph: Graph) -> StanceProbs: ...


EdgeSimilarity = Callable[[str, str], float]


class HttpStanceOracle:
    """POSTs {"belief", "graph"} (graph linearized) and expects
    {"probs": {"support", "counter", "incorrect"}}."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, belief: str, graph: Graph) -> StanceProbs:
        payload = {"belief": belief, "graph": serialize_linearized(graph)}
        try:
            response = requests.post(self.url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            body = response.json()
            return StanceProbs.from_mapping(body["probs"])
        except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
            raise OracleUnavailable(f"stance oracle at {self.url}: {exc}") from exc


class HttpEdgeScorer:
    """POSTs {"sentence_a", "sentence_b"} and expects {"score": float in [0, 1]}."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, sentence_a: str, sentence_b: str) -> float:
        payload = {"sentence_a": sentence_a, "sentence_b": sentence_b}
        try:
            response = requests.post(self.url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            score = float(response.json()["score"])
        except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
            raise OracleUnavailable(f"edge scorer at {self.url}: {exc}") from exc
        if not 0.0 <= score <= 1.0:
            raise OracleUnavailable(f"edge scorer returned out-of-range score {score}")
        return score


def stance_oracle_from_env(default_url: str | None, timeout: float = 10.0) -> HttpStanceOracle | None:
    url = os.environ.get(STANCE_URL_ENV, default_url)
    return HttpStanceOracle(url, timeout) if url else None


def edge_scorer_from_env(default_url: str | None, timeout: float = 10.0) -> HttpEdgeScorer | None:
    url = os.environ.get(SCORER_URL_ENV, default_url)
    return HttpEdgeScorer(url, timeout) if url else None
