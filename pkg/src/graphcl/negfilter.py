"""Assembly and quality filtering of human-like negative graphs.

Candidate incorrect edges (produced externally) are grafted onto a correct
graph; the result is kept only when it stays structurally correct. Quality
gates: the acceptable-edge fraction (AE) measured against the original
graph, and the incorrect-class probability (IP) from the stance oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .graphs import (
    COMMONSENSE,
    Graph,
    GraphInvariantError,
    RelationSet,
    validate_structure,
)
from .oracle import INCORRECT, OracleUnavailable, StanceOracle

CandidateEdge = tuple[str, str, str]

STRATEGY_AE = "ae"
STRATEGY_IP = "ip"
STRATEGY_BOTH = "both"
STRATEGIES = (STRATEGY_AE, STRATEGY_IP, STRATEGY_BOTH)


class RejectedError(ValueError):
    """No candidate edge could be added without breaking a constraint."""


@dataclass(frozen=True)
class FilterThresholds:
    """Inclusive keep thresholds: AE >= ae_min, IP >= ip_min."""

    ae_min: float = 0.4
    ip_min: float = 0.5

    def __post_init__(self) -> None:
        for name in ("ae_min", "ip_min"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")


def _graph_with_edge(graph: Graph, candidate: CandidateEdge) -> Optional[Graph]:
    """The graph with one candidate edge added, or None when the addition is
    not even well-formed (self-loop, duplicate triple)."""
    src, relation, dst = candidate
    new_labels = [
        label for label in (src, dst) if graph.find(label) is None
    ]
    provenance = {label: COMMONSENSE for label in new_labels}
    try:
        return Graph.from_parts(
            graph.labels(),
            list(graph.triples()) + [(src, relation, dst)],
            {**{k: v for k, v in graph.provenance_map().items() if v}, **provenance},
        )
    except GraphInvariantError:
        return None


def _edge_in_graph(graph: Graph, candidate: CandidateEdge) -> bool:
    src, relation, dst = candidate
    src_id = graph.find(src)
    dst_id = graph.find(dst)
    if src_id is None or dst_id is None:
        return False
    return any(
        e.src == src_id and e.dst == dst_id and e.relation == relation
        for e in graph.edges
    )


def is_acceptable(
    candidate: CandidateEdge, correct: Graph, relation_set: RelationSet
) -> bool:
    """An edge is acceptable iff it is absent from the correct graph and
    adding it keeps all four structural constraints. New endpoint labels are
    admitted as commonsense nodes."""
    if _edge_in_graph(correct, candidate):
        return False
    extended = _graph_with_edge(correct, candidate)
    if extended is None:
        return False
    return validate_structure(extended, relation_set).structurally_correct


def acceptable_edge_fraction(
    candidates: Sequence[CandidateEdge], correct: Graph, relation_set: RelationSet
) -> float:
    """Fraction of candidates acceptable against the original graph.

    Each candidate is tested independently, so the result does not depend on
    candidate order. An empty candidate set scores 0.
    """
    if not candidates:
        return 0.0
    acceptable = sum(
        1 for candidate in candidates if is_acceptable(candidate, correct, relation_set)
    )
    return acceptable / len(candidates)


def assemble_negative(
    correct: Graph, candidates: Sequence[CandidateEdge], relation_set: RelationSet
) -> Graph:
    """Add candidates greedily in the given order, skipping any that would
    break a constraint against the graph built so far.

    The result always passes validate_structure. Raises
    :class:`RejectedError` when no edge at all could be added.
    """
    current = correct
    added = 0
    for candidate in candidates:
        if _edge_in_graph(current, candidate):
            continue
        extended = _graph_with_edge(current, candidate)
        if extended is None:
            continue
        if not validate_structure(extended, relation_set).structurally_correct:
            continue
        current = extended
        added += 1
    if added == 0:
        raise RejectedError("no candidate edge was insertable")
    return current


@dataclass(frozen=True)
class ScoredNegative:
    """An assembled negative graph with its quality scores; ``ip`` is None
    when no stance oracle was consulted."""

    graph: Graph
    ae: float
    ip: Optional[float] = None


def score_incorrect_probability(
    graph: Graph, belief: str, oracle: StanceOracle
) -> float:
    """IP: the oracle's probability for the incorrect class."""
    return oracle(belief, graph).prob(INCORRECT)


def filter_candidates(
    scored: Iterable[ScoredNegative],
    thresholds: FilterThresholds = FilterThresholds(),
    strategy: str = STRATEGY_AE,
) -> list[ScoredNegative]:
    """Keep negatives whose scores clear the inclusive thresholds.

    Strategies: "ae" keeps AE >= ae_min, "ip" keeps IP >= ip_min, "both"
    requires the two together. Raising a threshold never enlarges the kept
    set. The IP strategies require IP scores to be present.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    kept = []
    for item in scored:
        if strategy in (STRATEGY_IP, STRATEGY_BOTH) and item.ip is None:
            raise OracleUnavailable("IP filtering requested but no IP score present")
        ae_ok = item.ae >= thresholds.ae_min
        ip_ok = item.ip is not None and item.ip >= thresholds.ip_min
        if strategy == STRATEGY_AE and ae_ok:
            kept.append(item)
        elif strategy == STRATEGY_IP and ip_ok:
            kept.append(item)
        elif strategy == STRATEGY_BOTH and ae_ok and ip_ok:
            kept.append(item)
    return kept


def load_candidate_sets(path: str) -> dict[str, list[CandidateEdge]]:
    """Read a JSONL candidate-edge file: one record per line with fields
    ``id`` and ``edges`` = [[src, relation, dst], ...]."""
    sets: dict[str, list[CandidateEdge]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                record_id = str(record["id"])
                edges = [
                    (str(src), str(rel), str(dst)) for src, rel, dst in record["edges"]
                ]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad candidate record: {exc}") from exc
            sets[record_id] = edges
    return sets
