"""Graph evaluation metrics.

* structural accuracy: fraction of graphs passing all four constraints
* semantic accuracy: structural pass plus stance-oracle agreement
* graph edit distance: exact branch-and-bound over node mappings, normalized
* graph score F1: max-weight bipartite matching of edge sentences under a
  pluggable similarity
* edge accuracy: fraction of edges whose removal drops the oracle's
  confidence in the gold stance
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graphs import Graph, ValidationReport, normalize_label
from .oracle import EdgeSimilarity, StanceOracle

DEFAULT_SIZE_CAP = 8


class SizeCapExceeded(ValueError):
    """A graph is larger than the exact GED solver's configured cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(
            f"graph with {size} nodes exceeds the exact GED cap of {cap}; "
            "raise the cap explicitly (cost grows exponentially)"
        )
        self.size = size
        self.cap = cap


def edge_sentence(graph: Graph, edge_index: int) -> str:
    edge = graph.edges[edge_index]
    return f"{graph.label_of(edge.src)} {edge.relation} {graph.label_of(edge.dst)}"


def exact_match_similarity(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


def token_f1_similarity(a: str, b: str) -> float:
    """Unigram-overlap F1 on lowercased whitespace tokens."""
    tokens_a = Counter(a.lower().split())
    tokens_b = Counter(b.lower().split())
    if not tokens_a and not tokens_b:
        return 1.0
    common = sum((tokens_a & tokens_b).values())
    if common == 0:
        return 0.0
    precision = common / sum(tokens_a.values())
    recall = common / sum(tokens_b.values())
    return 2 * precision * recall / (precision + recall)


def _adjacency_counts(graph: Graph) -> dict[tuple[int, int], Counter]:
    adjacency: dict[tuple[int, int], Counter] = {}
    for edge in graph.edges:
        adjacency.setdefault((edge.src, edge.dst), Counter())[edge.relation] += 1
    return adjacency


_EMPTY: Counter = Counter()


def _multiset_cost(c1: Counter, c2: Counter) -> int:
    """Edit cost between two relation multisets on the same node pair:
    matched relations are free, substitutions cost 1, the count difference
    is paid as additions/deletions."""
    n1 = sum(c1.values())
    n2 = sum(c2.values())
    if not n1:
        return n2
    if not n2:
        return n1
    common = sum((c1 & c2).values())
    return max(n1, n2) - common


def edit_distance_raw(g1: Graph, g2: Graph, size_cap: int = DEFAULT_SIZE_CAP) -> int:
    """Exact minimum edit count (unit-cost node/edge addition, deletion,
    relabeling) over all node mappings, by branch-and-bound.

    Raises :class:`SizeCapExceeded` when either graph has more nodes than
    ``size_cap``.
    """
    n1, n2 = len(g1.nodes), len(g2.nodes)
    if max(n1, n2) > size_cap:
        raise SizeCapExceeded(max(n1, n2), size_cap)

    labels1 = [normalize_label(node.label) for node in g1.nodes]
    labels2 = [normalize_label(node.label) for node in g2.nodes]
    adj1 = _adjacency_counts(g1)
    adj2 = _adjacency_counts(g2)
    e1_total, e2_total = len(g1.edges), len(g2.edges)

    degree = Counter()
    for edge in g1.edges:
        degree[edge.src] += 1
        degree[edge.dst] += 1
    order = sorted(range(n1), key=lambda u: (-degree[u], u))

    # g1 edges fully inside the assigned prefix, per depth
    e1_charged = [0] * (n1 + 1)
    prefix: set[int] = set()
    for depth, u in enumerate(order):
        prefix.add(u)
        e1_charged[depth + 1] = sum(
            1 for e in g1.edges if e.src in prefix and e.dst in prefix
        )

    best = n1 + e1_total + n2 + e2_total  # delete everything, insert everything
    mapping: dict[int, Optional[int]] = {}
    used2 = [False] * n2

    def step_cost(u: int, w: Optional[int]) -> tuple[int, int]:
        """Incremental cost of assigning u -> w, plus newly charged g2 edges."""
        cost = 0 if (w is not None and labels1[u] == labels2[w]) else 1
        charged2 = 0
        for v, x in mapping.items():
            c1f = adj1.get((u, v), _EMPTY)
            c1b = adj1.get((v, u), _EMPTY)
            if w is not None and x is not None:
                c2f = adj2.get((w, x), _EMPTY)
                c2b = adj2.get((x, w), _EMPTY)
                charged2 += sum(c2f.values()) + sum(c2b.values())
            else:
                c2f = c2b = _EMPTY
            if c1f or c2f:
                cost += _multiset_cost(c1f, c2f)
            if c1b or c2b:
                cost += _multiset_cost(c1b, c2b)
        return cost, charged2

    def recurse(depth: int, cost: int, used_count: int, covered2: int) -> None:
        nonlocal best
        if cost >= best:
            return
        if depth == n1:
            total = cost + (n2 - used_count) + (e2_total - covered2)
            if total < best:
                best = total
            return
        u = order[depth]
        candidates: list[tuple[int, Optional[int], int]] = []
        for w in range(n2):
            if used2[w]:
                continue
            inc, charged2 = step_cost(u, w)
            candidates.append((inc, w, charged2))
        inc_delete, _ = step_cost(u, None)
        candidates.append((inc_delete, None, 0))
        candidates.sort(key=lambda item: (item[0], -1 if item[1] is None else item[1]))

        for inc, w, charged2 in candidates:
            new_cost = cost + inc
            new_used = used_count + (0 if w is None else 1)
            new_covered = covered2 + charged2
            remaining1 = n1 - depth - 1
            remaining2 = n2 - new_used
            bound = abs(remaining1 - remaining2) + abs(
                (e1_total - e1_charged[depth + 1]) - (e2_total - new_covered)
            )
            if new_cost + bound >= best:
                continue
            mapping[u] = w
            if w is not None:
                used2[w] = True
            recurse(depth + 1, new_cost, new_used, new_covered)
            del mapping[u]
            if w is not None:
                used2[w] = False

    recurse(0, 0, 0, 0)
    return best


def default_ged_normalizer(g1: Graph, g2: Graph) -> float:
    return float(len(g1.nodes) + len(g1.edges) + len(g2.nodes) + len(g2.edges))


def graph_edit_distance(
    g1: Graph,
    g2: Graph,
    size_cap: int = DEFAULT_SIZE_CAP,
    normalizer: Callable[[Graph, Graph], float] = default_ged_normalizer,
) -> float:
    """Normalized exact GED in [0, 1].

    The default normalizer |V1|+|E1|+|V2|+|E2| is an upper bound on the raw
    edit count, so the score needs no clamping in practice; it is clamped
    anyway to keep the contract under custom normalizers.
    """
    raw = edit_distance_raw(g1, g2, size_cap=size_cap)
    constant = normalizer(g1, g2)
    if constant <= 0:
        return 0.0
    return min(1.0, raw / constant)


def graph_bertscore(
    pred: Graph, gold: Graph, sim: EdgeSimilarity = token_f1_similarity
) -> float:
    """F1 of the best edge-to-edge matching under ``sim``.

    Edges are rendered as "src relation dst" sentences; the optimal
    assignment maximizes total pairwise similarity. Precision divides by the
    predicted edge count, recall by the gold edge count. Both empty gives
    1.0, exactly one empty gives 0.0.
    """
    pred_sentences = [edge_sentence(pred, i) for i in range(len(pred.edges))]
    gold_sentences = [edge_sentence(gold, i) for i in range(len(gold.edges))]
    if not pred_sentences and not gold_sentences:
        return 1.0
    if not pred_sentences or not gold_sentences:
        return 0.0
    matrix = np.array(
        [[sim(p, g) for g in gold_sentences] for p in pred_sentences], dtype=float
    )
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    matched = float(matrix[rows, cols].sum())
    precision = matched / len(pred_sentences)
    recall = matched / len(gold_sentences)
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def structural_accuracy(reports: Sequence[ValidationReport]) -> float:
    """Fraction of reports with every constraint satisfied."""
    if not reports:
        raise ValueError("no reports to aggregate")
    return sum(1 for r in reports if r.structurally_correct) / len(reports)


def semantic_accuracy(
    items: Sequence[tuple[str, Graph, str, ValidationReport]],
    oracle: StanceOracle,
) -> float:
    """Fraction of graphs that are structurally correct and whose oracle
    stance matches the gold stance.

    Structurally incorrect graphs count 0 without an oracle call.
    """
    if not items:
        raise ValueError("no items to aggregate")
    hits = 0
    for belief, graph, gold_stance, report in items:
        if not report.structurally_correct:
            continue
        if oracle(belief, graph).top() == gold_stance:
            hits += 1
    return hits / len(items)


def edge_accuracy(
    graph: Graph, belief: str, gold_stance: str, oracle: StanceOracle
) -> float:
    """Fraction of edges whose removal lowers the oracle's confidence in the
    gold stance. Graphs without edges score 0."""
    if not graph.edges:
        return 0.0
    baseline = oracle(belief, graph).prob(gold_stance)
    important = 0
    for i in range(len(graph.edges)):
        reduced = Graph(
            graph.nodes, tuple(e for j, e in enumerate(graph.edges) if j != i)
        )
        if oracle(belief, reduced).prob(gold_stance) < baseline:
            important += 1
    return important / len(graph.edges)


@dataclass(frozen=True)
class MetricReport:
    """Aggregated evaluation rates; optional entries need a stance oracle."""

    stca: float
    g_bs: float
    ged: float
    seca: Optional[float] = None
    ea: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("stca", "g_bs", "ged", "seca", "ea"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "stca": self.stca,
            "g_bs": self.g_bs,
            "ged": self.ged,
            "seca": self.seca,
            "ea": self.ea,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(
            stca=data["stca"],
            g_bs=data["g_bs"],
            ged=data["ged"],
            seca=data.get("seca"),
            ea=data.get("ea"),
        )
