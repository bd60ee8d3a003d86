"""Metrics: exact GED vs a permutation brute-force oracle, edge-matching F1
vs exhaustive matching enumeration, accuracies with scripted oracles."""

from __future__ import annotations

import itertools
import random
from collections import Counter

import pytest

from graphcl.graphs import Graph, ValidationReport, normalize_label
from graphcl.metrics import (
    MetricReport,
    SizeCapExceeded,
    edge_accuracy,
    edge_sentence,
    edit_distance_raw,
    exact_match_similarity,
    graph_bertscore,
    graph_edit_distance,
    semantic_accuracy,
    structural_accuracy,
    token_f1_similarity,
)
from graphcl.oracle import StanceProbs

from conftest import random_messy_graph


# --- brute-force GED oracle ---------------------------------------------------
# Exhaustively enumerates every injective partial node mapping and prices the
# induced edit script from scratch. Independent of the branch-and-bound path.


def _edge_multisets(graph: Graph) -> dict[tuple[int, int], Counter]:
    out: dict[tuple[int, int], Counter] = {}
    for e in graph.edges:
        out.setdefault((e.src, e.dst), Counter())[e.relation] += 1
    return out


def _mapping_cost(g1: Graph, g2: Graph, mapping: dict[int, int]) -> int:
    labels1 = [normalize_label(n.label) for n in g1.nodes]
    labels2 = [normalize_label(n.label) for n in g2.nodes]
    cost = 0
    for u in range(len(g1.nodes)):
        if u in mapping:
            cost += 0 if labels1[u] == labels2[mapping[u]] else 1
        else:
            cost += 1  # delete
    matched2 = set(mapping.values())
    cost += len(g2.nodes) - len(matched2)  # insertions

    edges1 = _edge_multisets(g1)
    edges2 = _edge_multisets(g2)
    for (u, v), relations in edges1.items():
        if u in mapping and v in mapping:
            other = edges2.get((mapping[u], mapping[v]), Counter())
            overlap = sum((relations & other).values())
            cost += max(sum(relations.values()), sum(other.values())) - overlap
        else:
            cost += sum(relations.values())  # edges lost with deleted endpoints
    inverse = {x: u for u, x in mapping.items()}
    for (x, y), relations in edges2.items():
        if x in inverse and y in inverse and (inverse[x], inverse[y]) in edges1:
            continue  # already compared through the mapping
        cost += sum(relations.values())  # pure insertions
    return cost


def oracle_ged(g1: Graph, g2: Graph) -> int:
    n1, n2 = len(g1.nodes), len(g2.nodes)
    best = None
    for k in range(0, min(n1, n2) + 1):
        for subset in itertools.combinations(range(n1), k):
            for image in itertools.permutations(range(n2), k):
                cost = _mapping_cost(g1, g2, dict(zip(subset, image)))
                if best is None or cost < best:
                    best = cost
    return best if best is not None else 0


def _hand_graphs():
    g_pair = Graph.from_triples([("a", "r", "b")])
    g_pair_relabel = Graph.from_triples([("a", "q", "b")])
    return g_pair, g_pair_relabel


def test_oracle_prices_unmatched_gold_edges():
    g1 = Graph.from_parts(["a", "b"], [])
    g2 = Graph.from_triples([("a", "r", "b")])
    # identical labels, one edge insertion
    assert oracle_ged(g1, g2) == 1


def test_ged_identity(valid_graph):
    assert edit_distance_raw(valid_graph, valid_graph) == 0
    assert graph_edit_distance(valid_graph, valid_graph) == 0.0


def test_ged_single_relabel_is_one_sixth():
    g1, g2 = _hand_graphs()
    assert edit_distance_raw(g1, g2) == 1
    assert oracle_ged(g1, g2) == 1
    assert graph_edit_distance(g1, g2) == pytest.approx(1 / 6)


def test_ged_against_empty_graph():
    g = Graph.from_triples([("a", "r", "b"), ("b", "q", "c")])
    raw = edit_distance_raw(g, Graph())
    assert raw == len(g.nodes) + len(g.edges)
    assert graph_edit_distance(g, Graph()) == 1.0
    assert graph_edit_distance(Graph(), Graph()) == 0.0


def test_ged_size_cap():
    labels = [f"n{i}" for i in range(9)]
    g = Graph.from_parts(labels, [])
    with pytest.raises(SizeCapExceeded):
        edit_distance_raw(g, Graph())
    assert edit_distance_raw(g, Graph(), size_cap=9) == 9


def test_ged_matches_oracle_on_random_graphs():
    rng = random.Random(2025)
    graphs = [random_messy_graph(rng, max_nodes=4) for _ in range(25)]
    for g1, g2 in itertools.combinations(graphs, 2):
        assert edit_distance_raw(g1, g2) == oracle_ged(g1, g2)


def test_ged_symmetry_and_triangle_on_raw():
    rng = random.Random(31)
    graphs = [random_messy_graph(rng, max_nodes=4) for _ in range(12)]
    raw = {}
    for i, j in itertools.combinations(range(len(graphs)), 2):
        raw[(i, j)] = edit_distance_raw(graphs[i], graphs[j])
        assert raw[(i, j)] == edit_distance_raw(graphs[j], graphs[i])

    def d(i: int, j: int) -> int:
        if i == j:
            return 0
        return raw[(min(i, j), max(i, j))]

    for i, j, k in itertools.permutations(range(len(graphs)), 3):
        assert d(i, k) <= d(i, j) + d(j, k)


def test_ged_zero_iff_same_labeled_graph():
    g1 = Graph.from_triples([("a", "r", "b"), ("b", "q", "c")])
    g2 = Graph.from_triples([("b", "q", "c"), ("a", "r", "b")])  # renumbered
    assert edit_distance_raw(g1, g2) == 0
    g3 = Graph.from_triples([("a", "r", "b"), ("b", "q", "d")])
    assert edit_distance_raw(g1, g3) > 0


# --- graph_bertscore ----------------------------------------------------------


def test_gbs_identical_graphs_exact_match(valid_graph):
    assert graph_bertscore(valid_graph, valid_graph, exact_match_similarity) == 1.0


def test_gbs_disjoint_edge_sets():
    g1 = Graph.from_triples([("a", "r", "b")])
    g2 = Graph.from_triples([("x", "q", "y")])
    assert graph_bertscore(g1, g2, exact_match_similarity) == 0.0


def test_gbs_empty_cases():
    g = Graph.from_triples([("a", "r", "b")])
    assert graph_bertscore(Graph(), Graph(), exact_match_similarity) == 1.0
    assert graph_bertscore(Graph(), g, exact_match_similarity) == 0.0
    assert graph_bertscore(g, Graph(), exact_match_similarity) == 0.0


def test_gbs_hand_matrix_matches_matching_enumeration():
    pred = Graph.from_triples([("p1", "r", "p2"), ("p3", "r", "p4")])
    gold = Graph.from_triples([("g1", "r", "g2"), ("g3", "r", "g4"), ("g5", "r", "g6")])
    matrix = {
        ("p1 r p2", "g1 r g2"): 0.9,
        ("p1 r p2", "g3 r g4"): 0.2,
        ("p1 r p2", "g5 r g6"): 0.1,
        ("p3 r p4", "g1 r g2"): 0.3,
        ("p3 r p4", "g3 r g4"): 0.8,
        ("p3 r p4", "g5 r g6"): 0.4,
    }

    def sim(a: str, b: str) -> float:
        return matrix[(a, b)]

    # oracle: enumerate all injective matchings of the 2 pred edges into 3 gold
    pred_sentences = [edge_sentence(pred, i) for i in range(2)]
    gold_sentences = [edge_sentence(gold, i) for i in range(3)]
    best = max(
        sum(sim(p, g) for p, g in zip(pred_sentences, image))
        for image in itertools.permutations(gold_sentences, 2)
    )
    assert best == pytest.approx(1.7)
    precision = best / 2
    recall = best / 3
    expected_f1 = 2 * precision * recall / (precision + recall)
    assert expected_f1 == pytest.approx(0.68)

    assert graph_bertscore(pred, gold, sim) == pytest.approx(expected_f1)


def test_gbs_symmetric_sim_preserves_f1():
    rng = random.Random(11)
    for _ in range(50):
        g1 = random_messy_graph(rng, max_nodes=5)
        g2 = random_messy_graph(rng, max_nodes=5)
        assert graph_bertscore(g1, g2, token_f1_similarity) == pytest.approx(
            graph_bertscore(g2, g1, token_f1_similarity)
        )


def test_token_f1_properties():
    assert token_f1_similarity("a b c", "a b c") == 1.0
    assert token_f1_similarity("a b", "c d") == 0.0
    # 1 shared token of 2 and 2: P = R = 0.5
    assert token_f1_similarity("a b", "a c") == pytest.approx(0.5)
    assert token_f1_similarity("x y", "y x z") == pytest.approx(
        token_f1_similarity("y x z", "x y")
    )


# --- accuracies ------------------------------------------------------------------


def _report(ok: bool) -> ValidationReport:
    return ValidationReport(ok, True, True, ok)


def test_structural_accuracy_all_valid():
    assert structural_accuracy([_report(True)] * 5) == 1.0
    assert structural_accuracy([_report(True), _report(False)]) == 0.5
    with pytest.raises(ValueError):
        structural_accuracy([])


def _const_oracle(support: float, counter: float, incorrect: float):
    def oracle(belief: str, graph: Graph) -> StanceProbs:
        return StanceProbs(support, counter, incorrect)

    return oracle


def test_semantic_accuracy_skips_invalid_graphs():
    g = Graph.from_triples([("a", "r", "b")])
    calls = []

    def oracle(belief, graph):
        calls.append(belief)
        return StanceProbs(1.0, 0.0, 0.0)

    items = [
        ("b1", g, "support", _report(False)),
        ("b2", g, "support", _report(True)),
    ]
    assert semantic_accuracy(items, oracle) == 0.5
    assert calls == ["b2"]  # invalid graph never reaches the oracle


def test_semantic_accuracy_incorrect_class_counts_zero():
    g = Graph.from_triples([("a", "r", "b")])
    items = [("b", g, "support", _report(True))]
    assert semantic_accuracy(items, _const_oracle(0.1, 0.1, 0.8)) == 0.0


def test_semantic_accuracy_stance_mismatch_counts_zero():
    g = Graph.from_triples([("a", "r", "b")])
    items = [("b", g, "counter", _report(True))]
    assert semantic_accuracy(items, _const_oracle(0.9, 0.05, 0.05)) == 0.0


def test_edge_accuracy_constant_oracle_is_zero(valid_graph):
    assert edge_accuracy(valid_graph, "b", "support", _const_oracle(0.6, 0.3, 0.1)) == 0.0


def test_edge_accuracy_single_edge_drop():
    g = Graph.from_triples([("a", "r", "b")])

    def oracle(belief, graph):
        return StanceProbs(0.9, 0.05, 0.05) if graph.edges else StanceProbs(0.2, 0.4, 0.4)

    assert edge_accuracy(g, "b", "support", oracle) == 1.0


def test_edge_accuracy_two_of_three():
    g = Graph.from_triples([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "d")])
    # dropping edge 0 or 1 lowers support; dropping edge 2 does not
    def oracle(belief, graph):
        triples = set(graph.triples())
        if len(triples) == 3:
            return StanceProbs(0.7, 0.2, 0.1)
        if ("a", "r", "b") not in triples or ("b", "r", "c") not in triples:
            return StanceProbs(0.4, 0.3, 0.3)
        return StanceProbs(0.7, 0.2, 0.1)

    assert edge_accuracy(g, "b", "support", oracle) == pytest.approx(2 / 3)


def test_edge_accuracy_empty_graph():
    assert edge_accuracy(Graph(), "b", "support", _const_oracle(1.0, 0.0, 0.0)) == 0.0


# --- MetricReport ------------------------------------------------------------------


def test_metric_report_bounds():
    with pytest.raises(ValueError):
        MetricReport(stca=1.2, g_bs=0.5, ged=0.5)
    with pytest.raises(ValueError):
        MetricReport(stca=0.5, g_bs=0.5, ged=0.5, ea=-0.1)


def test_metric_report_round_trip():
    report = MetricReport(stca=0.5, g_bs=0.25, ged=0.75, seca=None, ea=0.1)
    assert MetricReport.from_dict(report.as_dict()) == report
