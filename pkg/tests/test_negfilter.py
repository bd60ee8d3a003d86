"""Negative-graph assembly and AE/IP filtering."""

from __future__ import annotations

import json
import random

import pytest

from graphcl.graphs import ARGUMENT, BELIEF, Graph, validate_structure
from graphcl.negfilter import (
    FilterThresholds,
    RejectedError,
    ScoredNegative,
    acceptable_edge_fraction,
    assemble_negative,
    filter_candidates,
    is_acceptable,
    load_candidate_sets,
    score_incorrect_probability,
)
from graphcl.oracle import OracleUnavailable, StanceProbs
from graphcl.synth import random_valid_graph


@pytest.fixture
def correct_graph():
    return Graph.from_triples(
        [("a", "is a", "b"), ("b", "causes", "c"), ("c", "is a", "d")],
        provenance={"a": BELIEF, "b": BELIEF, "c": ARGUMENT, "d": ARGUMENT},
    )


def test_duplicate_of_existing_edge_not_acceptable(correct_graph, relation_set):
    assert not is_acceptable(("a", "is a", "b"), correct_graph, relation_set)


def test_cycle_inducing_candidate_not_acceptable(correct_graph, relation_set):
    assert not is_acceptable(("d", "causes", "a"), correct_graph, relation_set)


def test_out_of_set_relation_not_acceptable(correct_graph, relation_set):
    assert not is_acceptable(("a", "made up rel", "c"), correct_graph, relation_set)


def test_disconnected_new_pair_not_acceptable(correct_graph, relation_set):
    assert not is_acceptable(("new1", "is a", "new2"), correct_graph, relation_set)


def test_new_commonsense_endpoint_acceptable(correct_graph, relation_set):
    assert is_acceptable(("a", "causes", "something new"), correct_graph, relation_set)


def test_self_loop_candidate_not_acceptable(correct_graph, relation_set):
    assert not is_acceptable(("a", "causes", "a"), correct_graph, relation_set)


def test_fraction_half(correct_graph, relation_set):
    candidates = [("a", "causes", "c"), ("d", "causes", "a")]
    assert acceptable_edge_fraction(candidates, correct_graph, relation_set) == 0.5


def test_fraction_empty_candidates(correct_graph, relation_set):
    assert acceptable_edge_fraction([], correct_graph, relation_set) == 0.0


def test_fraction_order_independent(correct_graph, relation_set):
    candidates = [
        ("a", "causes", "c"),
        ("d", "causes", "a"),
        ("b", "is a", "d"),
        ("a", "is a", "b"),
    ]
    base = acceptable_edge_fraction(candidates, correct_graph, relation_set)
    rng = random.Random(0)
    for _ in range(10):
        shuffled = candidates[:]
        rng.shuffle(shuffled)
        assert acceptable_edge_fraction(shuffled, correct_graph, relation_set) == base


def test_assemble_all_acceptable(correct_graph, relation_set):
    candidates = [("a", "causes", "c"), ("b", "is a", "d")]
    out = assemble_negative(correct_graph, candidates, relation_set)
    assert len(out.edges) == len(correct_graph.edges) + 2
    assert validate_structure(out, relation_set).structurally_correct


def test_assemble_all_cycle_inducing(correct_graph, relation_set):
    candidates = [("d", "causes", "a"), ("c", "is a", "a")]
    with pytest.raises(RejectedError):
        assemble_negative(correct_graph, candidates, relation_set)


def test_assemble_greedy_order_dependence(correct_graph, relation_set):
    # hand replay on the 4-node fixture: candidate 1 is inserted, candidate 2
    # duplicates it and is skipped, candidate 3 would close a cycle with the
    # original graph and is skipped, candidate 4 is inserted
    candidates = [
        ("a", "causes", "c"),
        ("a", "causes", "c"),
        ("d", "causes", "a"),
        ("a", "desires", "d"),
    ]
    out = assemble_negative(correct_graph, candidates, relation_set)
    assert len(out.edges) == len(correct_graph.edges) + 2
    triples = set(out.triples())
    assert ("a", "causes", "c") in triples and ("a", "desires", "d") in triples


def test_assemble_cumulative_check_differs_from_independent_ae(relation_set):
    # b and c are incomparable in the diamond, so each direction is acceptable
    # alone, but together they close a 2-cycle: AE counts both, assembly
    # inserts only the first
    g = Graph.from_triples(
        [("a", "is a", "b"), ("a", "is a", "c"), ("b", "causes", "d"), ("c", "causes", "d")],
        provenance={"a": BELIEF, "b": BELIEF, "c": ARGUMENT, "d": ARGUMENT},
    )
    candidates = [("b", "desires", "c"), ("c", "desires", "b")]
    assert acceptable_edge_fraction(candidates, g, relation_set) == 1.0
    out = assemble_negative(g, candidates, relation_set)
    assert len(out.edges) == len(g.edges) + 1


def test_assemble_output_always_validates(relation_set):
    rng = random.Random(77)
    for _ in range(50):
        g = random_valid_graph(rng, relation_set)
        labels = list(g.labels())
        candidates = []
        for _ in range(6):
            src = rng.choice(labels)
            dst = rng.choice(labels + ["brand new idea"])
            candidates.append((src, rng.choice(relation_set.relations), dst))
        try:
            out = assemble_negative(g, candidates, relation_set)
        except RejectedError:
            continue
        assert validate_structure(out, relation_set).structurally_correct


# --- filtering ----------------------------------------------------------------


def _scored(ae: float, ip=None) -> ScoredNegative:
    return ScoredNegative(Graph.from_triples([("x", "r", "y")]), ae, ip)


def test_ae_just_below_threshold_dropped():
    kept = filter_candidates([_scored(0.39)], FilterThresholds(ae_min=0.4), "ae")
    assert kept == []


def test_ip_boundary_inclusive():
    kept = filter_candidates(
        [_scored(0.0, ip=0.5)], FilterThresholds(ip_min=0.5), "ip"
    )
    assert len(kept) == 1


def test_ae_strategy_ignores_ip():
    kept = filter_candidates([_scored(1.0, ip=0.0)], FilterThresholds(), "ae")
    assert len(kept) == 1


def test_both_strategy_requires_both():
    thresholds = FilterThresholds(ae_min=0.4, ip_min=0.5)
    assert filter_candidates([_scored(0.5, ip=0.6)], thresholds, "both")
    assert not filter_candidates([_scored(0.5, ip=0.4)], thresholds, "both")
    assert not filter_candidates([_scored(0.3, ip=0.6)], thresholds, "both")


def test_ip_strategy_without_scores_raises():
    with pytest.raises(OracleUnavailable):
        filter_candidates([_scored(0.5, ip=None)], FilterThresholds(), "ip")


def test_unknown_strategy():
    with pytest.raises(ValueError):
        filter_candidates([], FilterThresholds(), "???")


def test_filtering_monotone_in_thresholds():
    rng = random.Random(5)
    pool = [_scored(rng.random(), ip=rng.random()) for _ in range(60)]
    for strategy in ("ae", "ip", "both"):
        previous = None
        for threshold in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
            kept = {
                id(item)
                for item in filter_candidates(
                    pool,
                    FilterThresholds(ae_min=threshold, ip_min=threshold),
                    strategy,
                )
            }
            if previous is not None:
                assert kept <= previous
            previous = kept


def test_score_incorrect_probability():
    def oracle(belief, graph):
        return StanceProbs(0.2, 0.1, 0.7)

    g = Graph.from_triples([("x", "r", "y")])
    assert score_incorrect_probability(g, "belief", oracle) == pytest.approx(0.7)


def test_thresholds_validated():
    with pytest.raises(ValueError):
        FilterThresholds(ae_min=1.4)


def test_load_candidate_sets(tmp_path):
    path = tmp_path / "candidates.jsonl"
    rows = [
        {"id": "1", "edges": [["a", "is a", "b"], ["b", "causes", "c"]]},
        {"id": "2", "edges": []},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    sets = load_candidate_sets(str(path))
    assert sets["1"] == [("a", "is a", "b"), ("b", "causes", "c")]
    assert sets["2"] == []


def test_load_candidate_sets_bad_record(tmp_path):
    path = tmp_path / "candidates.jsonl"
    path.write_text('{"edges": [["a","b"]]}\n', encoding="utf-8")
    with pytest.raises(ValueError):
        load_candidate_sets(str(path))
