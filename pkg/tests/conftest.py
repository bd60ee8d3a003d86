"""Shared fixtures: relation sets, hand-built graphs, random generators."""

from __future__ import annotations

import random

import pytest

from graphcl.graphs import (
    ARGUMENT,
    BELIEF,
    COMMONSENSE,
    Graph,
    RelationSet,
)

RELATIONS = ("is a", "causes", "capable of", "part of", "desires", "not desires")


@pytest.fixture
def relation_set() -> RelationSet:
    return RelationSet.of(*RELATIONS)


@pytest.fixture
def valid_graph() -> Graph:
    """Chain with 2 belief, 2 argument, and 1 commonsense node."""
    return Graph.from_triples(
        [
            ("fast food", "is a", "unhealthy"),
            ("unhealthy", "causes", "obesity"),
            ("obesity", "causes", "illness"),
            ("illness", "causes", "loss of jobs"),
        ],
        provenance={
            "fast food": BELIEF,
            "unhealthy": BELIEF,
            "obesity": ARGUMENT,
            "illness": ARGUMENT,
            "loss of jobs": COMMONSENSE,
        },
    )


def random_messy_graph(rng: random.Random, max_nodes: int = 6) -> Graph:
    """Arbitrary well-formed graph: may be disconnected, cyclic, mistagged,
    or use out-of-set relations. For validator-oracle comparisons."""
    n = rng.randint(1, max_nodes)
    labels = [f"n{i}" for i in range(n)]
    provenance = {
        label: rng.choice([BELIEF, ARGUMENT, COMMONSENSE]) for label in labels
    }
    pool = [(i, j) for i in range(n) for j in range(n) if i != j]
    rng.shuffle(pool)
    edge_count = rng.randint(0, min(len(pool), 2 * n))
    relations = RELATIONS + ("bogus relation",)
    triples = [
        (labels[i], rng.choice(relations), labels[j]) for i, j in pool[:edge_count]
    ]
    return Graph.from_parts(labels, triples, provenance)
