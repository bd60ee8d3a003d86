"""Seeded random graph generation for tests, demos, and the acceptance corpus.

All generators take an explicit :class:`random.Random` so that identical
seeds produce identical graphs.
"""

from __future__ import annotations

import random
from typing import Optional

from .graphs import (
    ARGUMENT,
    BELIEF,
    COMMONSENSE,
    Graph,
    RelationSet,
    temporal_relation_set,
)


def _connected_dag_triples(
    rng: random.Random,
    labels: list[str],
    relations: tuple[str, ...],
    extra_edge_prob: float,
) -> list[tuple[str, str, str]]:
    """Random connected DAG over ``labels``: a spanning tree directed along a
    random topological order, plus optional forward edges."""
    order = labels[:]
    rng.shuffle(order)
    triples: list[tuple[str, str, str]] = []
    seen: set[tuple[str, str, str]] = set()
    for i in range(1, len(order)):
        src = order[rng.randrange(i)]
        triple = (src, rng.choice(relations), order[i])
        triples.append(triple)
        seen.add(triple)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if rng.random() < extra_edge_prob:
                triple = (order[i], rng.choice(relations), order[j])
                if triple not in seen and (order[i], order[j]) not in {
                    (s, d) for s, _, d in seen
                }:
                    triples.append(triple)
                    seen.add(triple)
    return triples


def random_valid_graph(
    rng: random.Random,
    relation_set: RelationSet,
    min_nodes: int = 4,
    max_nodes: int = 8,
    extra_edge_prob: float = 0.25,
) -> Graph:
    """A structurally correct graph: connected DAG, in-set relations, two or
    more belief and argument nodes, and sometimes commonsense nodes.

    Provenance is assigned directly, not derived from text.
    """
    if min_nodes < 4:
        raise ValueError("a valid graph needs at least 4 nodes")
    n = rng.randint(min_nodes, max_nodes)
    n_belief = rng.randint(2, max(2, n - 2 - 1)) if n > 5 else 2
    n_belief = min(n_belief, n - 2)
    n_argument = rng.randint(2, max(2, n - n_belief))
    n_argument = min(n_argument, n - n_belief)
    n_common = n - n_belief - n_argument

    labels: list[str] = []
    provenance: dict[str, str] = {}
    for i in range(n_belief):
        label = f"belief concept {i}"
        labels.append(label)
        provenance[label] = BELIEF
    for i in range(n_argument):
        label = f"argument concept {i}"
        labels.append(label)
        provenance[label] = ARGUMENT
    for i in range(n_common):
        label = f"shared notion {i}"
        labels.append(label)
        provenance[label] = COMMONSENSE

    triples = _connected_dag_triples(rng, labels, relation_set.relations, extra_edge_prob)
    return Graph.from_parts(labels, triples, provenance)


def random_temporal_graph(
    rng: random.Random,
    min_nodes: int = 3,
    max_nodes: int = 8,
    extra_edge_prob: float = 0.2,
    relation_set: Optional[RelationSet] = None,
) -> Graph:
    """A connected DAG of event nodes with temporal relation edges."""
    relations = (relation_set or temporal_relation_set()).relations
    n = rng.randint(min_nodes, max_nodes)
    labels = [f"event {i}" for i in range(n)]
    triples = _connected_dag_triples(rng, labels, relations, extra_edge_prob)
    provenance = {label: COMMONSENSE for label in labels}
    return Graph.from_parts(labels, triples, provenance)


def belief_argument_texts(graph: Graph) -> tuple[str, str]:
    """Belief and argument sentences that contain exactly the graph's tagged
    concepts, for use with provenance tagging."""
    beliefs = [n.label for n in graph.nodes if n.provenance == BELIEF]
    arguments = [n.label for n in graph.nodes if n.provenance == ARGUMENT]
    belief = "the " + " and ".join(beliefs) if beliefs else "nothing here"
    argument = "because " + " while ".join(arguments) if arguments else "no reason"
    return belief, argument
