"""Graph perturbation generators.

Positive perturbations rewrite one commonsense node with embedding-ranked
synonyms. Structural negatives break exactly the advertised constraint:
``disconnect`` removes a bridge, ``make-cyclic`` closes a directed cycle,
``disconnect-and-cyclic`` does both, ``node-removal`` drops the provenance
constraint below threshold. ``relation-swap`` rewrites relations only.
Temporal rewrites flip edges meaning-preservingly (positive) or corrupt
relations in place (negative).

Every generator is deterministic: identical (graph, kind, seed) inputs give
identical outputs.
"""

from __future__ import annotations

import random
from enum import Enum
from typing import Optional, Sequence

from .graphs import (
    ARGUMENT,
    BELIEF,
    COMMONSENSE,
    Edge,
    Graph,
    GraphInvariantError,
    RelationSet,
    _acyclic_directed,
    _connected_undirected,
    temporal_relation_set,
)
from .lexicon import EmbeddingTable, Lexicon, best_synonym

TEMPORAL_EXCHANGEABLE = ("before", "after", "simultaneous")


class PerturbationKind(str, Enum):
    POSITIVE = "positive"
    DISCONNECT = "disconnect"
    MAKE_CYCLIC = "make-cyclic"
    DISCONNECT_AND_CYCLIC = "disconnect-and-cyclic"
    NODE_REMOVAL = "node-removal"
    RELATION_SWAP = "relation-swap"
    TEMPORAL_POSITIVE = "temporal-positive"
    TEMPORAL_NEGATIVE = "temporal-negative"

    @property
    def is_positive(self) -> bool:
        return self in (PerturbationKind.POSITIVE, PerturbationKind.TEMPORAL_POSITIVE)


STRUCTURAL_KINDS = (
    PerturbationKind.DISCONNECT,
    PerturbationKind.MAKE_CYCLIC,
    PerturbationKind.DISCONNECT_AND_CYCLIC,
    PerturbationKind.NODE_REMOVAL,
)


class InapplicableError(ValueError):
    """The requested perturbation has no valid application to this graph."""


def _rebuild(
    graph: Graph,
    labels: Sequence[str],
    triples: Sequence[tuple[str, str, str]],
    provenance_override: Optional[dict[str, str]] = None,
) -> Graph:
    provenance = {
        label: tag for label, tag in graph.provenance_map().items() if tag is not None
    }
    if provenance_override:
        provenance.update(provenance_override)
    return Graph.from_parts(labels, triples, provenance)


def _bridge_indices(graph: Graph) -> list[int]:
    """Indices of edges whose removal disconnects the undirected view."""
    n = len(graph.nodes)
    bridges = []
    for i in range(len(graph.edges)):
        rest = [e for j, e in enumerate(graph.edges) if j != i]
        if not _connected_undirected(n, rest):
            bridges.append(i)
    return bridges


def _reach_pairs(n: int, edges: Sequence[Edge]) -> list[tuple[int, int]]:
    """All (u, v) with a directed path of length >= 1 from u to v, u != v."""
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for edge in edges:
        adjacency[edge.src].append(edge.dst)
    pairs: list[tuple[int, int]] = []
    for u in range(n):
        seen: set[int] = set()
        stack = [u]
        while stack:
            x = stack.pop()
            for y in adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        pairs.extend((u, v) for v in sorted(seen) if v != u)
    return pairs


def _cycle_edge_options(
    graph_triples: frozenset[tuple[int, str, int]],
    pairs: Sequence[tuple[int, int]],
    relations: tuple[str, ...],
) -> list[tuple[int, int, tuple[str, ...]]]:
    """For each reachable (u, v) pair, relations r such that (v, r, u) can be
    added without duplicating an existing edge."""
    options = []
    for u, v in pairs:
        usable = tuple(r for r in relations if (v, r, u) not in graph_triples)
        if usable:
            options.append((u, v, usable))
    return options


def perturb_positive(
    graph: Graph,
    belief: str,
    argument: str,
    lexicon: Lexicon,
    embeddings: EmbeddingTable,
    seed: int,
) -> Optional[Graph]:
    """Rewrite one random commonsense node with its best synonyms.

    Every word of the chosen node's label that has a lexicon entry is
    replaced by :func:`best_synonym`. Structure is untouched, so a valid
    input stays valid. Returns None when the graph has no commonsense node,
    no word of the chosen node can be replaced, or the rewritten label would
    collide with an existing node.
    """
    if any(node.provenance is None for node in graph.nodes):
        from .graphs import tag_provenance

        graph = tag_provenance(graph, belief, argument)
    rng = random.Random(seed)
    commonsense = [node for node in graph.nodes if node.provenance == COMMONSENSE]
    if not commonsense:
        return None
    target = rng.choice(commonsense)
    words = target.label.split()
    rewritten: list[str] = []
    changed = False
    for word in words:
        synonym = None
        for pos in lexicon.tags_for(word):
            synonym = best_synonym(word, pos, lexicon, embeddings)
            if synonym is not None:
                break
        if synonym is None:
            rewritten.append(word)
        else:
            rewritten.append(synonym)
            changed = True
    if not changed:
        return None
    new_label = " ".join(rewritten)
    if graph.find(new_label) is not None:
        return None
    labels = [new_label if n.id == target.id else n.label for n in graph.nodes]
    triples = [
        (
            new_label if s == target.label else s,
            r,
            new_label if d == target.label else d,
        )
        for s, r, d in graph.triples()
    ]
    return _rebuild(graph, labels, triples, {new_label: COMMONSENSE})


def perturb_structural(
    graph: Graph,
    kind: PerturbationKind,
    seed: int,
    relation_set: RelationSet,
) -> Optional[Graph]:
    """Apply one of the four structure-breaking perturbations.

    Returns None when the kind is inapplicable: no bridge to cut, fewer than
    2 nodes (or no reachable pair) to close a cycle on, or no single node
    whose removal drops the belief/argument count below two.
    """
    if kind not in STRUCTURAL_KINDS:
        raise ValueError(f"not a structural kind: {kind}")
    rng = random.Random(seed)
    n = len(graph.nodes)
    triple_ids = frozenset((e.src, e.relation, e.dst) for e in graph.edges)

    if kind == PerturbationKind.DISCONNECT:
        bridges = _bridge_indices(graph)
        if not bridges:
            return None
        drop = rng.choice(bridges)
        triples = [t for i, t in enumerate(graph.triples()) if i != drop]
        return _rebuild(graph, graph.labels(), triples)

    if kind == PerturbationKind.MAKE_CYCLIC:
        if n < 2:
            return None
        options = _cycle_edge_options(
            triple_ids, _reach_pairs(n, graph.edges), relation_set.relations
        )
        if not options:
            return None
        u, v, usable = rng.choice(options)
        relation = rng.choice(usable)
        triples = list(graph.triples()) + [
            (graph.label_of(v), relation, graph.label_of(u))
        ]
        return _rebuild(graph, graph.labels(), triples)

    if kind == PerturbationKind.DISCONNECT_AND_CYCLIC:
        bridges = _bridge_indices(graph)
        if not bridges:
            return None
        rng.shuffle(bridges)
        for drop in bridges:
            remaining = [e for i, e in enumerate(graph.edges) if i != drop]
            remaining_ids = frozenset((e.src, e.relation, e.dst) for e in remaining)
            # u reaches v inside one component, so (v, r, u) cannot rejoin the cut
            options = _cycle_edge_options(
                remaining_ids, _reach_pairs(n, remaining), relation_set.relations
            )
            if not options:
                continue
            u, v, usable = rng.choice(options)
            relation = rng.choice(usable)
            triples = [t for i, t in enumerate(graph.triples()) if i != drop]
            triples.append((graph.label_of(v), relation, graph.label_of(u)))
            return _rebuild(graph, graph.labels(), triples)
        return None

    # NODE_REMOVAL
    n_belief = sum(1 for node in graph.nodes if node.provenance == BELIEF)
    n_argument = sum(1 for node in graph.nodes if node.provenance == ARGUMENT)
    eligible = [
        node
        for node in graph.nodes
        if (node.provenance == BELIEF and n_belief - 1 < 2)
        or (node.provenance == ARGUMENT and n_argument - 1 < 2)
    ]
    if not eligible:
        return None
    victim = rng.choice(eligible)
    labels = [node.label for node in graph.nodes if node.id != victim.id]
    triples = [
        (s, r, d)
        for s, r, d in graph.triples()
        if s != victim.label and d != victim.label
    ]
    return _rebuild(graph, labels, triples)


def perturb_semantic(graph: Graph, relation_set: RelationSet, seed: int) -> Graph:
    """Swap the relations of a random nonempty edge subset.

    The subset size is uniform over 1..|E|; each chosen edge gets a
    uniformly chosen different relation. Node set and (src, dst) topology
    are preserved, so a valid input stays valid.
    """
    if len(relation_set) < 2:
        raise InapplicableError("need at least 2 relations to swap")
    edge_count = len(graph.edges)
    if edge_count == 0:
        raise InapplicableError("graph has no edges")
    rng = random.Random(seed)
    base = list(graph.triples())
    for _ in range(100):
        k = rng.randint(1, edge_count)
        chosen = sorted(rng.sample(range(edge_count), k))
        triples = base[:]
        feasible = True
        for idx in chosen:
            src, relation, dst = triples[idx]
            parallel = {
                r for j, (s, r, d) in enumerate(triples) if j != idx and (s, d) == (src, dst)
            }
            options = [
                r for r in relation_set.relations if r != relation and r not in parallel
            ]
            if not options:
                feasible = False
                break
            triples[idx] = (src, rng.choice(options), dst)
        if feasible:
            return _rebuild(graph, graph.labels(), triples)
    raise InapplicableError("no collision-free relation swap found")


def flip_temporal_edge(
    triple: tuple[str, str, str], relation_set: Optional[RelationSet] = None
) -> tuple[str, str, str]:
    """Meaning-preserving rewrite of one temporal edge: (a, r, b) becomes
    (b, inverse(r), a). Applying it twice restores the original triple."""
    relations = relation_set or temporal_relation_set()
    src, relation, dst = triple
    inverse = relations.inverse(relation)
    if inverse is None:
        raise InapplicableError(f"no inverse for relation {relation!r}")
    return (dst, inverse, src)


def _check_temporal_preconditions(graph: Graph, relation_set: RelationSet) -> None:
    for edge in graph.edges:
        if edge.relation not in relation_set:
            raise InapplicableError(f"non-temporal relation {edge.relation!r}")
    n = len(graph.nodes)
    if not _connected_undirected(n, graph.edges):
        raise InapplicableError("graph is not connected")
    if not _acyclic_directed(n, graph.edges):
        raise InapplicableError("graph is not a DAG")
    if not graph.edges:
        raise InapplicableError("graph has no edges")


def perturb_temporal(
    graph: Graph,
    mode: PerturbationKind,
    seed: int,
    relation_set: Optional[RelationSet] = None,
) -> Graph:
    """Temporal rewrite of a random nonempty edge subset.

    TEMPORAL_POSITIVE applies the meaning-preserving flip to each chosen
    edge and re-samples the subset until the result is still a connected
    DAG (flipping every edge always is, so this terminates). TEMPORAL_NEGATIVE
    keeps endpoints and corrupts relations: before/after/simultaneous become
    a different member of that set, includes and "is included" exchange.
    """
    relations = relation_set or temporal_relation_set()
    _check_temporal_preconditions(graph, relations)
    rng = random.Random(seed)
    base = list(graph.triples())
    edge_count = len(base)

    if mode == PerturbationKind.TEMPORAL_POSITIVE:
        for _ in range(50):
            k = rng.randint(1, edge_count)
            chosen = set(rng.sample(range(edge_count), k))
            triples = [
                flip_temporal_edge(t, relations) if i in chosen else t
                for i, t in enumerate(base)
            ]
            candidate = _try_rebuild_connected_dag(graph, triples)
            if candidate is not None:
                return candidate
        # reversing a connected DAG in full is always a connected DAG
        triples = [flip_temporal_edge(t, relations) for t in base]
        candidate = _try_rebuild_connected_dag(graph, triples)
        if candidate is None:
            raise InapplicableError("no valid meaning-preserving rewrite exists")
        return candidate

    if mode == PerturbationKind.TEMPORAL_NEGATIVE:
        for _ in range(100):
            k = rng.randint(1, edge_count)
            chosen = sorted(rng.sample(range(edge_count), k))
            triples = base[:]
            feasible = True
            for idx in chosen:
                src, relation, dst = triples[idx]
                parallel = {
                    r
                    for j, (s, r, d) in enumerate(triples)
                    if j != idx and (s, d) == (src, dst)
                }
                if relation in TEMPORAL_EXCHANGEABLE:
                    options = [
                        r
                        for r in TEMPORAL_EXCHANGEABLE
                        if r != relation and r not in parallel
                    ]
                else:
                    flipped = relations.inverse(relation)
                    options = [flipped] if flipped and flipped not in parallel else []
                if not options:
                    feasible = False
                    break
                triples[idx] = (src, rng.choice(options), dst)
            if feasible:
                return _rebuild(graph, graph.labels(), triples)
        raise InapplicableError("no collision-free temporal corruption found")

    raise ValueError(f"not a temporal mode: {mode}")


def _try_rebuild_connected_dag(
    graph: Graph, triples: Sequence[tuple[str, str, str]]
) -> Optional[Graph]:
    try:
        candidate = _rebuild(graph, graph.labels(), triples)
    except GraphInvariantError:
        return None
    n = len(candidate.nodes)
    if not _connected_undirected(n, candidate.edges):
        return None
    if not _acyclic_directed(n, candidate.edges):
        return None
    return candidate


def apply_perturbation(
    graph: Graph,
    kind: PerturbationKind,
    seed: int,
    relation_set: RelationSet,
    lexicon: Optional[Lexicon] = None,
    embeddings: Optional[EmbeddingTable] = None,
    belief: str = "",
    argument: str = "",
) -> Optional[Graph]:
    """Uniform dispatch used by the pipeline: None means inapplicable."""
    try:
        if kind == PerturbationKind.POSITIVE:
            if lexicon is None or embeddings is None:
                raise ValueError("positive perturbation needs a lexicon and embeddings")
            return perturb_positive(graph, belief, argument, lexicon, embeddings, seed)
        if kind in STRUCTURAL_KINDS:
            return perturb_structural(graph, kind, seed, relation_set)
        if kind == PerturbationKind.RELATION_SWAP:
            return perturb_semantic(graph, relation_set, seed)
        return perturb_temporal(graph, kind, seed, relation_set)
    except InapplicableError:
        return None
