"""Graph value types, provenance tagging, and the structural validator.

The central value type is :class:`Graph`, a labeled directed multigraph of
concept nodes and relation edges. Graphs are immutable; every operation
returns a new value. A graph may be *well-formed* (constructible) and still
violate the four structural constraints checked by
:func:`validate_structure` -- validity is diagnosed, never assumed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

BELIEF = "belief"
ARGUMENT = "argument"
COMMONSENSE = "commonsense"
PROVENANCE_TAGS = (BELIEF, ARGUMENT, COMMONSENSE)


class GraphInvariantError(ValueError):
    """Raised when a graph construction violates a well-formedness invariant."""


class RelationSetError(ValueError):
    """Raised for malformed relation-set definitions or files."""


def normalize_label(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class Node:
    """A concept node. ``provenance`` is one of the PROVENANCE_TAGS once
    :func:`tag_provenance` has run, ``None`` before."""

    id: int
    label: str
    provenance: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    """A directed relation edge between two node ids."""

    src: int
    relation: str
    dst: int


@dataclass(frozen=True)
class Graph:
    """Immutable labeled directed multigraph.

    Well-formedness invariants, enforced at construction:

    * node ids are consecutive indices 0..n-1,
    * labels are non-empty and unique after :func:`normalize_label`,
    * edge endpoints refer to existing nodes,
    * no self-loops and no duplicate (src, relation, dst) triples,
    * relation labels are non-empty.
    """

    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        seen_labels: set[str] = set()
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise GraphInvariantError(f"node ids must be 0..n-1, got {node.id} at {i}")
            key = normalize_label(node.label)
            if not key:
                raise GraphInvariantError(f"empty node label at id {i}")
            if key in seen_labels:
                raise GraphInvariantError(f"duplicate node label {node.label!r}")
            seen_labels.add(key)
        n = len(self.nodes)
        seen_triples: set[tuple[int, str, int]] = set()
        for edge in self.edges:
            if not (0 <= edge.src < n and 0 <= edge.dst < n):
                raise GraphInvariantError(f"edge endpoint out of range: {edge}")
            if edge.src == edge.dst:
                raise GraphInvariantError(f"self-loop at node {edge.src}")
            if not edge.relation.strip():
                raise GraphInvariantError("empty relation label")
            key3 = (edge.src, edge.relation, edge.dst)
            if key3 in seen_triples:
                raise GraphInvariantError(f"duplicate edge {key3}")
            seen_triples.add(key3)

    @classmethod
    def from_parts(
        cls,
        labels: Iterable[str],
        triples: Iterable[tuple[str, str, str]],
        provenance: Optional[Mapping[str, str]] = None,
    ) -> "Graph":
        """Build a graph from node labels plus (src, relation, dst) label triples.

        Nodes are created in first-mention order: explicit ``labels`` first,
        then any endpoint not yet seen. Labels that normalize identically are
        unified to one node keeping the first spelling. ``provenance`` maps
        labels (any spelling) to a provenance tag.
        """
        prov = {normalize_label(k): v for k, v in (provenance or {}).items()}
        order: list[str] = []
        index: dict[str, int] = {}

        def intern(label: str) -> int:
            stripped = label.strip()
            key = normalize_label(stripped)
            if key not in index:
                index[key] = len(order)
                order.append(stripped)
            return index[key]

        for label in labels:
            intern(label)
        edges = tuple(
            Edge(intern(src), rel.strip(), intern(dst)) for src, rel, dst in triples
        )
        nodes = tuple(
            Node(i, label, prov.get(normalize_label(label)))
            for i, label in enumerate(order)
        )
        return cls(nodes, edges)

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[tuple[str, str, str]],
        provenance: Optional[Mapping[str, str]] = None,
    ) -> "Graph":
        return cls.from_parts((), triples, provenance)

    def label_of(self, node_id: int) -> str:
        return self.nodes[node_id].label

    def find(self, label: str) -> Optional[int]:
        """Node id for a label (matched after normalization), or None."""
        key = normalize_label(label)
        for node in self.nodes:
            if normalize_label(node.label) == key:
                return node.id
        return None

    def labels(self) -> tuple[str, ...]:
        return tuple(node.label for node in self.nodes)

    def triples(self) -> tuple[tuple[str, str, str], ...]:
        return tuple(
            (self.nodes[e.src].label, e.relation, self.nodes[e.dst].label)
            for e in self.edges
        )

    def provenance_map(self) -> dict[str, Optional[str]]:
        return {node.label: node.provenance for node in self.nodes}

    def canonical_signature(self) -> tuple:
        """Label-level identity: equal signatures mean the same labeled graph
        regardless of node-id numbering or edge order."""
        labels = tuple(sorted(normalize_label(n.label) for n in self.nodes))
        triples = tuple(
            sorted(
                (normalize_label(s), r, normalize_label(d))
                for s, r, d in self.triples()
            )
        )
        return (labels, triples)


@dataclass(frozen=True)
class RelationSet:
    """Ordered set of admissible relation labels with an optional inverse map.

    The inverse map, when present, must be an involution: inv(inv(r)) == r.
    """

    relations: tuple[str, ...]
    inverses: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.relations:
            raise RelationSetError("relation set must be non-empty")
        if len(set(self.relations)) != len(self.relations):
            raise RelationSetError("duplicate relations")
        members = set(self.relations)
        for rel, inv in self.inverses.items():
            if rel not in members or inv not in members:
                raise RelationSetError(f"inverse pair ({rel!r}, {inv!r}) outside relation set")
            if self.inverses.get(inv) != rel:
                raise RelationSetError(f"inverse map is not an involution at {rel!r}")

    def __contains__(self, relation: str) -> bool:
        return relation in self.relations

    def __len__(self) -> int:
        return len(self.relations)

    def inverse(self, relation: str) -> Optional[str]:
        return self.inverses.get(relation)

    @classmethod
    def of(cls, *relations: str, inverses: Optional[Mapping[str, str]] = None) -> "RelationSet":
        inv: dict[str, str] = {}
        for a, b in (inverses or {}).items():
            inv[a] = b
            inv.setdefault(b, a)
        return cls(tuple(relations), inv)

    @classmethod
    def from_file(cls, path: str) -> "RelationSet":
        """Load from UTF-8 text: one relation per line, optional TAB-separated
        inverse in a second column. Inverse pairs are closed symmetrically."""
        relations: list[str] = []
        pairs: list[tuple[int, str, str]] = []
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                cols = line.split("\t")
                if len(cols) > 2:
                    raise RelationSetError(f"{path}:{lineno}: expected at most 2 columns")
                rel = cols[0].strip()
                if not rel:
                    raise RelationSetError(f"{path}:{lineno}: empty relation")
                if rel not in relations:
                    relations.append(rel)
                if len(cols) == 2 and cols[1].strip():
                    pairs.append((lineno, rel, cols[1].strip()))
        inverses: dict[str, str] = {}
        for lineno, rel, inv in pairs:
            if inv not in relations:
                relations.append(inv)
            for a, b in ((rel, inv), (inv, rel)):
                if inverses.setdefault(a, b) != b:
                    raise RelationSetError(
                        f"{path}:{lineno}: conflicting inverse for {a!r}"
                    )
        return cls(tuple(relations), inverses)


TEMPORAL_BEFORE = "before"
TEMPORAL_AFTER = "after"
TEMPORAL_SIMULTANEOUS = "simultaneous"
TEMPORAL_IS_INCLUDED = "is included"
TEMPORAL_INCLUDES = "includes"


def temporal_relation_set() -> RelationSet:
    """The five temporal relations with their meaning-preserving inverses."""
    return RelationSet.of(
        TEMPORAL_BEFORE,
        TEMPORAL_AFTER,
        TEMPORAL_SIMULTANEOUS,
        TEMPORAL_IS_INCLUDED,
        TEMPORAL_INCLUDES,
        inverses={
            TEMPORAL_BEFORE: TEMPORAL_AFTER,
            TEMPORAL_SIMULTANEOUS: TEMPORAL_SIMULTANEOUS,
            TEMPORAL_INCLUDES: TEMPORAL_IS_INCLUDED,
        },
    )


@dataclass(frozen=True)
class ValidationReport:
    """Per-constraint pass/fail diagnostics for one graph."""

    connected: bool
    acyclic: bool
    relations_valid: bool
    provenance_ok: bool

    @property
    def structurally_correct(self) -> bool:
        return (
            self.connected
            and self.acyclic
            and self.relations_valid
            and self.provenance_ok
        )

    def as_dict(self) -> dict[str, bool]:
        return {
            "connected": self.connected,
            "acyclic": self.acyclic,
            "relations_valid": self.relations_valid,
            "provenance_ok": self.provenance_ok,
            "structurally_correct": self.structurally_correct,
        }


def _occurs_at_token_boundary(needle: str, haystack: str) -> bool:
    if not needle:
        return False
    pattern = r"(?<!\w)" + re.escape(needle) + r"(?!\w)"
    return re.search(pattern, haystack) is not None


def tag_provenance(graph: Graph, belief: str, argument: str) -> Graph:
    """Assign a provenance tag to every node.

    A node is tagged ``belief`` if its normalized label occurs as a
    token-boundary substring of the normalized belief, else ``argument`` by
    the same test, else ``commonsense``. The belief test wins on a double
    match. Total function: never fails on well-formed graphs.
    """
    belief_norm = normalize_label(belief)
    argument_norm = normalize_label(argument)
    tagged = []
    for node in graph.nodes:
        label_norm = normalize_label(node.label)
        if _occurs_at_token_boundary(label_norm, belief_norm):
            tag = BELIEF
        elif _occurs_at_token_boundary(label_norm, argument_norm):
            tag = ARGUMENT
        else:
            tag = COMMONSENSE
        tagged.append(replace(node, provenance=tag))
    return Graph(tuple(tagged), graph.edges)


def _connected_undirected(n: int, edges: Sequence[Edge]) -> bool:
    if n <= 1:
        return True
    parent = list(range(n))

    def root(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for edge in edges:
        a, b = root(edge.src), root(edge.dst)
        if a != b:
            parent[a] = b
            components -= 1
    return components == 1


def _acyclic_directed(n: int, edges: Sequence[Edge]) -> bool:
    indegree = [0] * n
    out: list[list[int]] = [[] for _ in range(n)]
    for edge in edges:
        out[edge.src].append(edge.dst)
        indegree[edge.dst] += 1
    queue = [i for i in range(n) if indegree[i] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for v in out[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                queue.append(v)
    return seen == n


def validate_structure(graph: Graph, relation_set: RelationSet) -> ValidationReport:
    """Check the four structural constraints.

    Connectivity is computed on the undirected view (union-find), acyclicity
    on the directed view (Kahn), relation membership against
    ``relation_set``, and the provenance constraint requires at least two
    belief and two argument nodes. Expects provenance to be tagged already;
    untagged nodes count toward neither side.
    """
    n = len(graph.nodes)
    connected = _connected_undirected(n, graph.edges)
    acyclic = _acyclic_directed(n, graph.edges)
    relations_valid = all(e.relation in relation_set for e in graph.edges)
    n_belief = sum(1 for node in graph.nodes if node.provenance == BELIEF)
    n_argument = sum(1 for node in graph.nodes if node.provenance == ARGUMENT)
    provenance_ok = n_belief >= 2 and n_argument >= 2
    return ValidationReport(connected, acyclic, relations_valid, provenance_ok)


def canonical_edge_order(graph: Graph) -> list[Edge]:
    """Deterministic depth-first edge order.

    Roots are zero-in-degree nodes taken in lexicographic (normalized) label
    order, or all nodes in that order when none exist. Out-edges are scanned
    in lexicographic order of the destination label (relation as tiebreak for
    parallel edges) and emitted when traversed. Unreached components are
    appended by repeating root selection. The result is a permutation of the
    edge list.
    """
    n = len(graph.nodes)
    norm = [normalize_label(node.label) for node in graph.nodes]
    out: list[list[Edge]] = [[] for _ in range(n)]
    indegree = [0] * n
    for edge in graph.edges:
        out[edge.src].append(edge)
        indegree[edge.dst] += 1
    for bucket in out:
        bucket.sort(key=lambda e: (norm[e.dst], e.relation))

    visited = [False] * n
    order: list[Edge] = []

    def visit(start: int) -> None:
        visited[start] = True
        stack = [iter(out[start])]
        while stack:
            edge = next(stack[-1], None)
            if edge is None:
                stack.pop()
                continue
            order.append(edge)
            if not visited[edge.dst]:
                visited[edge.dst] = True
                stack.append(iter(out[edge.dst]))

    remaining = set(range(n))
    while remaining:
        roots = [i for i in remaining if indegree[i] == 0] or list(remaining)
        visit(min(roots, key=lambda i: norm[i]))
        remaining = {i for i in remaining if not visited[i]}
    return order
