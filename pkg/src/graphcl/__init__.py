"""Explanation-graph tooling: codecs, constraint validation, perturbation
generators, evaluation metrics, negative filtering, and loss math."""

from .codec import ParseError, parse_dot, parse_linearized, serialize_dot, serialize_linearized
from .graphs import (
    ARGUMENT,
    BELIEF,
    COMMONSENSE,
    Edge,
    Graph,
    GraphInvariantError,
    Node,
    RelationSet,
    ValidationReport,
    canonical_edge_order,
    normalize_label,
    tag_provenance,
    temporal_relation_set,
    validate_structure,
)
from .perturb import (
    InapplicableError,
    PerturbationKind,
    perturb_positive,
    perturb_semantic,
    perturb_structural,
    perturb_temporal,
)

__all__ = [
    "ARGUMENT",
    "BELIEF",
    "COMMONSENSE",
    "Edge",
    "Graph",
    "GraphInvariantError",
    "InapplicableError",
    "Node",
    "ParseError",
    "PerturbationKind",
    "RelationSet",
    "ValidationReport",
    "canonical_edge_order",
    "normalize_label",
    "parse_dot",
    "parse_linearized",
    "perturb_positive",
    "perturb_semantic",
    "perturb_structural",
    "perturb_temporal",
    "serialize_dot",
    "serialize_linearized",
    "tag_provenance",
    "temporal_relation_set",
    "validate_structure",
]

__version__ = "0.1.0"
