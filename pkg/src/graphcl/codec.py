"""Bidirectional codecs between graphs and their textual encodings.

Two encodings are supported: the one-line bracketed-edge form
``(concept; relation; concept)(...)...`` and a DOT subset
``digraph { "A" -> "B" [label="rel"]; }``. Both serialize edges in
:func:`graphcl.graphs.canonical_edge_order`, so equal graphs produce
byte-identical output and ``parse(serialize(g))`` reproduces ``g`` up to
node-id renaming.
"""

from __future__ import annotations

import re

from .graphs import Graph, GraphInvariantError, canonical_edge_order

FIELD_SEPARATOR = "; "


class CodecError(ValueError):
    """Base class for codec failures."""


class ParseError(CodecError):
    """An input string is not a valid graph encoding.

    Carries the character ``position`` where parsing failed and a
    human-readable ``reason``.
    """

    def __init__(self, position: int, reason: str):
        super().__init__(f"parse error at {position}: {reason}")
        self.position = position
        self.reason = reason


class SerializeError(CodecError):
    """A graph cannot be represented in the target encoding."""


def parse_linearized(text: str) -> Graph:
    """Parse a concatenated bracketed-edge string into a graph.

    Nodes are created in first-mention order and duplicate labels unify to
    one node. Raises :class:`ParseError` for unbalanced brackets, groups
    that do not split into exactly 3 non-empty fields on ``"; "``, stray
    text between groups, or triples that violate graph invariants
    (self-loops, duplicate edges). Never raises anything else, no matter
    the input.
    """
    triples: list[tuple[str, str, str]] = []
    i = 0
    length = len(text)
    while i < length:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch != "(":
            raise ParseError(i, f"expected '(' but found {ch!r}")
        depth = 1
        j = i + 1
        while j < length and depth > 0:
            if text[j] == "(":
                depth += 1
            elif text[j] == ")":
                depth -= 1
            j += 1
        if depth > 0:
            raise ParseError(i, "unbalanced bracket")
        inner = text[i + 1 : j - 1]
        fields = inner.split(FIELD_SEPARATOR)
        if len(fields) != 3:
            raise ParseError(i, f"expected 3 fields, got {len(fields)}")
        src, relation, dst = (f.strip() for f in fields)
        if not src or not relation or not dst:
            raise ParseError(i, "empty field")
        triples.append((src, relation, dst))
        i = j
    try:
        return Graph.from_triples(triples)
    except GraphInvariantError as exc:
        raise ParseError(0, str(exc)) from exc


def _check_serializable(value: str, what: str) -> None:
    if ";" in value:
        raise SerializeError(f"{what} contains ';': {value!r}")
    if value.count("(") != value.count(")"):
        raise SerializeError(f"{what} has unbalanced parentheses: {value!r}")


def serialize_linearized(graph: Graph) -> str:
    """Render a graph as concatenated bracketed edges in canonical DFS order.

    Concepts or relations containing ``;`` (or unbalanced parentheses, which
    would break the framing) are rejected: the encoding has no escaping.
    """
    for label in graph.labels():
        _check_serializable(label, "concept")
    parts = []
    for edge in canonical_edge_order(graph):
        _check_serializable(edge.relation, "relation")
        src = graph.label_of(edge.src)
        dst = graph.label_of(edge.dst)
        parts.append(f"({src}{FIELD_SEPARATOR}{edge.relation}{FIELD_SEPARATOR}{dst})")
    return "".join(parts)


_DOT_QUOTED = r'"((?:[^"\\]|\\.)*)"'
_DOT_HEADER_RE = re.compile(r"^\s*digraph(\s+[A-Za-z_][A-Za-z_0-9]*)?\s*\{")
_DOT_EDGE_RE = re.compile(
    rf"^\s*{_DOT_QUOTED}\s*->\s*{_DOT_QUOTED}\s*\[\s*label\s*=\s*{_DOT_QUOTED}\s*\]\s*$"
)
_DOT_NODE_RE = re.compile(rf"^\s*{_DOT_QUOTED}\s*$")


def _dot_unescape(value: str) -> str:
    return value.replace('\\"', '"').replace("\\\\", "\\")


def _dot_escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


def _split_statements(body: str, offset: int) -> list[tuple[int, str]]:
    """Split a DOT body on ';' outside quoted strings."""
    statements: list[tuple[int, str]] = []
    start = 0
    in_quote = False
    i = 0
    while i < len(body):
        ch = body[i]
        if in_quote:
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_quote = False
        elif ch == '"':
            in_quote = True
        elif ch == ";":
            statements.append((offset + start, body[start:i]))
            start = i + 1
        i += 1
    if in_quote:
        raise ParseError(offset + start, "unterminated quoted string")
    statements.append((offset + start, body[start:]))
    return statements


def parse_dot(text: str) -> Graph:
    """Parse the supported DOT subset into a graph.

    Accepted statements are quoted edge statements with a mandatory label
    attribute (``"a" -> "b" [label="rel"]``) and bare quoted node
    declarations. Anything else, including an edge without a label, is a
    :class:`ParseError`.
    """
    header = _DOT_HEADER_RE.match(text)
    if not header:
        raise ParseError(0, "expected 'digraph {'")
    open_at = header.end() - 1
    close_at = text.rfind("}")
    if close_at < open_at:
        raise ParseError(len(text), "missing closing '}'")
    if text[close_at + 1 :].strip():
        raise ParseError(close_at + 1, "trailing content after '}'")
    body = text[open_at + 1 : close_at]

    labels: list[str] = []
    triples: list[tuple[str, str, str]] = []
    for position, statement in _split_statements(body, open_at + 1):
        if not statement.strip():
            continue
        edge_match = _DOT_EDGE_RE.match(statement)
        if edge_match:
            src, dst, relation = (_dot_unescape(g) for g in edge_match.groups())
            if not src.strip() or not dst.strip() or not relation.strip():
                raise ParseError(position, "empty field in edge statement")
            triples.append((src, relation, dst))
            continue
        node_match = _DOT_NODE_RE.match(statement)
        if node_match:
            label = _dot_unescape(node_match.group(1))
            if not label.strip():
                raise ParseError(position, "empty node label")
            labels.append(label)
            continue
        raise ParseError(position, f"unsupported statement: {statement.strip()!r}")
    try:
        return Graph.from_parts(labels, triples)
    except GraphInvariantError as exc:
        raise ParseError(0, str(exc)) from exc


def serialize_dot(graph: Graph) -> str:
    """Render a graph in the DOT subset, edges in canonical DFS order.

    Nodes without incident edges are emitted as bare declarations so that
    they survive a round-trip.
    """
    lines = ["digraph {"]
    touched = {e.src for e in graph.edges} | {e.dst for e in graph.edges}
    for node in graph.nodes:
        if node.id not in touched:
            lines.append(f'  "{_dot_escape(node.label)}";')
    for edge in canonical_edge_order(graph):
        src = _dot_escape(graph.label_of(edge.src))
        dst = _dot_escape(graph.label_of(edge.dst))
        rel = _dot_escape(edge.relation)
        lines.append(f'  "{src}" -> "{dst}" [label="{rel}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
