"""Synonym lookup and embedding-similarity ranking for positive perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

POS_TAGS = ("ADJ", "NOUN", "ADV", "VERB")


class FormatError(ValueError):
    """Malformed lexicon or embedding file; carries the offending line number."""

    def __init__(self, path: str, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno
        self.reason = reason


@dataclass(frozen=True)
class Lexicon:
    """Case-insensitive map from (word, POS tag) to candidate synonyms.

    Candidate lists never contain the key word itself.
    """

    entries: Mapping[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)

    def candidates(self, word: str, pos: str) -> tuple[str, ...]:
        return self.entries.get((word.lower(), pos), ())

    def tags_for(self, word: str) -> tuple[str, ...]:
        """POS tags under which ``word`` has at least one candidate, in the
        fixed POS_TAGS order."""
        return tuple(
            pos for pos in POS_TAGS if self.entries.get((word.lower(), pos))
        )


@dataclass
class EmbeddingTable:
    """Dense word vectors of a fixed dimension; similarity is cosine."""

    vectors: dict[str, np.ndarray]
    dim: int

    def get(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word.lower())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.vectors


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b)) / denom


def load_lexicon(path: str) -> Lexicon:
    """Load ``word<TAB>POS<TAB>comma-separated-synonyms`` lines.

    Blank lines are skipped; an empty file yields an empty (valid) lexicon.
    Copies of the key word are dropped from the candidate list.
    """
    entries: dict[tuple[str, str], tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise FormatError(path, lineno, f"expected 3 columns, got {len(cols)}")
            word, pos, syns = (c.strip() for c in cols)
            if pos not in POS_TAGS:
                raise FormatError(path, lineno, f"unknown POS tag {pos!r}")
            if not word:
                raise FormatError(path, lineno, "empty word")
            candidates = tuple(
                s.strip()
                for s in syns.split(",")
                if s.strip() and s.strip().lower() != word.lower()
            )
            entries[(word.lower(), pos)] = candidates
    return Lexicon(entries)


def load_embeddings(path: str) -> EmbeddingTable:
    """Load ``word v1 v2 ... vd`` lines (space-separated floats).

    The dimension is fixed by the first vector; a mismatch raises
    :class:`FormatError`. Zero vectors are excluded from the table.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise FormatError(path, lineno, "expected a word and at least one value")
            word = parts[0].lower()
            try:
                values = np.array([float(x) for x in parts[1:]], dtype=float)
            except ValueError as exc:
                raise FormatError(path, lineno, f"bad float: {exc}") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise FormatError(
                    path, lineno, f"dimension mismatch: expected {dim}, got {len(values)}"
                )
            if not np.any(values):
                continue
            vectors[word] = values
    return EmbeddingTable(vectors, dim or 0)


def best_synonym(
    word: str,
    pos: str,
    lexicon: Lexicon,
    embeddings: EmbeddingTable,
) -> Optional[str]:
    """Candidate with the highest cosine similarity to ``word``'s vector.

    Ties break lexicographically. Returns None when the lexicon lookup is
    empty, the word itself has no vector, or no candidate has one. Never
    returns the input word.
    """
    candidates = lexicon.candidates(word, pos)
    if not candidates:
        return None
    anchor = embeddings.get(word)
    if anchor is None:
        return None
    scored = [
        (candidate, cosine_similarity(anchor, vec))
        for candidate in candidates
        if candidate.lower() != word.lower()
        and (vec := embeddings.get(candidate)) is not None
    ]
    if not scored:
        return None
    return min(scored, key=lambda item: (-item[1], item[0]))[0]
