"""Static word vectors, mean pooling, cosine similarity, sentence-vector import.

Pooling follows the OOV-in-denominator rule: out-of-vocabulary tokens
contribute zero vectors but still count toward the mean, so heavily-OOV
texts shrink toward zero rather than being renormalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .jsonl import iter_jsonl
from .tokenizer import normalize_ws, tokenize

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION = 300


class VectorStore:
    def __init__(self, dimension: int, table: dict[str, np.ndarray]):
        self.dimension = dimension
        self.table = table

    def get(self, token: str) -> np.ndarray | None:
        return self.table.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def __len__(self) -> int:
        return len(self.table)


@dataclass
class PooledEmbedding:
    vector: np.ndarray
    token_count: int
    oov_count: int


def load_vectors(path: str, expected_dim: int | None = None) -> VectorStore:
    """Load the standard text format: "token v1 ... vD" per line, UTF-8.

    The first valid line fixes the dimension (or `expected_dim` does);
    lines with a different arity are rejected with warnings, duplicate
    tokens keep their first vector.
    """
    dimension = expected_dim
    table: dict[str, np.ndarray] = {}
    candidate_lines = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            candidate_lines += 1
            token = parts[0].casefold()
            values = parts[1:]
            if dimension is None:
                dimension = len(values)
            if len(values) != dimension:
                logger.warning(
                    "%s:%d: expected %d values, got %d; line rejected",
                    path, line_no, dimension, len(values),
                )
                continue
            if token in table:
                continue
            try:
                table[token] = np.asarray([float(v) for v in values], dtype=np.float64)
            except ValueError:
                logger.warning("%s:%d: non-numeric value; line rejected", path, line_no)
    if expected_dim is not None and candidate_lines and not table:
        raise ValueError(f"{path}: no vectors of expected dimension {expected_dim}")
    if dimension is None:
        dimension = expected_dim or DEFAULT_DIMENSION
    return VectorStore(dimension=dimension, table=table)


def embed_mean(text: str, store: VectorStore) -> PooledEmbedding:
    """Mean of token vectors with OOV tokens as zeros (counted in the denominator)."""
    tokens = tokenize(text)
    vector = np.zeros(store.dimension, dtype=np.float64)
    oov = 0
    for token in tokens:
        vec = store.get(token)
        if vec is None:
            oov += 1
        else:
            vector += vec
    if tokens:
        vector /= len(tokens)
    return PooledEmbedding(vector=vector, token_count=len(tokens), oov_count=oov)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; defined as 0 when either norm is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class SentenceVectorTable:
    """Precomputed text-level vectors, keyed by whitespace-normalized text."""

    def __init__(self, dimension: int, table: dict[str, np.ndarray]):
        self.dimension = dimension
        self.table = table

    def lookup(self, text: str) -> np.ndarray | None:
        return self.table.get(normalize_ws(text))

    def __len__(self) -> int:
        return len(self.table)


def load_sentence_vectors(path: str) -> SentenceVectorTable:
    """Line records {text, values[]}; inconsistent dimensions are a load error."""
    dimension: int | None = None
    table: dict[str, np.ndarray] = {}
    for rec in iter_jsonl(path):
        values = rec["values"]
        if dimension is None:
            dimension = len(values)
        elif len(values) != dimension:
            raise ValueError(
                f"{path}: inconsistent vector dimension {len(values)} (expected {dimension})"
            )
        key = normalize_ws(str(rec["text"]))
        if key in table:
            continue
        table[key] = np.asarray([float(v) for v in values], dtype=np.float64)
    return SentenceVectorTable(dimension=dimension or 0, table=table)


def vocabulary_coverage(texts: Iterable[str], store: VectorStore) -> float:
    """Fraction of tokens that are in-vocabulary; 0.0 for an empty corpus."""
    total = 0
    known = 0
    for text in texts:
        for token in tokenize(text):
            total += 1
            if token in store:
                known += 1
    return known / total if total else 0.0
