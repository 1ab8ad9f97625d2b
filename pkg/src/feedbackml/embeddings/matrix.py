"""Embedding matrices: projection onto a task vocabulary and neighbour queries."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..corpus.cleaning import PAD_TOKEN, UNK_TOKEN
from ..corpus.vocab import PAD_ID, Vocabulary
from ..errors import DataError


class EmbeddingMatrix:
    """A V x D real matrix of word vectors with a lazily cached row-norm vector."""

    def __init__(self, values, dtype=np.float32):
        values = np.array(values, dtype=dtype)
        if values.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("embedding matrix contains non-finite values")
        self.values = values
        self._norms: np.ndarray | None = None

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = np.linalg.norm(self.values.astype(np.float64), axis=1)
        return self._norms

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dim={self.dim})"


def coverage(source_tokens: Sequence[str], vocab: Vocabulary) -> float:
    """Fraction of the vocabulary's corpus tokens that the source covers."""
    corpus = vocab.corpus_tokens
    if not corpus:
        return 0.0
    source = set(source_tokens)
    return sum(t in source for t in corpus) / len(corpus)


def project_to_vocab(source_tokens: Sequence[str], source: EmbeddingMatrix, vocab: Vocabulary,
                     oov_policy: str = "uniform", seed: int = 0, dim: int | None = None,
                     scale: float = 0.25) -> EmbeddingMatrix:
    """Build a ``len(vocab) x D`` matrix from source vectors.

    Tokens found in the source copy their vector, PAD is all zeros, and the
    rest (UNK included) follow ``oov_policy``: ``"uniform"`` draws from
    U[-scale, scale] with ``seed`` in id order, ``"zeros"`` leaves them 0.
    """
    if dim is not None and dim != source.dim:
        raise DataError(f"dimension mismatch: source vectors have D={source.dim}, model expects D={dim}")
    if oov_policy not in ("uniform", "zeros"):
        raise ValueError(f"unknown oov_policy {oov_policy!r}")
    index = {}
    for row, token in enumerate(source_tokens):
        index.setdefault(token, row)
    out = np.zeros((len(vocab), source.dim), dtype=source.values.dtype)
    missing = []
    for token_id, token in enumerate(vocab.id_to_token):
        if token_id == PAD_ID:
            continue
        row = index.get(token)
        if row is None:
            missing.append(token_id)
        else:
            out[token_id] = source.values[row]
    if oov_policy == "uniform" and missing:
        rng = np.random.default_rng(seed)
        out[missing] = rng.uniform(-scale, scale, size=(len(missing), source.dim))
    return EmbeddingMatrix(out, dtype=source.values.dtype)


def nearest_neighbors(tokens: Sequence[str], matrix: EmbeddingMatrix, query: str,
                      k: int) -> list[tuple[str, float]]:
    """Top-``k`` tokens by cosine similarity to ``query`` (query excluded).

    Ties are broken lexicographically; reserved PAD/UNK rows never appear.
    """
    tokens = list(tokens)
    if len(tokens) != matrix.rows:
        raise DataError(f"{len(tokens)} tokens for a matrix with {matrix.rows} rows")
    try:
        q = tokens.index(query)
    except ValueError:
        raise KeyError(f"unknown query token {query!r}") from None
    if not 0 < k < len(tokens):
        raise ValueError(f"k must satisfy 0 < k < V={len(tokens)}, got {k}")
    vals = matrix.values.astype(np.float64)
    norms = matrix.norms()
    denom = norms * norms[q]
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0, vals @ vals[q] / np.where(denom > 0, denom, 1.0), 0.0)
    candidates = [(float(sims[i]), t) for i, t in enumerate(tokens)
                  if i != q and t not in (PAD_TOKEN, UNK_TOKEN)]
    candidates.sort(key=lambda pair: (-pair[0], pair[1]))
    return [(t, s) for s, t in candidates[:k]]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
