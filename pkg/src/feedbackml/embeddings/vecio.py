"""Word-vector files: fastText-style ``.vec`` text and a binary cache.

Binary cache layout (all integers little-endian)::

    bytes 0-7    magic  b"FBVECBIN"
    uint32       format version (1)
    uint64       V, number of vectors
    uint32       D, dimension
    V times:     uint32 byte length n, then n bytes of UTF-8 token
    V*D float32  row-major values, little-endian
"""
from __future__ import annotations

import struct
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError
from .matrix import EmbeddingMatrix

BIN_MAGIC = b"FBVECBIN"
BIN_VERSION = 1


def _validate(tokens: Sequence[str], matrix: EmbeddingMatrix) -> None:
    if len(tokens) == 0:
        raise DataError("refusing to write an empty vocabulary")
    if len(tokens) != matrix.rows:
        raise DataError(f"{len(tokens)} tokens but matrix has {matrix.rows} rows")
    if not np.all(np.isfinite(matrix.values)):
        raise DataError("matrix contains non-finite values")
    bad = [t for t in tokens if not t or any(ch.isspace() for ch in t)]
    if bad:
        raise DataError(f"tokens cannot be empty or contain whitespace: {bad[:3]}")


def load_vec(path, dtype=np.float32) -> tuple[list[str], EmbeddingMatrix]:
    """Read a ``.vec`` file: a ``V D`` header, then ``token v1 ... vD`` per line.

    Duplicate tokens keep their first vector (with a warning).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"vector file not found: {path}")
    with open(path, encoding="utf-8", errors="strict") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise DataError(f"{path}: first line must be 'V D', got {' '.join(header)!r}")
        n_rows, dim = int(header[0]), int(header[1])
        tokens: list[str] = []
        seen: set[str] = set()
        rows: list[np.ndarray] = []
        duplicates = 0
        n_read = 0
        for line_no, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if parts == [""]:
                continue
            n_read += 1
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{line_no}: expected token + {dim} values, found {len(parts) - 1} values")
            try:
                vec = np.array(parts[1:], dtype=dtype)
            except ValueError:
                raise DataError(f"{path}:{line_no}: non-numeric field in vector for {parts[0]!r}") from None
            if parts[0] in seen:
                duplicates += 1
                continue
            seen.add(parts[0])
            tokens.append(parts[0])
            rows.append(vec)
    if n_read != n_rows:
        raise DataError(f"{path}: header declares {n_rows} vectors, file has {n_read}")
    if duplicates:
        warnings.warn(f"{path}: {duplicates} duplicate tokens ignored (first occurrence kept)", stacklevel=2)
    values = np.vstack(rows) if rows else np.zeros((0, dim), dtype=dtype)
    return tokens, EmbeddingMatrix(values, dtype=dtype)


def save_vec(path, tokens: Sequence[str], matrix: EmbeddingMatrix) -> None:
    _validate(tokens, matrix)
    # 9 significant digits round-trip float32 exactly; float64 needs 17
    fmt = "%.17g" if matrix.values.dtype == np.float64 else "%.9g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.rows} {matrix.dim}\n")
        for token, row in zip(tokens, matrix.values):
            fh.write(token + " " + " ".join(fmt % v for v in row) + "\n")


def save_binary(path, tokens: Sequence[str], matrix: EmbeddingMatrix) -> None:
    _validate(tokens, matrix)
    with open(path, "wb") as fh:
        fh.write(BIN_MAGIC)
        fh.write(struct.pack("<IQI", BIN_VERSION, matrix.rows, matrix.dim))
        for token in tokens:
            raw = token.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())


def load_binary(path) -> tuple[list[str], EmbeddingMatrix]:
    data = Path(path).read_bytes()
    if data[:8] != BIN_MAGIC:
        raise DataError(f"{path}: not a binary vector cache (bad magic)")
    version, n_rows, dim = struct.unpack_from("<IQI", data, 8)
    if version != BIN_VERSION:
        raise DataError(f"{path}: unsupported cache version {version}")
    offset = 8 + struct.calcsize("<IQI")
    tokens = []
    for _ in range(n_rows):
        (n,) = struct.unpack_from("<I", data, offset)
        offset += 4
        tokens.append(data[offset:offset + n].decode("utf-8"))
        offset += n
    expected = n_rows * dim * 4
    if len(data) - offset != expected:
        raise DataError(f"{path}: expected {expected} bytes of vector data, found {len(data) - offset}")
    values = np.frombuffer(data, dtype="<f4", count=n_rows * dim, offset=offset).reshape(n_rows, dim)
    return tokens, EmbeddingMatrix(values.astype(np.float32))
