"""Vocabulary construction and fixed-length encoding."""
from __future__ import annotations

import hashlib
import io
import zipfile
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import DataError
from .cleaning import PAD_TOKEN, UNK_TOKEN

PAD_ID = 0
UNK_ID = 1


class Vocabulary:
    """Bijective token <-> id map; ids 0 and 1 are PAD and UNK."""

    def __init__(self, tokens: Sequence[str], min_count: int = 1):
        tokens = list(tokens)
        if tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            tokens = [PAD_TOKEN, UNK_TOKEN] + tokens
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary tokens must be unique")
        if PAD_TOKEN in tokens[2:] or UNK_TOKEN in tokens[2:]:
            raise DataError("reserved tokens cannot be assigned corpus ids")
        self.id_to_token: list[str] = tokens
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(tokens)}
        self.min_count = min_count

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, min_count={self.min_count})"

    @property
    def corpus_tokens(self) -> list[str]:
        return self.id_to_token[2:]

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids if i != PAD_ID]

    @property
    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.id_to_token).encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, min_count: int = 1) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines, min_count=min_count)


def build_vocabulary(token_streams: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Ids by descending frequency, ties broken lexicographically."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    for tokens in token_streams:
        counts.update(tokens)
    counts.pop(PAD_TOKEN, None)
    counts.pop(UNK_TOKEN, None)
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary(kept, min_count=min_count)


def encode_sequence(tokens: Sequence[str], vocab: Vocabulary, length: int) -> np.ndarray:
    """Map tokens to ids, keep the first ``length`` and right-pad with PAD."""
    if length < 1:
        raise ValueError(f"sequence length must be >= 1, got {length}")
    ids = np.full(length, PAD_ID, dtype=np.int32)
    head = [vocab.lookup(t) for t in tokens[:length]]
    ids[:len(head)] = head
    return ids


@dataclass(frozen=True)
class EncodedExample:
    ids: np.ndarray
    label: int
    length_unpadded: int


def encode_example(tokens: Sequence[str], label: int, vocab: Vocabulary, length: int) -> EncodedExample:
    return EncodedExample(encode_sequence(tokens, vocab, length), int(label), min(len(tokens), length))


@dataclass
class EncodedDataset:
    """Column-wise batch of encoded examples: ``ids`` is N x L."""

    ids: np.ndarray
    labels: np.ndarray
    lengths: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.lengths = np.asarray(self.lengths, dtype=np.int32)
        self.classes = tuple(self.classes)
        if self.ids.ndim != 2 or len(self.ids) != len(self.labels) or len(self.labels) != len(self.lengths):
            raise DataError("ids, labels and lengths must describe the same number of examples")
        if self.labels.size and self.labels.max() >= len(self.classes):
            raise DataError("label index exceeds the number of classes")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def seq_len(self) -> int:
        return self.ids.shape[1]

    def subset(self, index) -> "EncodedDataset":
        index = np.asarray(index, dtype=np.int64)
        return EncodedDataset(self.ids[index], self.labels[index], self.lengths[index], self.classes)

    def examples(self):
        for ids, label, n in zip(self.ids, self.labels, self.lengths):
            yield EncodedExample(ids, int(label), int(n))

    @classmethod
    def from_tokens(cls, token_lists, labels, vocab: Vocabulary, length: int, classes) -> "EncodedDataset":
        token_lists = list(token_lists)
        ids = np.stack([encode_sequence(t, vocab, length) for t in token_lists]) if token_lists \
            else np.zeros((0, length), dtype=np.int32)
        lengths = [min(len(t), length) for t in token_lists]
        return cls(ids, labels, lengths, classes)

    def save(self, path) -> None:
        """Write an ``.npz`` archive; entries carry a fixed timestamp so equal
        datasets give byte-identical files."""
        arrays = {"ids": self.ids, "labels": self.labels, "lengths": self.lengths,
                  "classes": np.array(self.classes, dtype=str)}
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
            for name, arr in arrays.items():
                buf = io.BytesIO()
                np.lib.format.write_array(buf, arr, allow_pickle=False)
                zf.writestr(zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0)), buf.getvalue())

    @classmethod
    def load(cls, path) -> "EncodedDataset":
        with np.load(path) as z:
            return cls(z["ids"], z["labels"], z["lengths"], tuple(str(c) for c in z["classes"]))
