"""Stratified holdout splits and k-fold partitions.

Holdout sizes follow ``floor(frac * N)`` for validation and test, with the
remainder going to train; k folds differ in size by at most one. Per-class
counts come from a controlled rounding of the class-by-partition share
table, so every class lands within one sample of its proportional share
``n_c * |P| / N`` in every partition P.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..corpus.vocab import EncodedDataset
from ..errors import ConfigError, DataError

_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "holdout"
    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2
    k: int = 5
    holdout_val_frac: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("holdout", "kfold"):
            raise ConfigError(f"split mode must be 'holdout' or 'kfold', got {self.mode!r}")
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be non-negative and sum to 1, got {fracs}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if not 0 < self.holdout_val_frac < 1:
            raise ConfigError(f"holdout_val_frac must be in (0, 1), got {self.holdout_val_frac}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return self.train_frac, self.val_frac, self.test_frac


def _floor(x: float) -> int:
    # guards against 0.29 * 100 == 28.999999999999996
    return math.floor(x + _FLOOR_EPS)


def _max_flow_assign(extra_rows, caps, extra_cols) -> np.ndarray | None:
    """Distribute integer extras over a rows x cols grid with per-cell caps.

    Row r must receive exactly ``extra_rows[r]`` units and column j exactly
    ``extra_cols[j]``. Solved as a bipartite max-flow with BFS augmenting
    paths; returns the assignment or None when infeasible.
    """
    R, C = caps.shape
    flow = np.zeros_like(caps)
    row_left = np.array(extra_rows, dtype=np.int64)
    col_left = np.array(extra_cols, dtype=np.int64)
    for r in range(R):
        while row_left[r] > 0:
            parent = {("r", r): None}
            queue = deque([("r", r)])
            end = None
            while queue and end is None:
                kind, i = queue.popleft()
                if kind == "r":
                    for j in range(C):
                        if flow[i, j] < caps[i, j] and ("c", j) not in parent:
                            parent[("c", j)] = (kind, i)
                            if col_left[j] > 0:
                                end = ("c", j)
                                break
                            queue.append(("c", j))
                else:
                    for i2 in range(R):
                        if flow[i2, i] > 0 and ("r", i2) not in parent:
                            parent[("r", i2)] = (kind, i)
                            queue.append(("r", i2))
            if end is None:
                return None
            node = end
            while parent[node] is not None:
                prev = parent[node]
                if node[0] == "c":
                    flow[prev[1], node[1]] += 1
                else:
                    flow[node[1], prev[1]] -= 1
                node = prev
            col_left[end[1]] -= 1
            row_left[r] -= 1
    if col_left.any():
        return None
    return flow


def allocate_counts(class_sizes, totals) -> np.ndarray:
    """Integer ``classes x partitions`` table with the given row and column sums.

    Cell ``(c, j)`` is the floor or ceiling of ``n_c * T_j / N``, the class's
    proportional share of partition j. Such a rounding always exists because
    both margins are integers; it is found exactly with integer arithmetic.
    """
    sizes = np.asarray(class_sizes, dtype=np.int64)
    totals = np.asarray(totals, dtype=np.int64)
    N = int(sizes.sum())
    if int(totals.sum()) != N:
        raise ValueError(f"partition sizes {totals.tolist()} do not sum to {N}")
    numer = sizes[:, None] * totals[None, :]
    lo = numer // N
    caps = (numer % N != 0).astype(np.int64)
    flow = _max_flow_assign(sizes - lo.sum(axis=1), caps, totals - lo.sum(axis=0))
    if flow is None:  # unreachable for consistent margins
        raise DataError(f"cannot allocate classes {sizes.tolist()} to partitions {totals.tolist()}")
    return lo + flow


def holdout_sizes(n: int, fractions) -> np.ndarray:
    """``floor(frac * n)`` for every partition after the first, which takes the remainder."""
    sizes = np.array([0] + [_floor(f * n) for f in fractions[1:]], dtype=np.int64)
    sizes[0] = n - sizes[1:].sum()
    return sizes


def fold_sizes(n: int, k: int) -> np.ndarray:
    return np.array([n // k + (1 if j < n % k else 0) for j in range(k)], dtype=np.int64)


def _deal(labels, table, seed) -> list[np.ndarray]:
    # shuffle each class, then cut it into consecutive runs per partition
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[] for _ in range(table.shape[1])]
    for row, c in enumerate(np.unique(labels)):
        idx = rng.permutation(np.flatnonzero(labels == c))
        bounds = np.concatenate([[0], np.cumsum(table[row])])
        for j in range(table.shape[1]):
            parts[j].append(idx[bounds[j]:bounds[j + 1]])
    return [np.sort(np.concatenate(p)).astype(np.int64) for p in parts]


def split_indices(labels, fractions=(0.7, 0.1, 0.2), seed: int = 0,
                  min_class_size: int = 3) -> tuple[np.ndarray, ...]:
    """Stratified index partition; one sorted index array per fraction."""
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    small = [int(c) for c, n in zip(classes, counts) if n < min_class_size]
    if small:
        raise DataError(f"class(es) {small} have fewer than {min_class_size} samples")
    table = allocate_counts(counts, holdout_sizes(len(labels), fractions))
    return tuple(_deal(labels, table, seed))


def kfold_indices(labels, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold: ``k`` pairs of sorted (train, test) index arrays.

    Fold sizes differ by at most one and every class gets within one sample
    of its proportional share of each fold.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds dataset size {n}")
    _, counts = np.unique(labels, return_counts=True)
    folds = _deal(labels, allocate_counts(counts, fold_sizes(n, k)), seed)
    everything = np.arange(n)
    return [(np.setdiff1d(everything, test), test) for test in folds]


def split_dataset(dataset: EncodedDataset, spec: SplitSpec) -> tuple[EncodedDataset, EncodedDataset, EncodedDataset]:
    if len(dataset) < 10:
        raise DataError(f"dataset has {len(dataset)} examples; at least 10 are needed to split")
    train, val, test = split_indices(dataset.labels, spec.fractions, spec.seed)
    return dataset.subset(train), dataset.subset(val), dataset.subset(test)


def kfold_split(dataset: EncodedDataset, k: int, seed: int = 0) -> list[tuple[EncodedDataset, EncodedDataset]]:
    return [(dataset.subset(tr), dataset.subset(te)) for tr, te in kfold_indices(dataset.labels, k, seed)]
