"""CBOW word2vec with negative sampling, trained by plain SGD.

For every position the context vectors inside the window are averaged
into ``h``; the center word's output vector is pushed towards ``h`` and
``negatives`` words drawn from the unigram^0.75 distribution are pushed
away. Input vectors start uniform in [-0.5/D, 0.5/D], output vectors at
zero, and the learning rate decays linearly over all training tokens.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..corpus.vocab import PAD_ID, UNK_ID, Vocabulary, build_vocabulary
from ..errors import DataError
from .matrix import EmbeddingMatrix

log = logging.getLogger(__name__)


@dataclass
class Word2VecConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 10
    epochs: int = 5
    learning_rate: float = 0.05
    min_learning_rate_ratio: float = 1e-4
    min_count: int = 1
    subsample_threshold: float = 0.0
    seed: int = 0
    workers: int = 1
    power: float = 0.75

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "min_count", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.subsample_threshold < 0:
            raise ValueError("subsample_threshold must be >= 0")


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return np.exp(_log_sigmoid(x))


def negative_sampling_loss(center_vec, context_avg, negative_vecs) -> float:
    """``-ln s(u_c . h) - sum_n ln s(-u_n . h)`` for one training position."""
    return negative_sampling_grads(center_vec, context_avg, negative_vecs)[0]


def negative_sampling_grads(center_vec, context_avg, negative_vecs):
    """Loss plus gradients w.r.t. the center output vector, the context
    average and each negative output vector."""
    u_c = np.asarray(center_vec, dtype=np.float64)
    h = np.asarray(context_avg, dtype=np.float64)
    if u_c.ndim != 1 or u_c.shape != h.shape:
        raise ValueError(f"dimension mismatch: center {u_c.shape}, context {h.shape}")
    u_n = np.asarray(negative_vecs, dtype=np.float64)
    if u_n.size == 0:
        u_n = u_n.reshape(0, h.shape[0])
    if u_n.ndim != 2 or u_n.shape[1] != h.shape[0]:
        raise ValueError(f"dimension mismatch: negatives {u_n.shape}, context {h.shape}")
    s_c = u_c @ h
    s_n = u_n @ h
    loss = float(-_log_sigmoid(s_c) - _log_sigmoid(-s_n).sum())
    e_c = _sigmoid(s_c) - 1.0  # d loss / d s_c
    e_n = _sigmoid(s_n)        # d loss / d s_n
    d_center = e_c * h
    d_context = e_c * u_c + e_n @ u_n
    d_negatives = np.outer(e_n, h)
    return loss, d_center, d_context, d_negatives


class CbowTrainer:
    """Holds the vocabulary, both weight matrices and the training history."""

    def __init__(self, corpus: Sequence[Sequence[str]], config: Word2VecConfig):
        self.config = config
        self.corpus = [list(doc) for doc in corpus]
        if not any(self.corpus):
            raise DataError("word2vec corpus is empty")
        self.vocab = build_vocabulary(self.corpus, config.min_count)
        n_words = len(self.vocab) - 2
        if n_words < 2:
            raise DataError(f"word2vec needs at least 2 distinct tokens after min_count filtering, got {n_words}")
        rng = np.random.default_rng(config.seed)
        dim = config.dim
        self.w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(self.vocab), dim))
        self.w_in[PAD_ID] = 0.0
        self.w_out = np.zeros((len(self.vocab), dim))

        self.counts = np.zeros(len(self.vocab), dtype=np.int64)
        self.docs = []
        for doc in self.corpus:
            ids = np.array([self.vocab.lookup(t) for t in doc], dtype=np.int64)
            ids = ids[ids != UNK_ID]  # below min_count
            np.add.at(self.counts, ids, 1)
            if len(ids):
                self.docs.append(ids)
        weights = self.counts.astype(np.float64) ** config.power
        weights[[PAD_ID, UNK_ID]] = 0.0
        self.noise_cdf = np.cumsum(weights / weights.sum())
        self.noise_cdf[-1] = 1.0
        self.total_words = int(self.counts.sum())
        self.epoch_losses: list[float] = []
        self._processed = 0

    # -- sampling ------------------------------------------------------------
    def _draw_negatives(self, rng, center: int) -> np.ndarray:
        k = self.config.negatives
        neg = np.searchsorted(self.noise_cdf, rng.random(k), side="right")
        clash = neg == center
        while clash.any():
            neg[clash] = np.searchsorted(self.noise_cdf, rng.random(int(clash.sum())), side="right")
            clash = neg == center
        return neg

    def _subsample(self, rng, ids: np.ndarray) -> np.ndarray:
        t = self.config.subsample_threshold
        if t <= 0:
            return ids
        freq = self.counts[ids] / self.total_words
        keep_prob = (np.sqrt(freq / t) + 1.0) * t / freq
        return ids[rng.random(len(ids)) < keep_prob]

    def _lr(self) -> float:
        cfg = self.config
        progress = self._processed / (cfg.epochs * self.total_words + 1)
        return max(cfg.learning_rate * (1.0 - progress), cfg.learning_rate * cfg.min_learning_rate_ratio)

    # -- one position ----------------------------------------------------------
    def train_position(self, ids: np.ndarray, pos: int, rng, lr: float) -> float | None:
        window = self.config.window
        ctx = np.concatenate([ids[max(0, pos - window):pos], ids[pos + 1:pos + 1 + window]])
        if len(ctx) == 0:
            return None
        center = int(ids[pos])
        h = self.w_in[ctx].mean(axis=0)
        targets = np.concatenate([[center], self._draw_negatives(rng, center)])
        u = self.w_out[targets]
        scores = u @ h
        err = _sigmoid(scores)
        err[0] -= 1.0
        loss = float(-_log_sigmoid(scores[0]) - _log_sigmoid(-scores[1:]).sum())
        grad_h = err @ u
        np.add.at(self.w_out, targets, -lr * np.outer(err, h))
        np.add.at(self.w_in, ctx, -lr * grad_h / len(ctx))
        return loss

    def _train_docs(self, docs, rng, losses: list) -> None:
        total = 0.0
        n = 0
        for ids in docs:
            ids = self._subsample(rng, ids)
            lr = self._lr()
            for pos in range(len(ids)):
                loss = self.train_position(ids, pos, rng, lr)
                if loss is not None:
                    total += loss
                    n += 1
            self._processed += len(ids)
        losses.append((total, n))

    def train(self) -> "CbowTrainer":
        cfg = self.config
        rng = np.random.default_rng(cfg.seed + 1)
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(self.docs))
            docs = [self.docs[i] for i in order]
            parts: list[tuple[float, int]] = []
            if cfg.workers == 1:
                self._train_docs(docs, rng, parts)
            else:
                # lock-free: workers update the shared matrices concurrently
                shards = [docs[w::cfg.workers] for w in range(cfg.workers)]
                threads = [threading.Thread(target=self._train_docs,
                                            args=(shard, np.random.default_rng([cfg.seed, epoch, w]), parts))
                           for w, shard in enumerate(shards)]
                for t in threads:
                    t.start()
                for t in threads:
                    t.join()
            total = sum(p[0] for p in parts)
            count = sum(p[1] for p in parts)
            self.epoch_losses.append(total / max(count, 1))
            log.info("word2vec epoch %d/%d: mean loss %.4f", epoch + 1, cfg.epochs, self.epoch_losses[-1])
        return self

    def embedding(self) -> EmbeddingMatrix:
        values = self.w_in.copy()
        values[PAD_ID] = 0.0
        return EmbeddingMatrix(values)


def train_word2vec_cbow(corpus: Iterable[Sequence[str]], config: Word2VecConfig | None = None
                        ) -> tuple[Vocabulary, EmbeddingMatrix]:
    """Train CBOW vectors; returns the training vocabulary and its V x D matrix.

    Single-worker training is deterministic for a given seed. With
    ``workers > 1`` updates race (Hogwild) and results vary run to run.
    """
    trainer = CbowTrainer(list(corpus), config or Word2VecConfig()).train()
    return trainer.vocab, trainer.embedding()
