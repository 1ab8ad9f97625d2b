"""Shared model machinery: parameter registry, batching, weight init."""
from __future__ import annotations

from dataclasses import asdict
from typing import Iterator

import numpy as np

from ..embeddings.matrix import EmbeddingMatrix
from ..errors import ConfigError
from ..tensorcore import Tensor, get_default_dtype


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def embedding_values(embedding, config) -> np.ndarray:
    values = embedding.values if isinstance(embedding, EmbeddingMatrix) else np.asarray(embedding)
    if values.shape != (config.vocab_size, config.dim):
        raise ConfigError(f"embedding shape {values.shape} does not match config "
                          f"(vocab_size={config.vocab_size}, dim={config.dim})")
    return values


class Model:
    """A classifier: named parameters plus a forward pass to class probabilities."""

    arch: str = ""

    def __init__(self, config, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    def __repr__(self) -> str:
        return f"{type(self).__name__}(classes={self.config.num_classes}, params={param_count(self)})"

    # -- parameters ------------------------------------------------------------
    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self.params.items())

    def trainable_parameters(self) -> list[tuple[str, Tensor]]:
        return [(n, p) for n, p in self.params.items() if p.requires_grad]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {n: p.data.copy() for n, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        extra = set(state) - set(self.params)
        if missing or extra:
            raise ConfigError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name, p in self.params.items():
            if state[name].shape != p.shape:
                raise ConfigError(f"{name}: shape {state[name].shape} != {p.shape}")
            p.data = np.array(state[name], dtype=p.data.dtype)

    def config_dict(self) -> dict:
        return asdict(self.config)

    # -- forward ---------------------------------------------------------------
    def _check_ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.ndim != 2:
            raise ValueError(f"expected a B x L id batch, got shape {ids.shape}")
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise IndexError(f"token id out of range for vocabulary of size {self.config.vocab_size}")
        return ids

    def forward(self, ids, mode: str = "infer", seed=None) -> Tensor:
        raise NotImplementedError

    def predict_proba(self, ids, batch_size: int = 256) -> np.ndarray:
        ids = self._check_ids(ids)
        out = [self.forward(ids[k:k + batch_size], mode="infer").data
               for k in range(0, len(ids), batch_size)]
        if not out:
            return np.zeros((0, self.config.num_classes), dtype=get_default_dtype())
        return np.concatenate(out, axis=0)


def param_count(model: Model, include_embedding: bool = False) -> int:
    return int(sum(p.data.size for name, p in model.params.items()
                   if include_embedding or name != "embedding"))
