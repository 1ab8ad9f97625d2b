from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError
from ..tensorcore import Tensor, parameter
from .base import Model, embedding_values, glorot_uniform


@dataclass
class CnnConfig:
    vocab_size: int
    num_classes: int
    dim: int = 300
    seq_len: int = 255
    conv1_filters: int = 300
    conv1_kernel: int = 5
    conv2_filters: int = 300
    conv2_kernel: int = 4
    dense_units: int = 300
    dropout_rate: float = 0.5
    embedding_trainable: bool = True

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.seq_len - self.conv1_kernel + 1 < self.conv2_kernel:
            raise ConfigError(f"seq_len {self.seq_len} too short for kernels "
                              f"{self.conv1_kernel} and {self.conv2_kernel}")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


class CnnClassifier(Model):
    """embedding -> conv(relu) -> conv(relu) -> global max pool -> dense(relu)
    -> dropout -> dense -> softmax."""

    arch = "cnn"

    def forward(self, ids, mode: str = "infer", seed=None) -> Tensor:
        ids = self._check_ids(ids)
        cfg, p = self.config, self.params
        rng = np.random.default_rng(seed) if mode == "train" else None
        x = tc.embedding_lookup(p["embedding"], ids)
        x = tc.conv1d(x, p["conv1.kernel"], p["conv1.bias"], "relu")
        x = tc.conv1d(x, p["conv2.kernel"], p["conv2.bias"], "relu")
        x = tc.global_max_pool1d(x)
        x = tc.dense(x, p["dense.weight"], p["dense.bias"], "relu")
        x = tc.dropout(x, cfg.dropout_rate, mode, rng)
        logits = tc.dense(x, p["out.weight"], p["out.bias"])
        return tc.softmax(logits)


def build_cnn(config: CnnConfig, embedding, seed: int = 0) -> CnnClassifier:
    emb = embedding_values(embedding, config)
    rng = np.random.default_rng(seed)
    d, k1, f1, k2, f2 = config.dim, config.conv1_kernel, config.conv1_filters, config.conv2_kernel, config.conv2_filters
    params = {
        "embedding": Tensor(emb, requires_grad=config.embedding_trainable, name="embedding"),
        "conv1.kernel": parameter(glorot_uniform(rng, (f1, k1, d), k1 * d, k1 * f1), "conv1.kernel"),
        "conv1.bias": parameter(np.zeros(f1), "conv1.bias"),
        "conv2.kernel": parameter(glorot_uniform(rng, (f2, k2, f1), k2 * f1, k2 * f2), "conv2.kernel"),
        "conv2.bias": parameter(np.zeros(f2), "conv2.bias"),
        "dense.weight": parameter(glorot_uniform(rng, (f2, config.dense_units), f2, config.dense_units),
                                  "dense.weight"),
        "dense.bias": parameter(np.zeros(config.dense_units), "dense.bias"),
        "out.weight": parameter(glorot_uniform(rng, (config.dense_units, config.num_classes),
                                               config.dense_units, config.num_classes), "out.weight"),
        "out.bias": parameter(np.zeros(config.num_classes), "out.bias"),
    }
    return CnnClassifier(config, params)
