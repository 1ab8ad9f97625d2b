from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError
from ..tensorcore import Tensor, parameter
from .base import Model, embedding_values, glorot_uniform


@dataclass
class BiLstmConfig:
    vocab_size: int
    num_classes: int
    dim: int = 300
    seq_len: int = 255
    spatial_dropout: float = 0.2
    lstm1_units: int = 300
    lstm2_units: int = 150
    lstm2_dropout: float = 0.2
    lstm2_recurrent_dropout: float = 0.2
    dense_units: int = 150
    dropout_rate: float = 0.5
    embedding_trainable: bool = True
    # False: the second recurrent layer runs backward only (alternative reading)
    lstm2_bidirectional: bool = True

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.seq_len < 1:
            raise ConfigError(f"seq_len must be >= 1, got {self.seq_len}")
        for name in ("spatial_dropout", "lstm2_dropout", "lstm2_recurrent_dropout", "dropout_rate"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1), got {getattr(self, name)}")


class BiLstmClassifier(Model):
    """embedding -> spatial dropout -> BiLSTM (sequences) -> BiLSTM (final
    states) -> dense(relu) -> dropout -> dense -> softmax."""

    arch = "bilstm"

    def _direction(self, prefix):
        p = self.params
        return p[prefix + ".W"], p[prefix + ".U"], p[prefix + ".b"]

    def forward(self, ids, mode: str = "infer", seed=None) -> Tensor:
        ids = self._check_ids(ids)
        cfg, p = self.config, self.params
        rng = np.random.default_rng(seed) if mode == "train" else None
        x = tc.embedding_lookup(p["embedding"], ids)
        x = tc.spatial_dropout1d(x, cfg.spatial_dropout, mode, rng)
        x = tc.bilstm_layer(x, self._direction("lstm1.fwd"), self._direction("lstm1.bwd"),
                            return_sequences=True, mode=mode, seed=rng)
        if cfg.lstm2_bidirectional:
            x = tc.bilstm_layer(x, self._direction("lstm2.fwd"), self._direction("lstm2.bwd"),
                                dropout=cfg.lstm2_dropout, recurrent_dropout=cfg.lstm2_recurrent_dropout,
                                mode=mode, seed=rng)
        else:
            x = tc.lstm_layer(x, *self._direction("lstm2.bwd"), reverse=True,
                              dropout=cfg.lstm2_dropout, recurrent_dropout=cfg.lstm2_recurrent_dropout,
                              mode=mode, seed=rng)
        x = tc.dense(x, p["dense.weight"], p["dense.bias"], "relu")
        x = tc.dropout(x, cfg.dropout_rate, mode, rng)
        logits = tc.dense(x, p["out.weight"], p["out.bias"])
        return tc.softmax(logits)


def _lstm_params(rng, prefix: str, n_in: int, hidden: int) -> dict[str, Tensor]:
    bias = np.zeros(4 * hidden)
    bias[hidden:2 * hidden] = 1.0  # forget gate
    return {
        prefix + ".W": parameter(glorot_uniform(rng, (n_in, 4 * hidden), n_in, 4 * hidden), prefix + ".W"),
        prefix + ".U": parameter(glorot_uniform(rng, (hidden, 4 * hidden), hidden, 4 * hidden), prefix + ".U"),
        prefix + ".b": parameter(bias, prefix + ".b"),
    }


def build_bilstm(config: BiLstmConfig, embedding, seed: int = 0) -> BiLstmClassifier:
    emb = embedding_values(embedding, config)
    rng = np.random.default_rng(seed)
    h1, h2 = config.lstm1_units, config.lstm2_units
    params = {"embedding": Tensor(emb, requires_grad=config.embedding_trainable, name="embedding")}
    params.update(_lstm_params(rng, "lstm1.fwd", config.dim, h1))
    params.update(_lstm_params(rng, "lstm1.bwd", config.dim, h1))
    if config.lstm2_bidirectional:
        params.update(_lstm_params(rng, "lstm2.fwd", 2 * h1, h2))
    params.update(_lstm_params(rng, "lstm2.bwd", 2 * h1, h2))
    final_width = 2 * h2 if config.lstm2_bidirectional else h2
    params["dense.weight"] = parameter(glorot_uniform(rng, (final_width, config.dense_units),
                                                      final_width, config.dense_units), "dense.weight")
    params["dense.bias"] = parameter(np.zeros(config.dense_units), "dense.bias")
    params["out.weight"] = parameter(glorot_uniform(rng, (config.dense_units, config.num_classes),
                                                    config.dense_units, config.num_classes), "out.weight")
    params["out.bias"] = parameter(np.zeros(config.num_classes), "out.bias")
    return BiLstmClassifier(config, params)
