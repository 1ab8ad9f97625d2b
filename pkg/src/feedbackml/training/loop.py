"""Mini-batch training with validation-loss early stopping."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from ..tensorcore import backward, cross_entropy_loss
from .optim import global_norm, make_optimizer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 50
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    patience: int = 3
    restore_best: bool = True
    grad_clip_norm: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")


class EarlyStopping:
    """Tracks the best validation loss and says when to stop.

    ``update`` returns True once ``patience`` consecutive epochs fail to
    improve on the best loss seen so far.
    """

    def __init__(self, patience: int = 3):
        if patience < 1:
            raise ConfigError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_state = None
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float, state=None) -> bool:
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_state = state
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class History:
    rows: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    early_stopped: bool = False

    COLUMNS = ("epoch", "train_loss", "val_loss", "val_accuracy")

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([r["epoch"]] + [f"{r[c]:.10g}" for c in self.COLUMNS[1:]])
        return path


def dataset_loss(model, dataset, batch_size: int = 256) -> tuple[float, float]:
    """Mean cross-entropy and accuracy in inference mode."""
    probs = model.predict_proba(dataset.ids, batch_size=batch_size).astype(np.float64)
    labels = np.asarray(dataset.labels)
    picked = np.clip(probs[np.arange(len(labels)), labels], 1e-12, None)
    return float(-np.log(picked).mean()), float((probs.argmax(axis=1) == labels).mean())


def train_model(model, train_set, val_set, config: TrainConfig = TrainConfig(), history_path=None):
    """Fit ``model`` in place; returns ``(model, history)``.

    Each epoch shuffles the training set with a generator seeded by
    ``config.seed``; dropout masks draw from the same stream, so a fixed
    seed reproduces the run exactly.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError("training and validation sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    named = model.trainable_parameters()
    params = [p for _, p in named]
    opt = make_optimizer(config.optimizer, params, lr=config.learning_rate, beta1=config.beta1,
                         beta2=config.beta2, eps=config.eps, momentum=config.momentum,
                         clip_norm=config.grad_clip_norm)
    stopper = EarlyStopping(config.patience)
    history = History()
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size), start=1):
            idx = order[start:start + config.batch_size]
            model.zero_grad()
            probs = model.forward(train_set.ids[idx], mode="train", seed=int(rng.integers(2**63)))
            loss = cross_entropy_loss(probs, train_set.labels[idx])
            value = float(loss.data)
            grads = backward(loss, params)
            if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads):
                norms = {name: global_norm([g]) for (name, _), g in zip(named, grads)}
                detail = ", ".join(f"{k}={v:.3g}" for k, v in norms.items())
                raise NumericError(f"non-finite loss or gradient at epoch {epoch}, batch {b} "
                                   f"(loss={value}); grad norms: {detail}")
            opt.step(grads)
            total += value * len(idx)
        train_loss = total / n
        val_loss, val_acc = dataset_loss(model, val_set)
        history.rows.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
                             "val_accuracy": val_acc})
        log.info("epoch %d train_loss=%.4f val_loss=%.4f val_acc=%.4f", epoch, train_loss, val_loss, val_acc)
        history.stopped_epoch = epoch
        snapshot = model.state_dict() if config.restore_best else None
        if stopper.update(epoch, val_loss, snapshot):
            history.early_stopped = True
            break
    history.best_epoch = stopper.best_epoch
    if config.restore_best and stopper.best_state is not None:
        model.load_state_dict(stopper.best_state)
    if history_path is not None:
        history.write_csv(history_path)
    return model, history
