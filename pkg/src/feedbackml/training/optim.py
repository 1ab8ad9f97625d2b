from __future__ import annotations

import numpy as np

from ..errors import ConfigError, NumericError
from ..tensorcore import Tensor


def global_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale ``grads`` so their joint L2 norm is at most ``max_norm``.

    Returns the (possibly rescaled) gradients and the norm before clipping.
    """
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


def _check_finite(params: list[Tensor], grads) -> None:
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            name = params[i].name or f"param[{i}]"
            raise NumericError(f"non-finite gradient for {name}")


class Optimizer:
    def __init__(self, params: list[Tensor], lr: float, clip_norm: float | None = None):
        if lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {lr}")
        if clip_norm is not None and clip_norm <= 0:
            raise ConfigError(f"clip norm must be > 0, got {clip_norm}")
        self.params = list(params)
        self.lr = lr
        self.clip_norm = clip_norm
        self.steps = 0

    def step(self, grads=None) -> float:
        """Apply one update; ``grads`` defaults to each parameter's ``.grad``.

        Returns the global gradient norm before clipping.
        """
        if grads is None:
            grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        if len(grads) != len(self.params):
            raise ValueError(f"{len(grads)} gradients for {len(self.params)} parameters")
        for p, g in zip(self.params, grads):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        _check_finite(self.params, grads)
        norm = global_norm(grads)
        if self.clip_norm is not None:
            grads, norm = clip_grad_norm(grads, self.clip_norm)
        self.steps += 1
        for i, (p, g) in enumerate(zip(self.params, grads)):
            self._update(i, p, g)
        return norm

    def _update(self, i: int, p: Tensor, g: np.ndarray) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    """``v <- momentum * v + g; p <- p - lr * v``."""

    def __init__(self, params, lr: float = 0.01, momentum: float = 0.0, clip_norm=None):
        super().__init__(params, lr, clip_norm)
        if not 0 <= momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {momentum}")
        self.momentum = momentum
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def _update(self, i, p, g):
        if self.momentum:
            v = self.velocity[i]
            v *= self.momentum
            v += g
            g = v
        p.data -= (self.lr * g).astype(p.data.dtype, copy=False)


class Adam(Optimizer):
    """Adam with bias-corrected first and second moments."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, clip_norm=None):
        super().__init__(params, lr, clip_norm)
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigError(f"betas must be in [0, 1), got {beta1}, {beta2}")
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def _update(self, i, p, g):
        b1, b2 = self.beta1, self.beta2
        m, v = self.m[i], self.v[i]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * np.square(g)
        m_hat = m / (1 - b1 ** self.steps)
        v_hat = v / (1 - b2 ** self.steps)
        p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype, copy=False)


def make_optimizer(name: str, params, *, lr: float, beta1=0.9, beta2=0.999, eps=1e-8,
                   momentum=0.0, clip_norm=None) -> Optimizer:
    if name == "adam":
        return Adam(params, lr, beta1, beta2, eps, clip_norm)
    if name == "sgd":
        return SGD(params, lr, momentum, clip_norm)
    raise ConfigError(f"unknown optimizer {name!r}; expected 'adam' or 'sgd'")
