"""Central finite-difference gradient checking.

Only forward evaluations are used, so the check stays independent of the
backward code it validates. Run it under ``precision(np.float64)``.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward


def numerical_gradient(fn: Callable[[], Tensor], param: Tensor, eps: float = 1e-5) -> np.ndarray:
    if not param.data.flags.c_contiguous:
        raise ValueError("numerical_gradient perturbs in place and needs a contiguous tensor")
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + eps
        plus = float(fn().data)
        flat[k] = saved - eps
        minus = float(fn().data)
        flat[k] = saved
        out[k] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps entries whose true gradient is ~0 from turning
    round-off into a huge ratio.
    """
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def check_gradients(fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                    floor: float = 1e-6) -> dict[str, float]:
    """Compare backprop against finite differences for every tensor in ``params``.

    Returns the worst elementwise relative error per parameter (keyed by
    name, or position when unnamed).
    """
    for p in params:
        p.zero_grad()
    analytic = [g.copy() for g in backward(fn(), params)]
    worst = {}
    for idx, (p, a) in enumerate(zip(params, analytic)):
        n = numerical_gradient(fn, p, eps)
        worst[p.name or str(idx)] = float(relative_error(a, n, floor).max()) if a.size else 0.0
    return worst
