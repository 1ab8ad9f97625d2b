"""Layer operations used by the two classifier architectures.

All ops take and return :class:`Tensor` objects. Shapes follow the
batch-major convention ``B x L x C`` for sequences.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh", "softmax")


def _as_rng(seed) -> np.random.Generator:
    # default_rng passes an existing Generator through untouched
    return np.random.default_rng(seed)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def embedding_lookup(matrix: Tensor, ids, trainable: bool | None = None, pad_id: int = 0) -> Tensor:
    """Gather rows of ``matrix`` for a ``B x L`` id array.

    The backward pass scatter-adds into the matrix rows; the PAD row never
    receives gradient. ``trainable=None`` defers to ``matrix.requires_grad``.
    """
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError(f"ids must be B x L, got shape {ids.shape}")
    vocab_size = matrix.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        bad = int(ids.max()) if ids.max() >= vocab_size else int(ids.min())
        raise IndexError(f"token id {bad} out of range for vocabulary of size {vocab_size}")
    if trainable is None:
        trainable = matrix.requires_grad
    parents = (matrix,) if trainable else ()
    out = Tensor._from_op(matrix.data[ids], parents, "embedding")
    if not trainable:
        return out

    def _backward():
        g = np.zeros_like(matrix.data)
        np.add.at(g, ids.reshape(-1), out.grad.reshape(-1, matrix.shape[1]))
        if pad_id is not None:
            g[pad_id] = 0.0
        matrix.accumulate(g)

    out._backward = _backward
    return out


def activation(x: Tensor, kind: str | None) -> Tensor:
    if kind is None or kind == "linear":
        return x
    if kind not in ACTIVATIONS:
        raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    if kind == "relu":
        y = np.maximum(x.data, 0)
        deriv = lambda: (x.data > 0).astype(x.data.dtype)  # noqa: E731
    elif kind == "sigmoid":
        y = _sigmoid(x.data)
        deriv = lambda: y * (1 - y)  # noqa: E731
    elif kind == "tanh":
        y = np.tanh(x.data)
        deriv = lambda: 1 - y * y  # noqa: E731
    else:
        return softmax(x)
    out = Tensor._from_op(y, (x,), kind)

    def _backward():
        x.accumulate(out.grad * deriv())

    out._backward = _backward
    return out


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, max-subtracted for stability."""
    p = _softmax(x.data)
    out = Tensor._from_op(p, (x,), "softmax")

    def _backward():
        g = out.grad
        x.accumulate(p * (g - (g * p).sum(axis=-1, keepdims=True)))

    out._backward = _backward
    # cross_entropy_loss uses this to take the fused (p - onehot) shortcut
    out._ctx = x
    return out


def dense(x: Tensor, weights: Tensor, bias: Tensor | None = None, kind: str | None = None) -> Tensor:
    """Affine map ``x @ W + b`` followed by an optional activation."""
    if x.data.ndim != 2 or weights.data.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ValueError(f"dense shape mismatch: input {x.shape}, weights {weights.shape}")
    if bias is not None and bias.shape != (weights.shape[1],):
        raise ValueError(f"dense bias shape {bias.shape} != ({weights.shape[1]},)")
    z = x.data @ weights.data
    if bias is not None:
        z = z + bias.data
    parents = (x, weights) if bias is None else (x, weights, bias)
    out = Tensor._from_op(z, parents, "dense")

    def _backward():
        g = out.grad
        if x.requires_grad:
            x.accumulate(g @ weights.data.T)
        if weights.requires_grad:
            weights.accumulate(x.data.T @ g)
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=0))

    out._backward = _backward
    return activation(out, kind)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor | None = None, kind: str | None = None) -> Tensor:
    """Valid cross-correlation along the length axis.

    ``x`` is ``B x L x C_in``, ``kernels`` is ``C_out x K x C_in``; the
    result is ``B x (L-K+1) x C_out``.
    """
    if x.data.ndim != 3 or kernels.data.ndim != 3:
        raise ValueError(f"conv1d expects B x L x C input and C_out x K x C_in kernels, got {x.shape}, {kernels.shape}")
    batch, length, c_in = x.shape
    c_out, width, k_in = kernels.shape
    if k_in != c_in:
        raise ValueError(f"conv1d channel mismatch: input has {c_in}, kernels expect {k_in}")
    if length < width:
        raise ValueError(f"conv1d needs sequence length L >= kernel size K, got L={length}, K={width}")
    out_len = length - width + 1
    # B x L' x C_in x K -> B x L' x K x C_in
    windows = sliding_window_view(x.data, width, axis=1).transpose(0, 1, 3, 2)
    cols = windows.reshape(batch * out_len, width * c_in)
    flat_k = kernels.data.reshape(c_out, width * c_in)
    z = cols @ flat_k.T
    if bias is not None:
        z += bias.data
    parents = (x, kernels) if bias is None else (x, kernels, bias)
    out = Tensor._from_op(z.reshape(batch, out_len, c_out), parents, "conv1d")

    def _backward():
        g = out.grad.reshape(batch * out_len, c_out)
        if kernels.requires_grad:
            kernels.accumulate((g.T @ cols).reshape(kernels.shape))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=0))
        if x.requires_grad:
            dcols = (g @ flat_k).reshape(batch, out_len, width, c_in)
            dx = np.zeros_like(x.data)
            for k in range(width):
                dx[:, k:k + out_len] += dcols[:, :, k]
            x.accumulate(dx)

    out._backward = _backward
    return activation(out, kind)


def global_max_pool1d(x: Tensor) -> Tensor:
    """Per-channel max over the length axis; ties send gradient to the first max."""
    if x.data.ndim != 3 or x.shape[1] < 1:
        raise ValueError(f"global_max_pool1d expects B x L x C with L >= 1, got {x.shape}")
    idx = x.data.argmax(axis=1)  # first maximal position
    b_idx, c_idx = np.meshgrid(np.arange(x.shape[0]), np.arange(x.shape[2]), indexing="ij")
    out = Tensor._from_op(x.data[b_idx, idx, c_idx], (x,), "global_max_pool1d")

    def _backward():
        dx = np.zeros_like(x.data)
        dx[b_idx, idx, c_idx] = out.grad
        x.accumulate(dx)

    out._backward = _backward
    return out


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")


def _masked(x: Tensor, mask: np.ndarray, op: str) -> Tensor:
    out = Tensor._from_op(x.data * mask, (x,), op)

    def _backward():
        x.accumulate(out.grad * mask)

    out._backward = _backward
    return out


def dropout(x: Tensor, rate: float, mode: str = "infer", seed=None) -> Tensor:
    """Inverted dropout: survivors are scaled by 1/(1-rate) at train time."""
    _check_rate(rate)
    if mode == "infer" or rate == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    keep = _as_rng(seed).random(x.shape) >= rate
    mask = keep.astype(x.data.dtype) / (1.0 - rate)
    return _masked(x, mask, "dropout")


def spatial_dropout1d(x: Tensor, rate: float, mode: str = "infer", seed=None) -> Tensor:
    """Drop whole channels of a ``B x L x C`` tensor, same mask at every step."""
    _check_rate(rate)
    if mode == "infer" or rate == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if x.data.ndim != 3:
        raise ValueError(f"spatial_dropout1d expects B x L x C, got {x.shape}")
    batch, _, channels = x.shape
    keep = _as_rng(seed).random((batch, 1, channels)) >= rate
    mask = keep.astype(x.data.dtype) / (1.0 - rate)
    return _masked(x, mask, "spatial_dropout1d")


def cross_entropy_loss(probs: Tensor, labels, clamp: float = 1e-12) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under ``probs`` (B x C).

    When ``probs`` came straight out of :func:`softmax`, the backward pass
    goes directly to the logits as ``(probs - onehot) / B``.
    """
    labels = np.asarray(labels)
    batch, n_classes = probs.shape
    if labels.shape != (batch,):
        raise ValueError(f"labels shape {labels.shape} != ({batch},)")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"label {int(labels.max())} out of range for {n_classes} classes")
    rows = np.arange(batch)
    picked = np.maximum(probs.data[rows, labels], clamp)
    value = np.asarray(-np.log(picked).mean(), dtype=probs.data.dtype)

    if probs._op == "softmax" and probs._ctx is not None:
        logits = probs._ctx
        out = Tensor._from_op(value, (logits,), "softmax_cross_entropy")

        def _backward():
            g = probs.data.copy()
            g[rows, labels] -= 1.0
            logits.accumulate(g * (out.grad / batch))
    else:
        out = Tensor._from_op(value, (probs,), "cross_entropy")

        def _backward():
            g = np.zeros_like(probs.data)
            live = probs.data[rows, labels] >= clamp
            g[rows, labels] = np.where(live, -1.0 / picked, 0.0) / batch
            probs.accumulate(g * out.grad)

    out._backward = _backward
    return out
