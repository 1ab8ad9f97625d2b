"""LSTM cell and (bi)directional LSTM layers.

Parameter layout per direction, gate order ``[i, f, g, o]`` along the last
axis of every array::

    W : N x 4H   (input kernel)
    U : H x 4H   (recurrent kernel)
    b : 4H

A whole layer is one graph node: the forward pass unrolls over time and
caches per-step activations, the backward pass is explicit
backpropagation through time. That keeps the graph small for L=255.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ops import _as_rng, _check_rate, _sigmoid
from .tensor import Tensor


@dataclass
class _StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def _step_forward(x, h_prev, c_prev, W, U, b):
    hidden = h_prev.shape[1]
    z = x @ W + h_prev @ U + b
    i = _sigmoid(z[:, :hidden])
    f = _sigmoid(z[:, hidden:2 * hidden])
    g = np.tanh(z[:, 2 * hidden:3 * hidden])
    o = _sigmoid(z[:, 3 * hidden:])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, _StepCache(x, h_prev, c_prev, i, f, g, o, tanh_c)


def _step_backward(cache: _StepCache, dh, dc, W, U):
    """Gradients of one step given upstream dh and dc (dc excludes the h path)."""
    i, f, g, o, tanh_c = cache.i, cache.f, cache.g, cache.o, cache.tanh_c
    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dz = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * cache.c_prev * f * (1.0 - f),
        dc * i * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=1)
    return {
        "x": dz @ W.T,
        "h_prev": dz @ U.T,
        "c_prev": dc * f,
        "W": cache.x.T @ dz,
        "U": cache.h_prev.T @ dz,
        "b": dz.sum(axis=0),
    }


def _check_params(n_in: int, W: Tensor, U: Tensor, b: Tensor) -> int:
    hidden = U.shape[0]
    if W.shape != (n_in, 4 * hidden) or U.shape != (hidden, 4 * hidden) or b.shape != (4 * hidden,):
        raise ValueError(
            f"LSTM parameter shapes W{W.shape} U{U.shape} b{b.shape} do not fit "
            f"input size {n_in} and hidden size {hidden}")
    return hidden


def lstm_cell_step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
                   W: Tensor, U: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM step: returns ``(h_t, c_t)``."""
    if x_t.data.ndim != 2 or h_prev.shape != c_prev.shape or h_prev.shape[0] != x_t.shape[0]:
        raise ValueError(f"lstm_cell_step shape mismatch: x {x_t.shape}, h {h_prev.shape}, c {c_prev.shape}")
    hidden = _check_params(x_t.shape[1], W, U, b)
    if h_prev.shape[1] != hidden:
        raise ValueError(f"h_prev has {h_prev.shape[1]} units, parameters expect {hidden}")
    h, c, cache = _step_forward(x_t.data, h_prev.data, c_prev.data, W.data, U.data, b.data)
    parents = (x_t, h_prev, c_prev, W, U, b)
    h_out = Tensor._from_op(h, parents, "lstm_h")
    c_out = Tensor._from_op(c, parents, "lstm_c")

    # backprop is linear in the upstream grads, so each output pushes its
    # own share independently
    def _push(dh, dc):
        grads = _step_backward(cache, dh, dc, W.data, U.data)
        for name, tensor in zip(("x", "h_prev", "c_prev", "W", "U", "b"), parents):
            if tensor.requires_grad:
                tensor.accumulate(grads[name])

    h_out._backward = lambda: _push(h_out.grad, np.zeros_like(c))
    c_out._backward = lambda: _push(np.zeros_like(h), c_out.grad)
    return h_out, c_out


def _run_direction(x, W, U, b, in_mask, rec_mask, reverse):
    """Unroll one direction over a B x L x N array; returns (hs, caches)."""
    batch, length, _ = x.shape
    hidden = U.shape[0]
    h = np.zeros((batch, hidden), dtype=x.dtype)
    c = np.zeros((batch, hidden), dtype=x.dtype)
    hs = np.empty((batch, length, hidden), dtype=x.dtype)
    caches = []
    steps = range(length - 1, -1, -1) if reverse else range(length)
    for t in steps:
        xt = x[:, t] if in_mask is None else x[:, t] * in_mask
        hp = h if rec_mask is None else h * rec_mask
        h, c, cache = _step_forward(xt, hp, c, W, U, b)
        hs[:, t] = h
        caches.append((t, cache))
    return hs, caches


def _bptt(caches, d_hs, W, U, in_mask, rec_mask, x_shape):
    """Backward through one direction. ``d_hs`` is B x L x H, indexed by time."""
    dx = np.zeros(x_shape, dtype=d_hs.dtype)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(W.shape[1], dtype=d_hs.dtype)
    dh_next = np.zeros(d_hs[:, 0].shape, dtype=d_hs.dtype)
    dc_next = np.zeros_like(dh_next)
    for t, cache in reversed(caches):
        grads = _step_backward(cache, d_hs[:, t] + dh_next, dc_next, W, U)
        dW += grads["W"]
        dU += grads["U"]
        db += grads["b"]
        dx[:, t] = grads["x"] if in_mask is None else grads["x"] * in_mask
        dh_next = grads["h_prev"] if rec_mask is None else grads["h_prev"] * rec_mask
        dc_next = grads["c_prev"]
    return dx, dW, dU, db


def _dropout_mask(rng, shape, rate, dtype):
    if rate == 0.0:
        return None
    keep = rng.random(shape) >= rate
    return keep.astype(dtype) / (1.0 - rate)


def lstm_layer(x: Tensor, W: Tensor, U: Tensor, b: Tensor, *, reverse: bool = False,
               return_sequences: bool = False, dropout: float = 0.0,
               recurrent_dropout: float = 0.0, mode: str = "infer", seed=None) -> Tensor:
    """Unidirectional LSTM over a ``B x L x N`` tensor.

    With ``reverse=True`` the sequence is consumed from t=L-1 down to 0 and
    the "last" state is the one at t=0. Sequence outputs stay aligned with
    the input time axis.
    """
    return _lstm_node(x, [(W, U, b, reverse)], return_sequences, dropout,
                      recurrent_dropout, mode, seed)


def bilstm_layer(x: Tensor, forward_params, backward_params, *, return_sequences: bool = False,
                 dropout: float = 0.0, recurrent_dropout: float = 0.0,
                 mode: str = "infer", seed=None) -> Tensor:
    """Bidirectional LSTM: ``[forward ; backward]`` concatenated on the last axis.

    ``forward_params`` and ``backward_params`` are ``(W, U, b)`` triples. The
    output is ``B x L x 2H`` with ``return_sequences``, otherwise the two
    directions' final states, ``B x 2H``. In train mode ``dropout`` masks the
    input connections and ``recurrent_dropout`` masks ``h_prev``; each mask
    is drawn once per sequence and held fixed over time.
    """
    Wf, Uf, bf = forward_params
    Wb, Ub, bb = backward_params
    return _lstm_node(x, [(Wf, Uf, bf, False), (Wb, Ub, bb, True)], return_sequences,
                      dropout, recurrent_dropout, mode, seed)


def _lstm_node(x, directions, return_sequences, dropout, recurrent_dropout, mode, seed):
    if x.data.ndim != 3 or x.shape[1] < 1:
        raise ValueError(f"LSTM input must be B x L x N with L >= 1, got {x.shape}")
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    _check_rate(dropout)
    _check_rate(recurrent_dropout)
    batch, length, n_in = x.shape
    rng = _as_rng(seed) if mode == "train" else None

    runs = []
    for W, U, b, reverse in directions:
        hidden = _check_params(n_in, W, U, b)
        in_mask = rec_mask = None
        if rng is not None:
            in_mask = _dropout_mask(rng, (batch, n_in), dropout, x.data.dtype)
            rec_mask = _dropout_mask(rng, (batch, hidden), recurrent_dropout, x.data.dtype)
        hs, caches = _run_direction(x.data, W.data, U.data, b.data, in_mask, rec_mask, reverse)
        runs.append((hs, caches, in_mask, rec_mask, reverse))

    if return_sequences:
        value = np.concatenate([r[0] for r in runs], axis=2)
    else:
        value = np.concatenate([r[0][:, 0 if r[4] else -1] for r in runs], axis=1)

    parents = [x]
    for W, U, b, _ in directions:
        parents.extend((W, U, b))
    out = Tensor._from_op(value, parents, "bilstm" if len(directions) == 2 else "lstm")

    def _backward():
        offset = 0
        dx_total = np.zeros_like(x.data)
        for (W, U, b, _), (hs, caches, in_mask, rec_mask, reverse) in zip(directions, runs):
            hidden = U.shape[0]
            if return_sequences:
                d_hs = np.ascontiguousarray(out.grad[:, :, offset:offset + hidden])
            else:
                d_hs = np.zeros_like(hs)
                d_hs[:, 0 if reverse else -1] = out.grad[:, offset:offset + hidden]
            offset += hidden
            dx, dW, dU, db = _bptt(caches, d_hs, W.data, U.data, in_mask, rec_mask, x.shape)
            dx_total += dx
            for tensor, g in ((W, dW), (U, dU), (b, db)):
                if tensor.requires_grad:
                    tensor.accumulate(g)
        if x.requires_grad:
            x.accumulate(dx_total)

    out._backward = _backward
    return out
