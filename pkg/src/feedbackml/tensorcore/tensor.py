"""Dense tensors with tape-free reverse-mode differentiation.

Every op that produces a Tensor records its parents and a closure that
pushes the output gradient back to them. ``backward`` orders the recorded
graph topologically and runs the closures in exact reverse order.

Gradients of leaves (parameters, inputs) accumulate across repeated
``backward`` calls until ``zero_grad``; gradients of intermediate nodes are
reset at the start of each call so repeated backward passes do not double
count.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

_DEFAULT_DTYPE = np.float32


def get_default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported dtype {dtype!r}; use float32 or float64")
    _DEFAULT_DTYPE = dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default dtype (float64 is meant for grad checks)."""
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "_op", "_ctx")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if arr.dtype != _DEFAULT_DTYPE:
            arr = arr.astype(_DEFAULT_DTYPE)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None
        self._op: str | None = None
        self._ctx = None

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], op: str) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.requires_grad = any(p.requires_grad for p in parents)
        out.name = None
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = None
        out._op = op
        out._ctx = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{label})"

    # -- a few generic ops, enough for losses and grad-check probes ----------
    def __add__(self, other) -> "Tensor":
        other = other if isinstance(other, Tensor) else Tensor(other)
        if self.shape != other.shape:
            raise ValueError(f"add needs equal shapes, got {self.shape} and {other.shape}")
        out = Tensor._from_op(self.data + other.data, (self, other), "add")

        def _backward():
            if self.requires_grad:
                self.accumulate(out.grad)
            if other.requires_grad:
                other.accumulate(out.grad)

        out._backward = _backward
        return out

    def __mul__(self, other) -> "Tensor":
        other = other if isinstance(other, Tensor) else Tensor(other)
        if other.data.ndim and self.shape != other.shape:
            raise ValueError(f"mul needs equal shapes or a scalar, got {self.shape} and {other.shape}")
        out = Tensor._from_op(self.data * other.data, (self, other), "mul")

        def _backward():
            if self.requires_grad:
                self.accumulate(out.grad * other.data)
            if other.requires_grad:
                g = out.grad * self.data
                other.accumulate(g if other.data.ndim else g.sum())

        out._backward = _backward
        return out

    __rmul__ = __mul__

    def __matmul__(self, other: "Tensor") -> "Tensor":
        if self.data.ndim != 2 or other.data.ndim != 2 or self.shape[1] != other.shape[0]:
            raise ValueError(f"matmul shape mismatch: {self.shape} @ {other.shape}")
        out = Tensor._from_op(self.data @ other.data, (self, other), "matmul")

        def _backward():
            if self.requires_grad:
                self.accumulate(out.grad @ other.data.T)
            if other.requires_grad:
                other.accumulate(self.data.T @ out.grad)

        out._backward = _backward
        return out

    def sum(self) -> "Tensor":
        out = Tensor._from_op(np.asarray(self.data.sum(), dtype=self.data.dtype), (self,), "sum")

        def _backward():
            self.accumulate(np.broadcast_to(out.grad, self.shape))

        out._backward = _backward
        return out

    def reshape(self, *shape) -> "Tensor":
        out = Tensor._from_op(self.data.reshape(*shape), (self,), "reshape")

        def _backward():
            self.accumulate(out.grad.reshape(self.shape))

        out._backward = _backward
        return out

    def backward(self, grad: np.ndarray | None = None) -> None:
        backward(self, grad=grad)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    # iterative DFS; recursion blows the stack on long unrolled sequences
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, params: Iterable[Tensor] | None = None,
             grad: np.ndarray | None = None) -> list[np.ndarray] | None:
    """Propagate d(loss)/d(node) through the graph that produced ``loss``.

    If ``params`` is given, every one of them ends with a populated gradient
    (zeros when disconnected from ``loss``) and the list of gradients is
    returned in the same order.
    """
    if not loss.requires_grad:
        raise RuntimeError("backward called on a tensor with no recorded forward graph")
    order = topological_order(loss)
    for node in order:
        if not node.is_leaf:
            node.grad = None
    seed = np.ones_like(loss.data) if grad is None else np.asarray(grad, dtype=loss.data.dtype)
    if seed.shape != loss.shape:
        raise ValueError(f"seed gradient shape {seed.shape} != output shape {loss.shape}")
    loss.accumulate(seed)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None and node.requires_grad:
            node._backward()
    if params is None:
        return None
    grads = []
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
        grads.append(p.grad)
    return grads
