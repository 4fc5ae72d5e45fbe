"""Dense float64 tensors recorded on a reverse-mode tape.

A :class:`Tape` is an append-only list of nodes. Every operation whose
inputs are tracked (a leaf with ``requires_grad`` or an earlier tape output)
appends one node holding its inputs and a closure mapping the upstream
gradient to per-input gradients. :meth:`Tape.backward` walks the nodes in
strict reverse insertion order, which is a valid reverse topological order
because a node can only reference nodes recorded before it.

Operations on untracked inputs, or any operation inside :func:`no_grad`,
compute values only.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np

from beer.errors import GradientError, ShapeError

NORM_FLOOR = 1e-8

_state = {"grad_enabled": True, "debug": False}
_tape_stack: list["Tape"] = []

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


def set_debug(enabled: bool) -> None:
    """Check every forward result for NaN/Inf when enabled."""
    _state["debug"] = bool(enabled)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording; results inside the block are constants."""
    previous = _state["grad_enabled"]
    _state["grad_enabled"] = False
    try:
        yield
    finally:
        _state["grad_enabled"] = previous


class _Node:
    __slots__ = ("inputs", "backward")

    def __init__(self, inputs: tuple["Tensor", ...], backward: BackwardFn):
        self.inputs = inputs
        self.backward = backward


class Tape:
    """Append-only record of differentiable operations.

    Use as a context manager to make it the recording target::

        with Tape() as tape:
            loss = f(params)
        grads = tape.backward(loss)
    """

    def __init__(self) -> None:
        self.nodes: list[_Node] = []
        self.generation = 0
        self.consumed = False

    def __enter__(self) -> "Tape":
        _tape_stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        """Drop every node; tensors recorded before the reset become detached."""
        self.nodes = []
        self.generation += 1
        self.consumed = False

    def record(self, out: "Tensor", inputs: tuple["Tensor", ...], backward: BackwardFn) -> None:
        generation = self.generation
        live = []
        for t in inputs:
            tape = t._tape
            if tape is not None:
                if tape is not self or t._generation != generation:
                    raise GradientError("operand was recorded on a different or reset tape")
                live.append(t)
            else:
                # freeze which leaves are differentiable at record time
                live.append(t if t.requires_grad else None)
        out._tape = self
        out._generation = generation
        out._index = len(self.nodes)
        out.requires_grad = True
        self.nodes.append(_Node(tuple(live), backward))

    def backward(self, loss: "Tensor") -> dict["Tensor", np.ndarray]:
        """Propagate d(loss)/d(leaf) to every tracked leaf.

        Returns a mapping from leaf tensor to its gradient and also
        accumulates into ``leaf.grad``. A second call without :meth:`reset`
        raises :class:`GradientError`.
        """
        if loss.data.size != 1:
            raise GradientError(f"loss must be a scalar, got shape {loss.shape}")
        if not loss._on(self):
            raise GradientError("loss is not recorded on this tape")
        if self.consumed:
            raise GradientError("backward already ran on this tape; call reset() first")
        self.consumed = True

        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[loss._index] = np.ones_like(loss.data)
        leaf_grads: dict[int, np.ndarray] = {}
        leaves: dict[int, Tensor] = {}
        for i in range(len(self.nodes) - 1, -1, -1):
            g = grads[i]
            if g is None:
                continue
            grads[i] = None
            node = self.nodes[i]
            for inp, gi in zip(node.inputs, node.backward(g)):
                if gi is None or inp is None:
                    continue
                if inp._tape is not None:
                    j = inp._index
                    grads[j] = gi if grads[j] is None else grads[j] + gi
                elif inp.requires_grad:
                    k = id(inp)
                    if k in leaf_grads:
                        leaf_grads[k] = leaf_grads[k] + gi
                    else:
                        leaf_grads[k] = gi
                        leaves[k] = inp
        out = {}
        for k, g in leaf_grads.items():
            leaf = leaves[k]
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g
            out[leaf] = g
        return out


def current_tape() -> Tape:
    if not _tape_stack:
        raise GradientError("no active tape; wrap the forward pass in `with Tape():` or `no_grad()`")
    return _tape_stack[-1]


class Tensor:
    """A float64 array with optional gradient tracking.

    Leaves are created directly (``Tensor(x, requires_grad=True)``);
    operation outputs carry a handle to their tape node.
    """

    __slots__ = ("data", "requires_grad", "grad", "_tape", "_generation", "_index", "__weakref__")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._tape: Tape | None = None
        self._generation = -1
        self._index = -1

    def _on(self, tape: Tape) -> bool:
        return self._tape is tape and self._generation == tape.generation

    @property
    def tracked(self) -> bool:
        return self.requires_grad or self._tape is not None

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({np.array2string(self.data, precision=6)}{flag})"

    def __len__(self) -> int:
        return len(self.data)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self) -> "Tensor":
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make(data: np.ndarray, inputs: tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    """Wrap an op result, recording a node when any input is tracked."""
    out = Tensor(data)
    if _state["debug"] and not np.all(np.isfinite(out.data)):
        raise FloatingPointError("non-finite value produced by a forward operation")
    if _state["grad_enabled"]:
        for t in inputs:
            if t.requires_grad or t._tape is not None:
                current_tape().record(out, inputs, backward)
                break
    return out


def unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return make(a.data + b.data, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return make(a.data - b.data, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return make(
        ad * bd,
        (a, b),
        lambda g: (unbroadcast(g * bd, ad.shape), unbroadcast(g * ad, bd.shape)),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    out = ad / bd
    return make(
        out,
        (a, b),
        lambda g: (unbroadcast(g / bd, ad.shape), unbroadcast(-g * out / bd, bd.shape)),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return make(-a.data, (a,), lambda g: (-g,))


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    x = a.data
    p = float(exponent)
    if p == 2.0:
        return make(x * x, (a,), lambda g: (2.0 * g * x,))
    return make(x**p, (a,), lambda g: (g * p * x ** (p - 1.0),))


def relu(a) -> Tensor:
    """max(0, x); the backward pass uses 0 as the subgradient at exactly 0."""
    a = as_tensor(a)
    mask = a.data > 0.0
    return make(np.maximum(a.data, 0.0), (a,), lambda g: (np.where(mask, g, 0.0),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return make(y, (a,), lambda g: (g * (1.0 - y * y),))


def stop_gradient(a) -> Tensor:
    """Identity in the forward pass; contributes no gradient to ``a``."""
    return Tensor(as_tensor(a).data)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not align")
    ad, bd = a.data, b.data
    return make(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g))


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return make(a.data.T, (a,), lambda g: (g.T,))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))
