"""Layers, reductions and vector geometry on :class:`Tensor`."""
from __future__ import annotations

import numpy as np

from beer.autodiff.tensor import NORM_FLOOR, Tensor, as_tensor, make, reshape
from beer.errors import DegenerateVectorError, ShapeError


def linear(x, W, b=None) -> Tensor:
    """``x @ W (+ b)`` for ``x: [batch, in]``, ``W: [in, out]``, ``b: [out]``."""
    x, W = as_tensor(x), as_tensor(W)
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError(f"linear: input shape {x.shape} does not match weight shape {W.shape}")
    xd, Wd = x.data, W.data
    need_x, need_w = x.tracked, W.tracked
    if b is None:
        return make(
            xd @ Wd,
            (x, W),
            lambda g: (g @ Wd.T if need_x else None, xd.T @ g if need_w else None),
        )
    b = as_tensor(b)
    if b.shape != (Wd.shape[1],):
        raise ShapeError(f"linear: bias shape {b.shape} does not match weight shape {W.shape}")
    need_b = b.tracked
    out = xd @ Wd
    out += b.data
    return make(
        out,
        (x, W, b),
        lambda g: (
            g @ Wd.T if need_x else None,
            xd.T @ g if need_w else None,
            g.sum(axis=0) if need_b else None,
        ),
    )


def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)
    shape = x.shape
    if axis is None:
        return make(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),))
    ax = axis % x.ndim

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g, ax), shape).copy(),)

    return make(x.data.sum(axis=ax), (x,), backward)


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    shape = x.shape
    if axis is None:
        inv = 1.0 / x.size
        return make(np.asarray(x.data.sum() * inv), (x,), lambda g: (np.full(shape, g * inv),))
    ax = axis % x.ndim
    inv = 1.0 / shape[ax]

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g * inv, ax), shape).copy(),)

    return make(x.data.sum(axis=ax) * inv, (x,), backward)


def l2_norm(x) -> Tensor:
    """Euclidean norm of all entries."""
    x = as_tensor(x)
    xd = x.data
    n = np.sqrt(np.sum(xd * xd))

    def backward(g):
        return (g * xd / n if n > 0 else np.zeros_like(xd),)

    return make(np.asarray(n), (x,), backward)


def dot(u, v) -> Tensor:
    u, v = as_tensor(u), as_tensor(v)
    if u.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"dot needs equal-length vectors, got {u.shape} and {v.shape}")
    ud, vd = u.data, v.data
    return make(np.asarray(ud @ vd), (u, v), lambda g: (g * vd, g * ud))


def _check_norms(norms: np.ndarray, what: str) -> None:
    if np.any(norms <= NORM_FLOOR):
        raise DegenerateVectorError(f"{what} has norm <= {NORM_FLOOR:g}")


def cosine(u, v) -> Tensor:
    """dot(u, v) / (|u| |v|); degenerate vectors raise."""
    u, v = as_tensor(u), as_tensor(v)
    if u.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"cosine needs equal-length vectors, got {u.shape} and {v.shape}")
    return reshape(row_cosine(reshape(u, (1, -1)), reshape(v, (1, -1))), ())


def row_dot(A, B) -> Tensor:
    """Per-row inner products of two ``[n, d]`` tensors."""
    A, B = as_tensor(A), as_tensor(B)
    if A.shape != B.shape or A.ndim != 2:
        raise ShapeError(f"row_dot needs equal 2-D shapes, got {A.shape} and {B.shape}")
    Ad, Bd = A.data, B.data
    return make(
        np.einsum("ij,ij->i", Ad, Bd),
        (A, B),
        lambda g: (g[:, None] * Bd, g[:, None] * Ad),
    )


def row_norm(A) -> Tensor:
    A = as_tensor(A)
    if A.ndim != 2:
        raise ShapeError(f"row_norm needs a 2-D tensor, got {A.shape}")
    Ad = A.data
    n = np.sqrt(np.einsum("ij,ij->i", Ad, Ad))

    def backward(g):
        safe = np.where(n > 0, n, 1.0)
        return (np.where(n[:, None] > 0, g[:, None] * Ad / safe[:, None], 0.0),)

    return make(n, (A,), backward)


def row_cosine(A, B) -> Tensor:
    """Per-row cosine similarity; any row with norm <= NORM_FLOOR raises."""
    A, B = as_tensor(A), as_tensor(B)
    if A.shape != B.shape or A.ndim != 2:
        raise ShapeError(f"row_cosine needs equal 2-D shapes, got {A.shape} and {B.shape}")
    Ad, Bd = A.data, B.data
    na = np.sqrt(np.einsum("ij,ij->i", Ad, Ad))
    nb = np.sqrt(np.einsum("ij,ij->i", Bd, Bd))
    _check_norms(na, "row_cosine: a row of the first operand")
    _check_norms(nb, "row_cosine: a row of the second operand")
    d = np.einsum("ij,ij->i", Ad, Bd)
    c = d / (na * nb)

    def backward(g):
        ga = (Bd / (na * nb)[:, None] - (c / (na * na))[:, None] * Ad) * g[:, None]
        gb = (Ad / (na * nb)[:, None] - (c / (nb * nb))[:, None] * Bd) * g[:, None]
        return ga, gb

    return make(c, (A, B), backward)


def gather(x, index) -> Tensor:
    """``x[i, index[i]]`` for a ``[n, k]`` tensor and an integer vector of length n."""
    x = as_tensor(x)
    idx = np.asarray(index, dtype=np.int64)
    if x.ndim != 2 or idx.shape != (x.shape[0],):
        raise ShapeError(f"gather: index shape {idx.shape} does not match input {x.shape}")
    rows = np.arange(x.shape[0])
    shape = x.shape

    def backward(g):
        out = np.zeros(shape)
        out[rows, idx] = g
        return (out,)

    return make(x.data[rows, idx], (x,), backward)


def take_rows(x, index) -> Tensor:
    """``x[index]`` along the first axis; repeated indices accumulate in backward."""
    x = as_tensor(x)
    idx = np.asarray(index, dtype=np.int64)
    shape = x.shape

    def backward(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return make(x.data[idx], (x,), backward)


def concat(tensors, axis: int = 1) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make(np.concatenate([t.data for t in ts], axis=axis), ts, backward)


def mse(pred, target) -> Tensor:
    """Mean of squared differences, as a single node."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse operands differ in shape: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    scale = 2.0 / diff.size

    def backward(g):
        gd = (g * scale) * diff
        return gd, -gd

    return make(np.asarray((diff * diff).sum() / diff.size), (pred, target), backward)
