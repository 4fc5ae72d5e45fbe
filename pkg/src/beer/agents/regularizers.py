"""The Bellman-derived cosine cap and the representation regularizers.

All functions take the live representation ``phi`` (a tape tensor,
``[batch, N]``) plus the things that must not receive gradient: the
successor representation, rewards and the per-sample head column ``w``.
A successor passed as a tape tensor is cut with ``stop_gradient`` first.
"""
from __future__ import annotations

import numpy as np

from beer.autodiff import NORM_FLOOR, Tensor, mean, row_dot, stop_gradient, take_rows, tsum
from beer.autodiff.tensor import make
from beer.errors import DegenerateVectorError


def _constant(x) -> np.ndarray:
    if isinstance(x, Tensor):
        x = stop_gradient(x).data
    return np.asarray(x, dtype=np.float64)


def _norms(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sqrt(np.einsum("ij,ij->i", x, x))


def _require(norms: np.ndarray, what: str) -> None:
    if np.any(norms <= NORM_FLOOR):
        raise DegenerateVectorError(f"{what} has norm <= {NORM_FLOOR:g}")


def beer_bound(phi, phi_next, r, w, gamma: float) -> np.ndarray:
    """Upper bound on ``cos(phi, phi_next)`` implied by ``phi.w = r + gamma * phi_next.w``.

    ``(|phi|^2 + gamma^2 |phi_next|^2 - r^2 / |w|^2) / (2 gamma |phi| |phi_next|)``,
    row-wise for 2-D inputs. Any norm at or below the floor raises.
    """
    phi, phi_next, w = (np.asarray(v, dtype=np.float64) for v in (phi, phi_next, w))
    scalar = phi.ndim == 1
    a, b, nw = _norms(phi), _norms(phi_next), _norms(w)
    _require(a, "phi")
    _require(b, "phi_next")
    _require(nw, "w")
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    out = (a * a + gamma * gamma * b * b - r * r / (nw * nw)) / (2.0 * gamma * a * b)
    return out[0] if scalar else out


def bound_gap(phi, phi_next, r, w, gamma: float) -> np.ndarray:
    """Inner-product form of the same inequality: positive means it is violated.

    ``<phi, phi_next> - (|phi|^2 + gamma^2 |phi_next|^2 - r^2 / |w|^2) / (2 gamma)``.
    Only ``w`` appears in a denominator, so only a degenerate ``w`` raises.
    """
    phi = np.asarray(phi, dtype=np.float64).reshape(-1, np.shape(phi)[-1])
    phi_next = np.asarray(phi_next, dtype=np.float64).reshape(phi.shape)
    w = np.broadcast_to(np.asarray(w, dtype=np.float64), phi.shape)
    w2 = np.einsum("ij,ij->i", w, w)
    _require(np.sqrt(w2), "w")
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    dot = np.einsum("ij,ij->i", phi, phi_next)
    sq = np.einsum("ij,ij->i", phi, phi) + gamma * gamma * np.einsum("ij,ij->i", phi_next, phi_next)
    return dot - (sq - r * r / w2) / (2.0 * gamma)


def _masked_mean(values_fn, mask: np.ndarray | None, n: int) -> Tensor:
    """Sum of per-sample terms over the kept rows, divided by the full batch size."""
    if mask is None:
        return mean(values_fn(None))
    keep = np.flatnonzero(mask)
    if keep.size == 0:
        return Tensor(0.0)
    return tsum(values_fn(keep)) * (1.0 / n)


def cosine_excess(phi: Tensor, phi_next: np.ndarray, r: np.ndarray, w: np.ndarray, gamma: float) -> Tensor:
    """Per-row ``ReLU(cos(phi, phi_next) - bound)`` as one tape node.

    Only ``phi`` inside the cosine is differentiated; the bound is computed
    from ``phi``'s values but treated as a constant.
    """
    P = phi.data
    a = np.sqrt(np.einsum("ij,ij->i", P, P))
    b = np.sqrt(np.einsum("ij,ij->i", phi_next, phi_next))
    nw = np.sqrt(np.einsum("ij,ij->i", w, w))
    _require(a, "phi")
    _require(b, "phi_next")
    _require(nw, "w")
    ab = a * b
    cos = np.einsum("ij,ij->i", P, phi_next) / ab
    bound = (a * a + gamma * gamma * b * b - r * r / (nw * nw)) / (2.0 * gamma * ab)
    excess = cos - bound
    active = excess > 0.0

    def backward(g):
        ga = np.where(active, g, 0.0)
        return ((ga / ab)[:, None] * phi_next - (ga * cos / (a * a))[:, None] * P,)

    return make(np.where(active, excess, 0.0), (phi,), backward)


def beer_regularizer(phi: Tensor, phi_next: np.ndarray, r: np.ndarray, w: np.ndarray,
                     gamma: float, mask: np.ndarray | None = None) -> Tensor:
    """Batch mean of ``ReLU(cos(phi, phi_next) - bound)``.

    ``w`` holds one head column per row (a single vector is broadcast).
    Rows where ``mask`` is false contribute zero but still count in the
    mean's denominator.
    """
    n = phi.shape[0]
    phi_next = _constant(phi_next)
    r = _constant(r).reshape(-1)
    w = np.broadcast_to(_constant(w), phi.shape)

    def per_sample(keep):
        if keep is None:
            return cosine_excess(phi, phi_next, r, w, gamma)
        return cosine_excess(take_rows(phi, keep), phi_next[keep], r[keep], w[keep], gamma)

    return _masked_mean(per_sample, mask, n)


def dr3_penalty(phi: Tensor, phi_next: np.ndarray, c0: float = 1.0) -> Tensor:
    """``c0 * mean <phi, phi_next>`` with the successor held constant."""
    return mean(row_dot(phi, _constant(phi_next))) * c0


def infer_loss(aux_out: Tensor, frozen_out: np.ndarray, beta_infer: float, alpha: float = 1.0) -> Tensor:
    """``alpha * mean((g - beta_infer * g_0)^2)`` against frozen initial head outputs."""
    if frozen_out is None:
        raise ValueError("auxiliary loss needs the frozen initial-network outputs")
    diff = aux_out - beta_infer * _constant(frozen_out)
    return mean(diff * diff) * alpha
