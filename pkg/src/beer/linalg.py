"""Singular values by one-sided Jacobi rotations, and the numerical rank.

The one-sided (Hestenes) method orthogonalises the columns of ``M`` (or its
rows, whichever side is shorter) by plane rotations; at convergence the
vector norms are the singular values. Pairs are scheduled in round-robin
order so that every rotation in a round touches disjoint vectors and the
whole round is applied as one vectorised update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beer.errors import ShapeError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


@dataclass(frozen=True)
class SingularSpectrum:
    """Non-negative singular values in descending order."""

    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def count_above(self, epsilon: float) -> int:
        return int(np.count_nonzero(self.values > epsilon))


def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint index pairs covering every pair once (``m`` even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top = np.array(players[: m // 2])
        bottom = np.array(players[m // 2:][::-1])
        rounds.append((np.minimum(top, bottom), np.maximum(top, bottom)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _check_matrix(M) -> np.ndarray:
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def svd_values(M, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> SingularSpectrum:
    """Singular values of ``M`` (length ``min(rows, cols)``), largest first.

    Rotations continue until every vector pair satisfies
    ``|a_i . a_j| <= tol * |a_i| |a_j|``. Pairs involving a vector whose
    norm is below ``eps * |M|_F`` are left alone: such vectors sit at
    rounding level, and underflowed ones would otherwise never meet the
    relative test.
    """
    A = _check_matrix(M)
    # rows of B are the vectors being orthogonalised; use the shorter side
    B = A.T.copy() if A.shape[0] >= A.shape[1] else A.copy()
    k = B.shape[0]
    if k > 1:
        m = k + (k % 2)
        if m != k:
            # a zero dummy row keeps the pairing even; it never rotates
            B = np.vstack([B, np.zeros((1, B.shape[1]))])
        rounds = _round_robin(m)
        floor = (np.finfo(np.float64).eps * np.sqrt(np.einsum("ij,ij->", B, B))) ** 2
        for _ in range(max_sweeps):
            rotated = False
            for I, J in rounds:
                bi, bj = B[I], B[J]
                alpha = np.einsum("ij,ij->i", bi, bi)
                beta = np.einsum("ij,ij->i", bj, bj)
                gamma = np.einsum("ij,ij->i", bi, bj)
                active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > floor) & (beta > floor)
                if not active.any():
                    continue
                rotated = True
                I, J = I[active], J[active]
                bi, bj = bi[active], bj[active]
                alpha, beta, gamma = alpha[active], beta[active], gamma[active]
                # a tiny gamma can overflow zeta to inf; t -> 0 is the right limit
                with np.errstate(over="ignore"):
                    zeta = (beta - alpha) / (2.0 * gamma)
                    t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
                s = c * t[:, None]
                B[I] = c * bi - s * bj
                B[J] = s * bi + c * bj
            if not rotated:
                break
        B = B[:k]
    values = np.sqrt(np.einsum("ij,ij->i", B, B))
    return SingularSpectrum(np.sort(values)[::-1])


def numerical_rank(M, epsilon: float) -> int:
    """Number of singular values of ``M / sqrt(n)`` strictly above ``epsilon``.

    ``n`` is the number of rows (samples) of ``M``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    A = _check_matrix(M)
    return svd_values(A / np.sqrt(A.shape[0])).count_above(epsilon)
