"""Independent numerical oracles used across the test suite."""
from __future__ import annotations

from collections import deque

import numpy as np

from beer.envs import GridWorld


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` at ``x`` (modified in place, restored)."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return g


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def jacobi_eigenvalues(S: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic two-sided Jacobi eigenvalues of a symmetric matrix, in plain loops."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A**2) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)  # theta * theta would overflow
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


def gram_schmidt_rank(M: np.ndarray, tol: float) -> int:
    """Rank by modified Gram-Schmidt on the rows with a relative drop tolerance."""
    basis: list[np.ndarray] = []
    scale = max(np.max(np.linalg.norm(M, axis=1)), 1e-300)
    for row in np.asarray(M, dtype=float):
        v = row.copy()
        for b in basis:
            v -= (v @ b) * b
        for b in basis:
            v -= (v @ b) * b
        n = np.linalg.norm(v)
        if n > tol * scale:
            basis.append(v / n)
    return len(basis)


def chi_square_uniform_ok(counts: np.ndarray, sigmas: float = 3.0) -> bool:
    """Chi-square goodness of fit against uniform, accepted within ``sigmas`` of its mean."""
    counts = np.asarray(counts, dtype=float)
    k = counts.size
    expected = counts.sum() / k
    stat = np.sum((counts - expected) ** 2 / expected)
    dof = k - 1
    return abs(stat - dof) <= sigmas * np.sqrt(2 * dof)


def bfs_distances(env: GridWorld) -> np.ndarray:
    """Shortest-path length to the terminal by breadth-first search over move()."""
    dist = np.full(env.n_states, -1)
    dist[env.terminal] = 0
    queue = deque([env.terminal])
    while queue:
        t = queue.popleft()
        for s in range(env.n_states):
            if dist[s] < 0 and any(env.move(s, a) == t for a in range(env.n_actions)):
                dist[s] = dist[t] + 1
                queue.append(s)
    return dist


class TabularAgent:
    """Greedy agent over a fixed Q table indexed by one-hot grid observations."""

    discrete = True

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)

    def q_values(self, obs):
        return np.atleast_2d(obs) @ self.table

    def greedy_action(self, obs):
        return int(np.argmax(self.q_values(obs)[0]))

    def q_estimate(self, states, actions):
        return self.q_values(states)[np.arange(len(states)), np.asarray(actions)]


def value_iteration(env: GridWorld, gamma: float, sweeps: int = 2000) -> np.ndarray:
    Q = np.zeros((env.n_states, env.n_actions))
    for _ in range(sweeps):
        V = Q.max(axis=1)
        V[env.terminal] = 0.0
        new = np.zeros_like(Q)
        for s in range(env.n_states):
            for a in range(env.n_actions):
                s2 = env.move(s, a)
                done = s2 == env.terminal
                new[s, a] = (env.goal_reward if done else 0.0) + (0.0 if done else gamma * V[s2])
        if np.array_equal(new, Q):
            break
        Q = new
    return Q
