"""Measurements taken on a paused agent: rank, cosine, bound gap, value error, returns.

Every function is pure given the agent's current parameters and the RNG it
is handed, so metric sampling never perturbs training.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from beer.agents.regularizers import bound_gap
from beer.autodiff import Adam, Tape, Tensor, matmul, reshape, row_norm, take_rows, tsum
from beer.autodiff.tensor import NORM_FLOOR
from beer.errors import DegenerateVectorError
from beer.linalg import numerical_rank
from beer.replay import Batch, ReplayBuffer

ERROR_FLOOR = 1e-6
ERROR_CLIP = 5.0


@dataclass(frozen=True)
class MetricSnapshot:
    step: int
    eval_return_mean: float = math.nan
    eval_return_std: float = math.nan
    steps_to_goal: float = math.nan
    representation_rank: float = math.nan
    mean_cosine: float = math.nan
    bound_gap_mean: float = math.nan
    bound_gap_max: float = math.nan
    approx_error: float = math.nan
    td_loss: float = math.nan
    regularizer_value: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def representation_rank_metric(agent, buffer: ReplayBuffer, epsilon: float, n_batch: int,
                               n_repeats: int, rng: np.random.Generator) -> float:
    """Mean numerical rank of ``phi`` over ``n_repeats`` uniformly sampled batches."""
    ranks = []
    for _ in range(n_repeats):
        batch = buffer.sample_uniform(n_batch, rng)
        ranks.append(numerical_rank(agent.features(batch.states, batch.actions), epsilon))
    return float(np.mean(ranks))


def mean_adjacent_cosine(agent, batch: Batch) -> float:
    """Mean ``cos(phi(s, a), phi(s', a'))`` over rows where both vectors are non-degenerate."""
    phi, phi_next, _ = agent.representation_pairs(batch)
    a = np.sqrt(np.einsum("ij,ij->i", phi, phi))
    b = np.sqrt(np.einsum("ij,ij->i", phi_next, phi_next))
    ok = (a > NORM_FLOOR) & (b > NORM_FLOOR)
    if not ok.any():
        return math.nan
    return float(np.mean(np.einsum("ij,ij->i", phi[ok], phi_next[ok]) / (a[ok] * b[ok])))


def bound_gap_C(batch: Batch, agent, gamma: float) -> np.ndarray:
    """Per-sample inner-product gap; ``C <= 0`` exactly when the Bellman cap holds."""
    phi, phi_next, w = agent.representation_pairs(batch)
    return bound_gap(phi, phi_next, batch.rewards, w, gamma)


def mc_horizon(gamma: float, tol: float = 1e-6) -> int:
    """Steps after which ``gamma ** t`` falls below ``tol``."""
    return int(math.ceil(math.log(tol) / math.log(gamma)))


def monte_carlo_q(agent, env, states: np.ndarray, actions, gamma: float, horizon: int,
                  n_rollouts: int = 1, rng: np.random.Generator | None = None) -> np.ndarray:
    """Discounted return of taking ``actions[i]`` in ``states[i]`` and then acting greedily.

    Rollouts run in lockstep so the policy is evaluated on one batch per time
    step; they ignore the environment's episode cap and stop at ``horizon``
    transitions or a terminal state. ``rng`` is accepted for API symmetry;
    greedy rollouts draw no randomness.
    """
    states = np.atleast_2d(states)
    n = len(states)
    totals = np.zeros((n_rollouts, n))
    for k in range(n_rollouts):
        envs = [env.spawn(max_episode_steps=None) for _ in range(n)]
        obs = np.stack([e.restore_observation(s) for e, s in zip(envs, states)])
        act = list(actions)
        alive = np.ones(n, dtype=bool)
        discount = 1.0
        for _ in range(horizon):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            for i in idx:
                t = envs[i].step(act[i])
                totals[k, i] += discount * t.reward
                obs[i] = t.next_state
                if t.done:
                    alive[i] = False
            discount *= gamma
            idx = np.flatnonzero(alive)
            if idx.size:
                greedy = _greedy_batch(agent, obs[idx])
                for j, i in enumerate(idx):
                    act[i] = greedy[j]
    return totals.mean(axis=0)


def _greedy_batch(agent, obs: np.ndarray) -> list:
    if agent.discrete:
        return [int(a) for a in np.argmax(agent.q_values(obs), axis=1)]
    return list(agent.policy(obs))


def relative_error(q_est: np.ndarray, q_true: np.ndarray) -> np.ndarray:
    """``|Q_est - Q_true| / (|Q_true| + 1e-6)`` per pair, clipped to ``[0, 5]``."""
    err = np.abs(q_est - q_true) / (np.abs(q_true) + ERROR_FLOOR)
    return np.clip(err, 0.0, ERROR_CLIP)


def approx_error_monte_carlo(agent, env, buffer: ReplayBuffer, n_states: int, n_rollouts: int,
                             horizon: int, gamma: float, rng: np.random.Generator) -> float:
    """Mean relative error of ``Q(s, greedy(s))`` against Monte-Carlo returns.

    Start states are drawn uniformly from the replay buffer.
    """
    if n_states <= 0:
        return math.nan
    batch = buffer.sample_uniform(n_states, rng)
    actions = _greedy_batch(agent, batch.states)
    q_est = agent.q_estimate(batch.states, np.asarray(actions))
    q_true = monte_carlo_q(agent, env, batch.states, actions, gamma, horizon, n_rollouts, rng)
    return float(np.mean(relative_error(q_est, q_true)))


@dataclass(frozen=True)
class EvalResult:
    return_mean: float
    return_std: float
    steps_to_goal: float
    returns: tuple[float, ...]
    lengths: tuple[int, ...]


def evaluate_policy(agent, env, n_episodes: int, rng: np.random.Generator) -> EvalResult:
    """Greedy episodes on a fresh copy of ``env``.

    Returns are undiscounted; std uses the population convention. For
    goal-reaching environments a failed episode counts the full cap toward
    ``steps_to_goal``; other environments report NaN there.
    """
    eval_env = env.spawn(max_episode_steps=env.max_episode_steps)
    returns, lengths = [], []
    for _ in range(n_episodes):
        obs = eval_env.reset(rng)
        total, steps, finished = 0.0, 0, False
        while not finished:
            t = eval_env.step(agent.greedy_action(obs))
            total += t.reward
            steps += 1
            obs = t.next_state
            finished = t.done or t.truncated
        returns.append(total)
        lengths.append(steps)
    r = np.asarray(returns)
    goal = float(np.mean(lengths)) if env.discrete else math.nan
    return EvalResult(float(r.mean()), float(r.std()), goal, tuple(returns), tuple(lengths))


def near_collinear_matrix(dim: int, rng: np.random.Generator, noise: float = 1e-2) -> np.ndarray:
    """One random unit row followed by ``dim - 1`` noisy copies of it."""
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    rows = u + noise * rng.normal(size=(dim - 1, dim))
    return np.vstack([u, rows])


def mean_pairwise_cosine(X: np.ndarray) -> float:
    """Mean cosine over all distinct row pairs."""
    n = len(X)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    if np.any(norms <= NORM_FLOOR):
        raise DegenerateVectorError("a row has norm at or below the floor")
    U = X / norms[:, None]
    G = U @ U.T
    return float((G.sum() - np.trace(G)) / (n * (n - 1)))


def batch_cosine_loss(X: Tensor, rows: np.ndarray, objective: str = "squared") -> Tensor:
    """Mean over distinct pairs of the sampled rows of ``cos^2`` (or ``cos`` when signed)."""
    sub = take_rows(X, rows)
    U = sub / reshape(row_norm(sub), (-1, 1))
    G = matmul(U, U.T)
    k = len(rows)
    off = 1.0 - np.eye(k)
    if objective == "squared":
        return tsum(G * G * off) * (1.0 / (k * (k - 1)))
    if objective == "signed":
        return tsum(G * off) * (1.0 / (k * (k - 1)))
    raise ValueError(f"unknown objective {objective!r}")


def cosine_rank_demo(dim: int = 256, batch: int = 64, lr: float = 5e-3, steps: int = 2000,
                     epsilon: float = 0.05, log_every: int = 100,
                     rng: np.random.Generator | None = None,
                     objective: str = "squared") -> list[tuple[int, float, int]]:
    """Drive a near-collinear matrix apart by minimising sampled pairwise cosine.

    Each step draws ``batch`` distinct rows and takes one Adam step on their
    pairwise cosine objective. Every ``log_every`` steps (and at step 0 and
    the last step) it records ``(step, mean cosine over the matrix, rank)``.

    The default objective is the mean squared cosine, whose minimisers are
    orthogonal rows. ``"signed"`` minimises the plain mean cosine, which is
    already minimal once the unit rows sum to zero and so stalls well short
    of full rank.
    """
    if batch > dim or batch < 2:
        raise ValueError("need 2 <= batch <= dim")
    rng = np.random.default_rng(0) if rng is None else rng
    X = Tensor(near_collinear_matrix(dim, rng), requires_grad=True)
    opt = Adam([X], lr=lr)
    trace = [(0, mean_pairwise_cosine(X.data), numerical_rank(X.data, epsilon))]
    for step in range(1, steps + 1):
        rows = rng.choice(dim, size=batch, replace=False)
        with Tape() as tape:
            loss = batch_cosine_loss(X, rows, objective)
            grads = tape.backward(loss)
        X.grad = None
        opt.step(grads)
        if step % log_every == 0 or step == steps:
            trace.append((step, mean_pairwise_cosine(X.data), numerical_rank(X.data, epsilon)))
    return trace
