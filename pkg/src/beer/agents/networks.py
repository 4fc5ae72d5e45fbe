"""Value and policy networks.

A :class:`ValueNetwork` is an MLP trunk with ReLU after every hidden layer,
producing the representation ``phi``, followed by a bias-free linear head
``W`` so that ``Q = phi @ W`` holds exactly.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from beer.autodiff import MLP, Module, Tensor, linear
from beer.autodiff import functional as F
from beer.errors import ShapeError


def soft_update(online: Sequence[Tensor], target: Sequence[Tensor], tau: float) -> None:
    """In place ``target <- tau * online + (1 - tau) * target``."""
    if len(online) != len(target):
        raise ShapeError("online and target parameter lists differ in length")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    for o, t in zip(online, target):
        if o.shape != t.shape:
            raise ShapeError(f"soft update shapes differ: {o.shape} vs {t.shape}")
        t.data = tau * o.data + (1.0 - tau) * t.data


class ValueNetwork(Module):
    """``Q(x) = trunk(x) @ W`` with one head column per output."""

    def __init__(self, in_dim: int, hidden_sizes: Sequence[int], n_out: int, rng: np.random.Generator):
        self.in_dim = int(in_dim)
        self.trunk = MLP([in_dim, *hidden_sizes], rng, output_activation="relu")
        n = hidden_sizes[-1]
        bound = 1.0 / np.sqrt(n)
        self.head = Tensor(rng.uniform(-bound, bound, size=(n, n_out)), requires_grad=True)

    @property
    def feature_dim(self) -> int:
        return self.head.shape[0]

    def features(self, x) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"expected inputs of shape [batch, {self.in_dim}], got {x.shape}")
        return self.trunk(x)

    def q_with_features(self, x) -> tuple[Tensor, Tensor, Tensor]:
        """Returns ``(Q [batch, n_out], phi [batch, N], W [N, n_out])``."""
        phi = self.features(x)
        return linear(phi, self.head), phi, self.head

    def __call__(self, x) -> Tensor:
        return self.q_with_features(x)[0]

    def features_array(self, x: np.ndarray) -> np.ndarray:
        """Tape-free ``phi`` with the same arithmetic as :meth:`features`."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"expected inputs of shape [batch, {self.in_dim}], got {x.shape}")
        return self.trunk.forward_array(x)

    def q_array(self, x: np.ndarray) -> np.ndarray:
        return self.features_array(x) @ self.head.data


class Critic(ValueNetwork):
    """Continuous-action critic: the trunk reads the concatenation ``(s, a)``."""

    def __init__(self, obs_dim: int, action_dim: int, hidden_sizes: Sequence[int], rng: np.random.Generator):
        super().__init__(obs_dim + action_dim, hidden_sizes, 1, rng)
        self.obs_dim = obs_dim
        self.action_dim = action_dim

    def inputs(self, s, a) -> Tensor:
        return F.concat([s, a], axis=1)

    def q_sa(self, s, a) -> tuple[Tensor, Tensor, Tensor]:
        """``(Q [batch], phi [batch, N], w [N])`` for state-action batches."""
        q, phi, W = self.q_with_features(self.inputs(s, a))
        return F.reshape(q, (-1,)), phi, W

    def features_sa(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.features_array(np.concatenate([s, a], axis=1))

    def q_sa_array(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return (self.features_sa(s, a) @ self.head.data)[:, 0]


class Actor(Module):
    """Deterministic policy ``max_action * tanh(MLP(s))``."""

    def __init__(self, obs_dim: int, action_dim: int, hidden_sizes: Sequence[int],
                 max_action: float, rng: np.random.Generator):
        self.net = MLP([obs_dim, *hidden_sizes, action_dim], rng, output_activation="tanh")
        self.max_action = float(max_action)

    def __call__(self, s) -> Tensor:
        return self.net(s) * self.max_action

    def forward_array(self, s: np.ndarray) -> np.ndarray:
        return self.net.forward_array(s) * self.max_action


class AuxHeads(Module):
    """``k`` bias-free linear heads reading the representation."""

    def __init__(self, feature_dim: int, k: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(feature_dim)
        self.weight = Tensor(rng.uniform(-bound, bound, size=(feature_dim, k)), requires_grad=True)

    def __call__(self, phi) -> Tensor:
        return linear(phi, self.weight)

    def forward_array(self, phi: np.ndarray) -> np.ndarray:
        return phi @ self.weight.data
