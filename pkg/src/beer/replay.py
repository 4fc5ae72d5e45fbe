"""Fixed-capacity ring buffer of transitions with uniform sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beer.envs import Transition
from beer.errors import UnderfullBufferError


@dataclass(frozen=True)
class Batch:
    """Column-stacked transitions; ``index`` holds the buffer slots drawn."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    index: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


class ReplayBuffer:
    """Preallocated storage; once full, each push overwrites the oldest entry.

    Actions are stored as integers when ``action_dim`` is None (discrete)
    and as float vectors otherwise.
    """

    def __init__(self, capacity: int, obs_dim: int, action_dim: int | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.states = np.zeros((capacity, obs_dim))
        self.next_states = np.zeros((capacity, obs_dim))
        if action_dim is None:
            self.actions = np.zeros(capacity, dtype=np.int64)
        else:
            self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        i = self.cursor
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = float(t.done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def gather(self, index: np.ndarray) -> Batch:
        return Batch(
            self.states[index], self.actions[index], self.rewards[index],
            self.next_states[index], self.dones[index], index,
        )

    def sample_uniform(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """``batch_size`` independent draws with replacement over the live entries."""
        if self.size < batch_size or self.size == 0:
            raise UnderfullBufferError(f"buffer holds {self.size} transitions, {batch_size} requested")
        return self.gather(rng.integers(0, self.size, size=batch_size))

    def live_arrays(self) -> dict[str, np.ndarray]:
        """Stored entries in insertion order (oldest first), for checkpoints."""
        order = self.insertion_order()
        return {
            "states": self.states[order], "actions": self.actions[order].astype(np.float64),
            "rewards": self.rewards[order], "next_states": self.next_states[order],
            "dones": self.dones[order],
        }

    def insertion_order(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self.cursor) % self.capacity

    def restore(self, arrays: dict[str, np.ndarray], cursor: int, size: int) -> None:
        """Inverse of :meth:`live_arrays` given the saved cursor and size."""
        self.cursor = int(cursor)
        self.size = int(size)
        order = self.insertion_order()
        self.states[order] = arrays["states"]
        self.actions[order] = arrays["actions"].astype(self.actions.dtype)
        self.rewards[order] = arrays["rewards"]
        self.next_states[order] = arrays["next_states"]
        self.dones[order] = arrays["dones"]
