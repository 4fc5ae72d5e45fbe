"""Desk-scale environments behind one stepping interface.

``GridWorld`` is an open 4x5 grid with the goal in the bottom-right corner;
``Pendulum`` is the classic torque-limited swing-up. Both return
:class:`Transition` records from :meth:`step`. ``done`` marks a true terminal
state (no bootstrap); ``truncated`` marks an episode cut short by the step
limit, after which the successor is still a regular state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beer.errors import EpisodeFinishedError

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int | np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    truncated: bool = False


def _as_rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


class GridWorld:
    """20 states, id = row * 5 + col; entering the goal pays 10 and ends the episode.

    Moves that would leave the grid keep the agent in place. Observations
    are one-hot vectors of length 20.
    """

    discrete = True
    n_rows, n_cols = 4, 5
    n_states = 20
    n_actions = 4
    obs_dim = 20
    goal_reward = 10.0

    def __init__(self, terminal: int = 19, max_episode_steps: int | None = 200):
        if not 0 <= terminal < self.n_states:
            raise ValueError(f"terminal state {terminal} outside [0, {self.n_states - 1}]")
        self.terminal = terminal
        self.max_episode_steps = max_episode_steps
        self.state = 0
        self.steps = 0
        self.finished = True

    def start_states(self) -> np.ndarray:
        return np.array([s for s in range(self.n_states) if s != self.terminal])

    def encode(self, state: int) -> np.ndarray:
        obs = np.zeros(self.obs_dim)
        obs[state] = 1.0
        return obs

    def reset(self, rng) -> np.ndarray:
        starts = self.start_states()
        return self.set_state(int(starts[_as_rng(rng).integers(len(starts))]))

    def set_state(self, state: int) -> np.ndarray:
        """Place the agent at ``state`` and start a fresh episode there."""
        if not 0 <= state < self.n_states or state == self.terminal:
            raise ValueError(f"cannot start at state {state}")
        self.state = int(state)
        self.steps = 0
        self.finished = False
        return self.encode(self.state)

    def restore_observation(self, obs: np.ndarray) -> np.ndarray:
        """Start a fresh episode at the state that produced ``obs``."""
        return self.set_state(int(np.argmax(obs)))

    def move(self, state: int, action: int) -> int:
        row, col = divmod(state, self.n_cols)
        if action == UP:
            row = max(row - 1, 0)
        elif action == DOWN:
            row = min(row + 1, self.n_rows - 1)
        elif action == LEFT:
            col = max(col - 1, 0)
        else:
            col = min(col + 1, self.n_cols - 1)
        return row * self.n_cols + col

    def step(self, action) -> Transition:
        if self.finished:
            raise EpisodeFinishedError("episode has ended; call reset()")
        a = int(action)
        if a != action or not 0 <= a < self.n_actions:
            raise ValueError(f"action {action!r} outside 0..{self.n_actions - 1}")
        s = self.state
        s_next = self.move(s, a)
        self.state = s_next
        self.steps += 1
        done = s_next == self.terminal
        truncated = not done and self.max_episode_steps is not None and self.steps >= self.max_episode_steps
        self.finished = done or truncated
        return Transition(
            self.encode(s), a, self.goal_reward if done else 0.0, self.encode(s_next), done, truncated
        )

    def get_state(self) -> dict:
        return {"state": self.state, "steps": self.steps, "finished": self.finished}

    def load_state(self, snapshot: dict) -> None:
        self.state = int(snapshot["state"])
        self.steps = int(snapshot["steps"])
        self.finished = bool(snapshot["finished"])

    def spawn(self, max_episode_steps: int | None = None) -> "GridWorld":
        """A fresh instance with the same layout and a different step limit."""
        return GridWorld(self.terminal, max_episode_steps)


def wrap_angle(theta):
    """Map an angle to (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - theta, 2.0 * np.pi)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


class Pendulum:
    """Torque-limited pendulum, upright at theta = 0.

    Semi-implicit Euler: the velocity is updated first and the angle uses
    the new velocity. The reward is computed from the pre-step state.
    """

    discrete = False
    obs_dim = 3
    action_dim = 1
    max_torque = 2.0
    max_speed = 8.0

    def __init__(self, g: float = 10.0, mass: float = 1.0, length: float = 1.0,
                 dt: float = 0.05, max_episode_steps: int | None = 200):
        self.g, self.mass, self.length, self.dt = g, mass, length, dt
        self.max_episode_steps = max_episode_steps
        self.theta = 0.0
        self.theta_dot = 0.0
        self.steps = 0
        self.finished = True

    @property
    def action_low(self) -> np.ndarray:
        return np.full(self.action_dim, -self.max_torque)

    @property
    def action_high(self) -> np.ndarray:
        return np.full(self.action_dim, self.max_torque)

    def observe(self) -> np.ndarray:
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])

    def reset(self, rng) -> np.ndarray:
        rng = _as_rng(rng)
        # uniform on (-pi, pi]: negate a draw from [-pi, pi)
        theta = -rng.uniform(-np.pi, np.pi)
        return self.set_state(theta, rng.uniform(-1.0, 1.0))

    def set_state(self, theta: float, theta_dot: float) -> np.ndarray:
        self.theta = wrap_angle(float(theta))
        self.theta_dot = float(np.clip(theta_dot, -self.max_speed, self.max_speed))
        self.steps = 0
        self.finished = False
        return self.observe()

    def restore_observation(self, obs: np.ndarray) -> np.ndarray:
        return self.set_state(np.arctan2(obs[1], obs[0]), obs[2])

    def angular_acceleration(self, theta: float, torque: float) -> float:
        return (3.0 * self.g / (2.0 * self.length) * np.sin(theta)
                + 3.0 / (self.mass * self.length**2) * torque)

    def step(self, action) -> Transition:
        if self.finished:
            raise EpisodeFinishedError("episode has ended; call reset()")
        u = np.asarray(action, dtype=np.float64).reshape(-1)
        if u.shape != (1,) or not np.isfinite(u[0]) or abs(u[0]) > self.max_torque:
            raise ValueError(f"torque {action!r} outside [-{self.max_torque}, {self.max_torque}]")
        torque = float(u[0])
        obs = self.observe()
        th, thdot = self.theta, self.theta_dot
        reward = -(wrap_angle(th) ** 2 + 0.1 * thdot**2 + 0.001 * torque**2)
        thdot = float(np.clip(thdot + self.dt * self.angular_acceleration(th, torque),
                              -self.max_speed, self.max_speed))
        self.theta = wrap_angle(th + self.dt * thdot)
        self.theta_dot = thdot
        self.steps += 1
        truncated = self.max_episode_steps is not None and self.steps >= self.max_episode_steps
        self.finished = truncated
        return Transition(obs, u.copy(), reward, self.observe(), False, truncated)

    def energy(self) -> float:
        """Mechanical energy per unit rotational inertia, zero at rest at the bottom."""
        return 0.5 * self.theta_dot**2 + 1.5 * self.g / self.length * (1.0 + np.cos(self.theta))

    def get_state(self) -> dict:
        return {"theta": self.theta, "theta_dot": self.theta_dot,
                "steps": self.steps, "finished": self.finished}

    def load_state(self, snapshot: dict) -> None:
        self.theta = float(snapshot["theta"])
        self.theta_dot = float(snapshot["theta_dot"])
        self.steps = int(snapshot["steps"])
        self.finished = bool(snapshot["finished"])

    def spawn(self, max_episode_steps: int | None = None) -> "Pendulum":
        return Pendulum(self.g, self.mass, self.length, self.dt, max_episode_steps)


def make_env(name: str, **kwargs):
    if name == "gridworld":
        return GridWorld(**kwargs)
    if name == "pendulum":
        return Pendulum(**kwargs)
    raise ValueError(f"unknown environment {name!r}")
