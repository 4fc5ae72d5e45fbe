"""DQN with an optional representation regularizer.

The TD target uses a soft-updated target network with a max backup. For
the Bellman-optimality BEER term the successor representation is
``phi(s')`` from the online trunk (the trunk reads only the state, so the
greedy next action does not change it) and ``|w|`` is the head column of
the action actually taken.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beer.agents.config import AgentConfig
from beer.agents.networks import AuxHeads, ValueNetwork, soft_update
from beer.agents.regularizers import beer_regularizer, bound_gap, dr3_penalty, infer_loss
from beer.autodiff import Adam, Tape, Tensor, gather, mse, no_grad
from beer.replay import Batch, ReplayBuffer


@dataclass(frozen=True)
class StepMetrics:
    td_loss: float
    regularizer_value: float
    bound_gap_mean: float
    bound_gap_max: float


def gap_stats(gaps: np.ndarray) -> tuple[float, float]:
    if gaps.size == 0:
        return float("nan"), float("nan")
    return float(np.mean(gaps)), float(np.max(gaps))


@dataclass(frozen=True)
class LossTerms:
    """One loss evaluation: scalar parts, gradients by parameter, and the regularizer inputs."""

    td_loss: float
    regularizer_value: float
    total: float
    grads: dict
    phi: np.ndarray
    phi_next: np.ndarray
    w: np.ndarray
    mask: np.ndarray | None

    def metrics(self, batch: Batch, gamma: float, diagnostics: bool) -> StepMetrics:
        if not diagnostics:
            return StepMetrics(self.td_loss, self.regularizer_value, float("nan"), float("nan"))
        keep = slice(None) if self.mask is None else self.mask
        w = np.broadcast_to(self.w, self.phi.shape)
        gaps = bound_gap(self.phi[keep], self.phi_next[keep], batch.rewards[keep], w[keep], gamma)
        return StepMetrics(self.td_loss, self.regularizer_value, *gap_stats(gaps))


class DQNAgent:
    discrete = True

    def __init__(self, obs_dim: int, n_actions: int, config: AgentConfig, rng: np.random.Generator):
        self.config = config
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.online = ValueNetwork(obs_dim, config.hidden_sizes, n_actions, rng)
        self.target = self.online.clone(requires_grad=False)
        self.aux = None
        self.aux_init = None
        params = self.online.parameters()
        if config.regularizer == "infer":
            self.aux = AuxHeads(self.online.feature_dim, config.infer_heads, rng)
            self.aux_init = (self.online.clone(requires_grad=False), self.aux.clone(requires_grad=False))
            params = params + self.aux.parameters()
        self.optimizer = Adam(params, lr=config.lr_critic)
        self._online_params = self.online.parameters()
        self._target_params = self.target.parameters()
        self.train_steps = 0

    # acting

    def q_values(self, obs) -> np.ndarray:
        return self.online.q_array(np.atleast_2d(obs))

    def greedy_action(self, obs) -> int:
        # np.argmax breaks ties toward the lowest index
        return int(np.argmax(self.q_values(obs)[0]))

    def select_action(self, obs, mode: str, rng: np.random.Generator) -> int:
        if mode == "greedy":
            return self.greedy_action(obs)
        if mode != "explore":
            raise ValueError(f"unknown action mode {mode!r}")
        if rng.random() < self.config.epsilon:
            return int(rng.integers(self.n_actions))
        return self.greedy_action(obs)

    def features(self, states, actions=None) -> np.ndarray:
        return self.online.features_array(states)

    def q_estimate(self, states, actions) -> np.ndarray:
        q = self.q_values(states)
        return q[np.arange(len(q)), np.asarray(actions, dtype=np.int64)]

    # learning

    def successor_features(self, next_states: np.ndarray) -> np.ndarray:
        net = self.online if self.config.next_rep_source == "online" else self.target
        return net.features_array(next_states)

    def representation_pairs(self, batch: Batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(phi, phi_next, w)`` rows as the regularizer sees them, without gradients."""
        phi = self.online.features_array(batch.states)
        w = self.online.head.data[:, batch.actions.astype(np.int64)].T
        return phi, self.successor_features(batch.next_states), w

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator,
                   diagnostics: bool = True) -> StepMetrics:
        return self.update(buffer.sample_uniform(self.config.batch_size, rng), diagnostics)

    def td_target(self, batch: Batch) -> np.ndarray:
        q_next = self.target.q_array(batch.next_states)
        return batch.rewards + self.config.gamma * q_next.max(axis=1) * (1.0 - batch.dones)

    def loss_gradients(self, batch: Batch) -> LossTerms:
        """TD loss plus the configured regularizer on ``batch``, and its parameter gradients."""
        cfg = self.config
        actions = batch.actions.astype(np.int64)
        y = self.td_target(batch)
        phi_next = self.successor_features(batch.next_states)
        mask = (batch.dones == 0.0) if cfg.terminal_mask else None
        with Tape() as tape:
            q, phi, W = self.online.q_with_features(batch.states)
            w_taken = W.data[:, actions].T
            td = mse(gather(q, actions), y) * 0.5
            reg, loss = self._regularized(td, phi, phi_next, batch, w_taken, mask)
            grads = tape.backward(loss)
        return LossTerms(td.item(), reg, loss.item(), grads, phi.data, phi_next, w_taken, mask)

    def update(self, batch: Batch, diagnostics: bool = True) -> StepMetrics:
        """One gradient step on ``batch``; bound-gap statistics are NaN unless ``diagnostics``."""
        terms = self.loss_gradients(batch)
        self.optimizer.step(terms.grads)
        soft_update(self._online_params, self._target_params, self.config.tau)
        self.train_steps += 1
        return terms.metrics(batch, self.config.gamma, diagnostics)

    def _regularized(self, td: Tensor, phi: Tensor, phi_next, batch: Batch, w_taken, mask):
        """Adds the configured term to the TD loss; returns its unscaled value and the total."""
        cfg = self.config
        kind = cfg.regularizer
        if kind == "beer":
            r = beer_regularizer(phi, phi_next, batch.rewards, w_taken, cfg.gamma, mask)
            return r.item(), td + cfg.beta * r
        if kind == "dr3":
            r = dr3_penalty(phi, phi_next)
            return r.item(), td + cfg.dr3_c0 * r
        if kind == "infer":
            net0, aux0 = self.aux_init
            g0 = aux0.forward_array(net0.features_array(batch.states))
            r = infer_loss(self.aux(phi), g0, cfg.beta_infer)
            return r.item(), td + cfg.alpha_infer * r
        # plain agent: report the BEER value as a diagnostic without touching the loss
        with no_grad():
            r = beer_regularizer(phi, phi_next, batch.rewards, w_taken, cfg.gamma, mask)
        return r.item(), td

    # checkpoint plumbing

    def modules(self) -> dict:
        out = {"online": self.online, "target": self.target}
        if self.aux is not None:
            out.update(aux=self.aux, online_init=self.aux_init[0], aux_init=self.aux_init[1])
        return out

    def optimizers(self) -> dict:
        return {"opt": self.optimizer}
