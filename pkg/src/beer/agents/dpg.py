"""Deterministic policy gradient with the Bellman-expectation BEER term.

Each update fits the critic to ``r + gamma * Q'(s', pi'(s'))``, then moves
the actor up ``Q(s, pi(s))`` through a frozen critic, then soft-updates both
targets. No twin critics, target smoothing or delayed updates.
"""
from __future__ import annotations

import numpy as np

from beer.agents.config import AgentConfig
from beer.agents.dqn import LossTerms, StepMetrics
from beer.agents.networks import Actor, AuxHeads, Critic, soft_update
from beer.agents.regularizers import beer_regularizer, dr3_penalty, infer_loss
from beer.autodiff import Adam, Tape, Tensor, mean, mse, no_grad
from beer.replay import Batch, ReplayBuffer


class DPGAgent:
    discrete = False

    def __init__(self, obs_dim: int, action_dim: int, max_action: float,
                 config: AgentConfig, rng: np.random.Generator):
        self.config = config
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.max_action = float(max_action)
        self.actor = Actor(obs_dim, action_dim, config.hidden_sizes, max_action, rng)
        self.critic = Critic(obs_dim, action_dim, config.hidden_sizes, rng)
        self.actor_target = self.actor.clone(requires_grad=False)
        self.critic_target = self.critic.clone(requires_grad=False)
        self.aux = None
        self.aux_init = None
        critic_params = self.critic.parameters()
        if config.regularizer == "infer":
            self.aux = AuxHeads(self.critic.feature_dim, config.infer_heads, rng)
            self.aux_init = (self.critic.clone(requires_grad=False), self.aux.clone(requires_grad=False))
            critic_params = critic_params + self.aux.parameters()
        self.critic_opt = Adam(critic_params, lr=config.lr_critic)
        self.actor_opt = Adam(self.actor.parameters(), lr=config.lr_actor)
        self._pairs = (
            (self.critic.parameters(), self.critic_target.parameters()),
            (self.actor.parameters(), self.actor_target.parameters()),
        )
        self.train_steps = 0

    # acting

    def policy(self, obs) -> np.ndarray:
        return self.actor.forward_array(np.atleast_2d(obs))

    def greedy_action(self, obs) -> np.ndarray:
        return self.policy(obs)[0]

    def select_action(self, obs, mode: str, rng: np.random.Generator) -> np.ndarray:
        a = self.greedy_action(obs)
        if mode == "greedy":
            return a
        if mode != "explore":
            raise ValueError(f"unknown action mode {mode!r}")
        noise = rng.normal(0.0, self.config.sigma, size=self.action_dim)
        return np.clip(a + noise, -self.max_action, self.max_action)

    def features(self, states, actions) -> np.ndarray:
        return self.critic.features_sa(np.atleast_2d(states), np.atleast_2d(actions))

    def q_estimate(self, states, actions) -> np.ndarray:
        return self.critic.q_sa_array(np.atleast_2d(states), np.atleast_2d(actions))

    # learning

    def representation_pairs(self, batch: Batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(phi, phi_next, w)`` rows as the regularizer sees them, without gradients."""
        a2 = self.actor_target.forward_array(batch.next_states)
        rep_net = self.critic if self.config.next_rep_source == "online" else self.critic_target
        phi = self.critic.features_sa(batch.states, batch.actions)
        w = np.broadcast_to(self.critic.head.data[:, 0], phi.shape)
        return phi, rep_net.features_sa(batch.next_states, a2), w

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator,
                   diagnostics: bool = True) -> StepMetrics:
        return self.update(buffer.sample_uniform(self.config.batch_size, rng), diagnostics)

    def td_target(self, batch: Batch) -> np.ndarray:
        a2 = self.actor_target.forward_array(batch.next_states)
        q2 = self.critic_target.q_sa_array(batch.next_states, a2)
        return batch.rewards + self.config.gamma * q2 * (1.0 - batch.dones)

    def loss_gradients(self, batch: Batch) -> LossTerms:
        """Critic TD loss plus the configured regularizer, and its critic-parameter gradients."""
        cfg = self.config
        a2 = self.actor_target.forward_array(batch.next_states)
        rep_net = self.critic if cfg.next_rep_source == "online" else self.critic_target
        phi_next = rep_net.features_sa(batch.next_states, a2)
        y = self.td_target(batch)
        mask = (batch.dones == 0.0) if cfg.terminal_mask else None
        with Tape() as tape:
            q, phi, W = self.critic.q_sa(batch.states, batch.actions)
            w = W.data[:, 0]
            td = mse(q, y)
            reg, loss = self._regularized(td, phi, phi_next, batch, w, mask)
            grads = tape.backward(loss)
        return LossTerms(td.item(), reg, loss.item(), grads, phi.data, phi_next, w, mask)

    def actor_gradients(self, states: np.ndarray) -> dict:
        """Gradient of ``-mean Q(s, pi(s))`` with respect to the actor only."""
        with Tape() as tape, self.critic.frozen():
            q_pi = self.critic.q_sa(states, self.actor(states))[0]
            return tape.backward(-mean(q_pi))

    def update(self, batch: Batch, diagnostics: bool = True) -> StepMetrics:
        """Critic step, then actor step through the updated critic, then both soft updates."""
        terms = self.loss_gradients(batch)
        self.critic_opt.step(terms.grads)
        self.actor_opt.step(self.actor_gradients(batch.states))
        for online, target in self._pairs:
            soft_update(online, target, self.config.tau)
        self.train_steps += 1
        return terms.metrics(batch, self.config.gamma, diagnostics)

    def _regularized(self, td: Tensor, phi: Tensor, phi_next, batch: Batch, w, mask):
        cfg = self.config
        kind = cfg.regularizer
        if kind == "beer":
            r = beer_regularizer(phi, phi_next, batch.rewards, w, cfg.gamma, mask)
            return r.item(), td + cfg.beta * r
        if kind == "dr3":
            r = dr3_penalty(phi, phi_next)
            return r.item(), td + cfg.dr3_c0 * r
        if kind == "infer":
            net0, aux0 = self.aux_init
            g0 = aux0.forward_array(net0.features_sa(batch.states, batch.actions))
            r = infer_loss(self.aux(phi), g0, cfg.beta_infer)
            return r.item(), td + cfg.alpha_infer * r
        with no_grad():
            r = beer_regularizer(phi, phi_next, batch.rewards, w, cfg.gamma, mask)
        return r.item(), td

    def modules(self) -> dict:
        out = {"actor": self.actor, "critic": self.critic,
               "actor_target": self.actor_target, "critic_target": self.critic_target}
        if self.aux is not None:
            out.update(aux=self.aux, critic_init=self.aux_init[0], aux_init=self.aux_init[1])
        return out

    def optimizers(self) -> dict:
        return {"critic_opt": self.critic_opt, "actor_opt": self.actor_opt}
