"""Agent hyperparameters."""
from __future__ import annotations

from dataclasses import dataclass, field

from beer.errors import ConfigError

REGULARIZERS = ("none", "beer", "dr3", "infer")


@dataclass
class AgentConfig:
    """Hyperparameters shared by the DQN and DPG agents.

    ``epsilon`` is the DQN exploration rate and ``sigma`` the DPG Gaussian
    exploration scale in action units. ``next_rep_source`` selects which
    trunk produces the stop-gradiented successor representation.
    """

    gamma: float = 0.99
    beta: float = 5e-3
    tau: float = 0.005
    lr_actor: float = 3e-4
    lr_critic: float = 1e-4
    batch_size: int = 64
    hidden_sizes: tuple[int, ...] = field(default=(32, 32))
    epsilon: float = 0.1
    sigma: float = 0.2
    warmup_steps: int = 1000
    regularizer: str = "beer"
    terminal_mask: bool = True
    next_rep_source: str = "online"
    infer_heads: int = 10
    beta_infer: float = 100.0
    alpha_infer: float = 0.1
    dr3_c0: float = 5e-3

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        self.validate()

    def validate(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.beta < 0:
            raise ConfigError(f"beta must be non-negative, got {self.beta}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.regularizer not in REGULARIZERS:
            raise ConfigError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        if self.next_rep_source not in ("online", "target"):
            raise ConfigError(f"next_rep_source must be 'online' or 'target', got {self.next_rep_source!r}")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigError("hidden_sizes needs at least one positive width")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        for name in ("lr_actor", "lr_critic", "sigma", "alpha_infer", "dr3_c0", "warmup_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.infer_heads < 1:
            raise ConfigError("infer_heads must be positive")
