"""Flat experiment configuration with a fixed schema."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from beer.agents.config import AgentConfig
from beer.errors import ConfigError

AGENT_KEYS = tuple(f.name for f in fields(AgentConfig))
NOT_HASHED = ("seeds", "out_dir")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run except the seed.

    The agent hyperparameters of :class:`AgentConfig` appear here as
    top-level keys. ``approx_horizon = 0`` selects the horizon at which
    ``gamma ** t`` drops below 1e-6; ``approx_states = 0`` disables the
    Monte-Carlo error metric.
    """

    name: str = "experiment"
    env: str = "gridworld"
    agent: str = "dqn"
    # agent hyperparameters
    gamma: float = 0.99
    beta: float = 5e-3
    tau: float = 0.005
    lr_actor: float = 3e-4
    lr_critic: float = 1e-4
    batch_size: int = 64
    hidden_sizes: list = field(default_factory=lambda: [32, 32])
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
    # loop and metrics
    buffer_capacity: int = 100_000
    total_steps: int = 25_000
    max_episode_steps: int = 200
    eval_interval: int = 5_000
    eval_episodes: int = 10
    rank_epsilon: float = 0.01
    rank_batch: int = 64
    rank_repeats: int = 5
    approx_states: int = 32
    approx_rollouts: int = 1
    approx_horizon: int = 0
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        _check_types(self)
        if self.env not in ("gridworld", "pendulum"):
            raise ConfigError(f"env must be 'gridworld' or 'pendulum', got {self.env!r}")
        if self.agent not in ("dqn", "dpg"):
            raise ConfigError(f"agent must be 'dqn' or 'dpg', got {self.agent!r}")
        if (self.env == "gridworld") != (self.agent == "dqn"):
            raise ConfigError(f"agent {self.agent!r} does not fit the {self.env!r} action space")
        for key in ("total_steps", "eval_interval", "buffer_capacity", "max_episode_steps",
                    "rank_batch", "rank_repeats", "eval_episodes"):
            if getattr(self, key) < (0 if key == "total_steps" else 1):
                raise ConfigError(f"{key} is out of range: {getattr(self, key)}")
        for key in ("approx_states", "approx_rollouts", "approx_horizon"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be non-negative")
        if self.rank_epsilon < 0:
            raise ConfigError("rank_epsilon must be non-negative")
        if not self.seeds:
            raise ConfigError("seeds must list at least one seed")
        self.agent_config()

    def agent_config(self) -> AgentConfig:
        kwargs = {k: getattr(self, k) for k in AGENT_KEYS}
        kwargs["hidden_sizes"] = tuple(kwargs["hidden_sizes"])
        return AgentConfig(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def replace(self, **overrides) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(overrides)
        return from_dict(data)

    def config_hash(self) -> str:
        """sha256 of the canonical JSON of every key except seeds and out_dir."""
        data = {k: v for k, v in self.to_dict().items() if k not in NOT_HASHED}
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _check_types(cfg: ExperimentConfig) -> None:
    for name, kind in _FIELD_TYPES.items():
        value = getattr(cfg, name)
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a number, got {value!r}")
            setattr(cfg, name, float(value))
        elif kind == "int":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            setattr(cfg, name, int(value))
        elif kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{name} must be true or false, got {value!r}")
        elif kind == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{name} must be a string, got {value!r}")
        elif kind == "list":
            if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError(f"{name} must be a list of integers, got {value!r}")
            setattr(cfg, name, [int(v) for v in value])


def from_dict(data: dict[str, Any]) -> ExperimentConfig:
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    try:
        return ExperimentConfig(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    data.update(overrides or {})
    return from_dict(data)


def parse_value(key: str, text: str) -> Any:
    """Convert a command-line string to the type the schema expects for ``key``."""
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if kind == "list":
            return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for {key}") from exc
    return text


def schema_keys() -> tuple[str, ...]:
    return tuple(_FIELD_TYPES)
