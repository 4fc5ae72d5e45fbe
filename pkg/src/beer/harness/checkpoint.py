"""Agent checkpoints on top of the parameter payload format.

Every network (online, target, frozen auxiliary copies) and every optimizer
moment buffer is written. Loading validates the whole file against the
agent before touching it, so a failed load leaves the agent unchanged.
"""
from __future__ import annotations

import os
from typing import Any, Mapping

import numpy as np

from beer.autodiff import serialize
from beer.errors import CheckpointError


def agent_arrays(agent) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    arrays: dict[str, np.ndarray] = {}
    for mod_name, module in agent.modules().items():
        for key, value in module.state_dict().items():
            arrays[f"net.{mod_name}.{key}"] = value
    steps = {}
    for opt_name, opt in agent.optimizers().items():
        arrays.update(opt.state_arrays(f"opt.{opt_name}"))
        steps[opt_name] = opt.state.t
    meta = {"optimizer_steps": steps, "train_steps": agent.train_steps}
    return arrays, meta


def apply_agent_arrays(agent, arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any]) -> None:
    """Load every agent array after checking names and shapes against the live agent."""
    expected, _ = agent_arrays(agent)
    missing = sorted(set(expected) - set(arrays))
    if missing:
        raise CheckpointError(f"checkpoint lacks agent arrays: {missing[:5]}")
    for name, value in expected.items():
        if arrays[name].shape != value.shape:
            raise CheckpointError(f"{name}: shape {arrays[name].shape} does not match {value.shape}")
    for mod_name, module in agent.modules().items():
        prefix = f"net.{mod_name}."
        module.load_state_dict({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
    for opt_name, opt in agent.optimizers().items():
        opt.load_state_arrays(f"opt.{opt_name}", arrays, meta["optimizer_steps"][opt_name])
    agent.train_steps = int(meta["train_steps"])


def save_checkpoint(path: str | os.PathLike, agent, extra_arrays: Mapping[str, np.ndarray] | None = None,
                    extra_meta: Mapping[str, Any] | None = None) -> None:
    arrays, meta = agent_arrays(agent)
    arrays.update(extra_arrays or {})
    meta.update(extra_meta or {})
    serialize.save(path, arrays, meta)


def load_checkpoint(path: str | os.PathLike, agent) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Restore ``agent`` in place; returns the full array and meta maps for the caller's extras."""
    arrays, meta = serialize.load(path)
    apply_agent_arrays(agent, arrays, meta)
    return arrays, meta
