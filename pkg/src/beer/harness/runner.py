"""The training loop, metric snapshots, CSV output and resumable run state."""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from beer.agents import DPGAgent, DQNAgent
from beer.envs import make_env
from beer.errors import CheckpointError, DegenerateVectorError
from beer.harness import checkpoint
from beer.harness.config import ExperimentConfig, from_dict
from beer.harness.seeding import ROLES, streams
from beer.metrics import (
    MetricSnapshot,
    approx_error_monte_carlo,
    bound_gap_C,
    evaluate_policy,
    mc_horizon,
    mean_adjacent_cosine,
    representation_rank_metric,
)
from beer.replay import ReplayBuffer

CSV_COLUMNS = (
    "step", "eval_return_mean", "eval_return_std", "steps_to_goal", "representation_rank",
    "mean_cosine", "bound_gap_mean", "bound_gap_max", "approx_error", "td_loss",
    "regularizer_value",
)
METRIC_COLUMNS = CSV_COLUMNS[1:]


@dataclass
class RunRecord:
    """Snapshots of one (config, seed) run in step order; append-only."""

    config_hash: str
    seed: int
    snapshots: list[MetricSnapshot] = field(default_factory=list)
    checkpoint_path: str | None = None

    def append(self, snap: MetricSnapshot) -> None:
        if self.snapshots and snap.step <= self.snapshots[-1].step:
            raise ValueError(f"snapshot step {snap.step} does not follow {self.snapshots[-1].step}")
        self.snapshots.append(snap)

    def csv_text(self) -> str:
        return format_csv(self.config_hash, self.seed, self.snapshots)


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def format_csv(config_hash: str, seed: int, snapshots) -> str:
    out = io.StringIO()
    out.write(f"# config_hash={config_hash}\n# seed={seed}\n# std=population\n")
    out.write(",".join(CSV_COLUMNS) + "\n")
    for snap in snapshots:
        row = snap.as_dict()
        cells = [str(int(row["step"]))] + [format_float(row[c]) for c in METRIC_COLUMNS]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def read_csv(path: str | os.PathLike) -> RunRecord:
    """Parse a run CSV back into a record (metadata from the ``#`` lines)."""
    meta, rows, header = {}, [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif header is None:
            header = line.split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected columns {header}")
        elif line:
            cells = line.split(",")
            values = {c: float(v) for c, v in zip(METRIC_COLUMNS, cells[1:])}
            rows.append(MetricSnapshot(step=int(cells[0]), **values))
    if "config_hash" not in meta or "seed" not in meta:
        raise ValueError(f"{path}: missing config_hash or seed metadata")
    record = RunRecord(meta["config_hash"], int(meta["seed"]))
    for snap in rows:
        record.append(snap)
    return record


def build_agent(config: ExperimentConfig, env, rng: np.random.Generator):
    agent_cfg = config.agent_config()
    if config.agent == "dqn":
        return DQNAgent(env.obs_dim, env.n_actions, agent_cfg, rng)
    return DPGAgent(env.obs_dim, env.action_dim, env.max_torque, agent_cfg, rng)


class Run:
    """In-flight state of one (config, seed) run.

    Env step ``t`` (1-based) uses a random action while ``t <= warmup_steps``
    and is followed by one train step once ``t > warmup_steps``. Snapshots
    are taken at step 0 and at every multiple of ``eval_interval``.
    """

    def __init__(self, config: ExperimentConfig, seed: int):
        self.config = config
        self.seed = int(seed)
        self.rngs = streams(self.seed)
        self.env = make_env(config.env, max_episode_steps=config.max_episode_steps)
        self.agent = build_agent(config, self.env, self.rngs["init"])
        action_dim = None if self.env.discrete else self.env.action_dim
        self.buffer = ReplayBuffer(config.buffer_capacity, self.env.obs_dim, action_dim)
        self.horizon = config.approx_horizon or mc_horizon(config.gamma)
        self.record = RunRecord(config.config_hash(), self.seed)
        self.step = 0
        self.obs = self.env.reset(self.rngs["env"])
        self._reset_accumulators()

    def _reset_accumulators(self) -> None:
        self.td_sum = 0.0
        self.reg_sum = 0.0
        self.n_updates = 0

    # loop

    def run_until(self, total: int | None = None) -> RunRecord:
        total = self.config.total_steps if total is None else int(total)
        if not self.record.snapshots:
            self.record.append(self.snapshot())
        cfg = self.config
        while self.step < total:
            self.step += 1
            self._env_step()
            if self.step > cfg.warmup_steps and len(self.buffer) >= cfg.batch_size:
                m = self.agent.train_step(self.buffer, self.rngs["replay"], diagnostics=False)
                self.td_sum += m.td_loss
                self.reg_sum += m.regularizer_value
                self.n_updates += 1
            if self.step % cfg.eval_interval == 0:
                self.record.append(self.snapshot())
        return self.record

    def _env_step(self) -> None:
        rng = self.rngs["explore"]
        if self.step <= self.config.warmup_steps:
            if self.env.discrete:
                action = int(rng.integers(self.env.n_actions))
            else:
                action = rng.uniform(self.env.action_low, self.env.action_high)
        else:
            action = self.agent.select_action(self.obs, "explore", rng)
        t = self.env.step(action)
        self.buffer.push(t)
        self.obs = self.env.reset(self.rngs["env"]) if (t.done or t.truncated) else t.next_state

    # metrics

    def snapshot(self) -> MetricSnapshot:
        cfg = self.config
        rng = self.rngs["metrics"]
        ev = evaluate_policy(self.agent, self.env, cfg.eval_episodes, self.rngs["eval"])
        values = {
            "eval_return_mean": ev.return_mean,
            "eval_return_std": ev.return_std,
            "steps_to_goal": ev.steps_to_goal,
        }
        if len(self.buffer) >= cfg.rank_batch:
            values["representation_rank"] = representation_rank_metric(
                self.agent, self.buffer, cfg.rank_epsilon, cfg.rank_batch, cfg.rank_repeats, rng)
        if len(self.buffer) >= cfg.batch_size:
            batch = self.buffer.sample_uniform(cfg.batch_size, rng)
            values["mean_cosine"] = mean_adjacent_cosine(self.agent, batch)
            keep = batch.dones == 0.0 if cfg.terminal_mask else np.ones(len(batch), dtype=bool)
            try:
                gaps = bound_gap_C(batch, self.agent, cfg.gamma)[keep]
            except DegenerateVectorError:
                gaps = np.empty(0)
            if gaps.size:
                values["bound_gap_mean"] = float(np.mean(gaps))
                values["bound_gap_max"] = float(np.max(gaps))
        if cfg.approx_states and len(self.buffer) >= cfg.approx_states:
            values["approx_error"] = approx_error_monte_carlo(
                self.agent, self.env, self.buffer, cfg.approx_states, cfg.approx_rollouts,
                self.horizon, cfg.gamma, rng)
        if self.n_updates:
            values["td_loss"] = self.td_sum / self.n_updates
            values["regularizer_value"] = self.reg_sum / self.n_updates
        self._reset_accumulators()
        return MetricSnapshot(step=self.step, **values)

    # persistence

    def save(self, path: str | os.PathLike) -> None:
        """Everything needed to continue bit-exactly: networks, optimizers, buffer, RNGs, env."""
        extra = {f"buffer.{k}": v for k, v in self.buffer.live_arrays().items()}
        extra["obs"] = np.asarray(self.obs, dtype=np.float64)
        meta = {
            "config": self.config.to_dict(),
            "config_hash": self.record.config_hash,
            "seed": self.seed,
            "step": self.step,
            "accumulators": [self.td_sum, self.reg_sum, self.n_updates],
            "buffer": {"cursor": self.buffer.cursor, "size": self.buffer.size},
            "env": self.env.get_state(),
            "rngs": {role: rng.bit_generator.state for role, rng in self.rngs.items()},
            "snapshots": [s.as_dict() for s in self.record.snapshots],
        }
        checkpoint.save_checkpoint(path, self.agent, extra, meta)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Run":
        from beer.autodiff import serialize

        arrays, meta = serialize.load(path)
        config = from_dict(meta["config"])
        if config.config_hash() != meta["config_hash"]:
            raise CheckpointError("stored config does not match its recorded hash")
        run = cls(config, meta["seed"])
        checkpoint.apply_agent_arrays(run.agent, arrays, meta)
        n = meta["buffer"]["size"]
        buf = {k[len("buffer."):]: v for k, v in arrays.items() if k.startswith("buffer.")}
        if any(len(v) != n for v in buf.values()):
            raise CheckpointError("buffer arrays disagree with the recorded size")
        run.buffer.restore(buf, meta["buffer"]["cursor"], n)
        run.obs = arrays["obs"].copy()
        run.env.load_state(meta["env"])
        for role in ROLES:
            run.rngs[role].bit_generator.state = meta["rngs"][role]
        run.step = int(meta["step"])
        run.td_sum, run.reg_sum, run.n_updates = meta["accumulators"]
        run.n_updates = int(run.n_updates)
        for snap in meta["snapshots"]:
            run.record.append(MetricSnapshot(**snap))
        return run


def run_paths(out_dir: str | os.PathLike, config: ExperimentConfig, seed: int) -> tuple[Path, Path]:
    stem = f"{config.name}_{config.config_hash()}_seed{seed}"
    base = Path(out_dir)
    return base / f"{stem}.csv", base / f"{stem}.ckpt"


def run_experiment(config: ExperimentConfig, seed: int, out_dir: str | os.PathLike | None = None) -> RunRecord:
    """Train one seed to ``total_steps``; writes the CSV and final checkpoint when ``out_dir`` is set."""
    run = Run(config, seed)
    record = run.run_until()
    if out_dir is not None:
        csv_path, ckpt_path = run_paths(out_dir, config, seed)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(record.csv_text(), encoding="utf-8")
        run.save(ckpt_path)
        record.checkpoint_path = str(ckpt_path)
    return record
