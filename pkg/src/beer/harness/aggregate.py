"""Cross-seed summaries and the beta sweep."""
from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from beer.harness.config import ExperimentConfig
from beer.harness.runner import METRIC_COLUMNS, RunRecord, format_float, read_csv, run_experiment


@dataclass(frozen=True)
class Summary:
    """Per-step mean and population std of every metric, plus peak evaluation scores."""

    config_hash: str
    seeds: tuple[int, ...]
    steps: tuple[int, ...]
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    peak_scores: tuple[float, ...]
    peak_mean: float
    peak_std: float

    def final(self, metric: str) -> float:
        return float(self.mean[metric][-1])

    def csv_text(self) -> str:
        out = io.StringIO()
        out.write(f"# config_hash={self.config_hash}\n")
        out.write(f"# seeds={' '.join(str(s) for s in self.seeds)}\n# std=population\n")
        out.write(f"# peak_score_mean={format_float(self.peak_mean)}\n")
        out.write(f"# peak_score_std={format_float(self.peak_std)}\n")
        cols = ["step"] + [f"{m}_{k}" for m in METRIC_COLUMNS for k in ("mean", "std")]
        out.write(",".join(cols) + "\n")
        for i, step in enumerate(self.steps):
            cells = [str(step)]
            for m in METRIC_COLUMNS:
                cells += [format_float(self.mean[m][i]), format_float(self.std[m][i])]
            out.write(",".join(cells) + "\n")
        return out.getvalue()


def aggregate_seeds(records: Sequence[RunRecord]) -> Summary:
    """Mean and population std across seeds at each logged step.

    The peak score of a seed is the best ``eval_return_mean`` over its
    snapshots; the summary reports those peaks and their mean and std.
    Records are sorted by seed first, so input order does not matter.
    """
    if not records:
        raise ValueError("aggregate_seeds needs at least one record")
    hashes = {r.config_hash for r in records}
    if len(hashes) > 1:
        raise ValueError(f"records mix config hashes: {sorted(hashes)}")
    records = sorted(records, key=lambda r: r.seed)
    steps = tuple(s.step for s in records[0].snapshots)
    for r in records[1:]:
        if tuple(s.step for s in r.snapshots) != steps:
            raise ValueError(f"seed {r.seed} logged different steps than seed {records[0].seed}")
    mean, std = {}, {}
    for m in METRIC_COLUMNS:
        table = np.array([[getattr(s, m) for s in r.snapshots] for r in records], dtype=np.float64)
        mean[m] = table.mean(axis=0)
        std[m] = table.std(axis=0)
    peaks = np.array([max(s.eval_return_mean for s in r.snapshots) for r in records])
    return Summary(records[0].config_hash, tuple(r.seed for r in records), steps, mean, std,
                   tuple(float(p) for p in peaks), float(peaks.mean()), float(peaks.std()))


# files written by aggregate and sweep, not runs
DERIVED_PREFIXES = ("summary_", "sweep_")


def aggregate_dir(path: str | os.PathLike) -> list[Summary]:
    """Group every run CSV under ``path`` by config hash and summarise each group."""
    groups: dict[str, list[RunRecord]] = {}
    for csv_path in sorted(Path(path).glob("*.csv")):
        if csv_path.name.startswith(DERIVED_PREFIXES):
            continue
        record = read_csv(csv_path)
        groups.setdefault(record.config_hash, []).append(record)
    if not groups:
        raise ValueError(f"no run CSVs found under {path}")
    return [aggregate_seeds(groups[h]) for h in sorted(groups)]


def _run_job(job):
    config, seed, out_dir = job
    return run_experiment(config, seed, out_dir)


def run_seeds(config: ExperimentConfig, seeds: Sequence[int], out_dir=None, workers: int = 1) -> list[RunRecord]:
    """Independent runs, optionally spread over worker processes."""
    jobs = [(config, int(s), out_dir) for s in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


@dataclass(frozen=True)
class SweepRow:
    beta: float
    summary: Summary


def beta_sweep(base: ExperimentConfig, betas: Sequence[float], seeds: Sequence[int],
               out_dir=None, workers: int = 1) -> list[SweepRow]:
    """One aggregate per beta over the given seeds, in the order the betas were given."""
    for b in betas:
        if not b >= 0:
            raise ValueError(f"beta must be non-negative, got {b}")
    rows = []
    for b in betas:
        config = base.replace(beta=float(b))
        rows.append(SweepRow(float(b), aggregate_seeds(run_seeds(config, seeds, out_dir, workers))))
    return rows


def sweep_csv_text(rows: Sequence[SweepRow]) -> str:
    """One line per beta: final-step means and stds of every metric plus the peak score."""
    out = io.StringIO()
    out.write("# std=population\n")
    cols = ["beta", "config_hash", "peak_score_mean", "peak_score_std"]
    cols += [f"final_{m}_{k}" for m in METRIC_COLUMNS for k in ("mean", "std")]
    out.write(",".join(cols) + "\n")
    for row in rows:
        s = row.summary
        cells = [format_float(row.beta), s.config_hash, format_float(s.peak_mean), format_float(s.peak_std)]
        for m in METRIC_COLUMNS:
            cells += [format_float(s.mean[m][-1]), format_float(s.std[m][-1])]
        out.write(",".join(cells) + "\n")
    return out.getvalue()
