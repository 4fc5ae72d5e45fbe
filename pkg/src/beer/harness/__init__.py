"""Configuration, seeding, the run loop, aggregation, checkpoints and the CLI."""
from beer.harness.aggregate import Summary, SweepRow, aggregate_dir, aggregate_seeds, beta_sweep, run_seeds
from beer.harness.checkpoint import load_checkpoint, save_checkpoint
from beer.harness.config import ExperimentConfig, from_dict, load_config
from beer.harness.runner import CSV_COLUMNS, Run, RunRecord, format_csv, read_csv, run_experiment
from beer.harness.seeding import ROLES, role_rng, streams

__all__ = [
    "CSV_COLUMNS", "ExperimentConfig", "ROLES", "Run", "RunRecord", "Summary", "SweepRow",
    "aggregate_dir", "aggregate_seeds", "beta_sweep", "format_csv", "from_dict", "load_checkpoint",
    "load_config", "read_csv", "role_rng", "run_experiment", "run_seeds", "save_checkpoint", "streams",
]
