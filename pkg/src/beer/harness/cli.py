"""Command-line entry point: train, sweep, aggregate, demo-cosine-rank.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from beer.errors import ConfigError
from beer.harness.aggregate import aggregate_dir, beta_sweep, sweep_csv_text
from beer.harness.config import load_config, parse_value, schema_keys
from beer.harness.runner import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# short spellings accepted next to the schema-key flags
ALIASES = {"out": "out_dir"}


def _add_overrides(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("config overrides (one flag per schema key)")
    for key in schema_keys():
        if key == "seeds":
            continue
        flags = [f"--{key}"] + [f"--{a}" for a, k in ALIASES.items() if k == key]
        group.add_argument(*flags, dest=f"set_{key}", metavar="VALUE", default=None)


def _overrides(args: argparse.Namespace) -> dict:
    return {
        key: parse_value(key, getattr(args, f"set_{key}"))
        for key in schema_keys()
        if getattr(args, f"set_{key}", None) is not None
    }


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one seed and write its CSV and checkpoint")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int, required=True)
    _add_overrides(train)

    sweep = sub.add_parser("sweep", help="run every (beta, seed) pair and summarise per beta")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--betas", required=True, help="comma-separated, e.g. 0,1e-3,5e-3")
    sweep.add_argument("--seeds", required=True, help="comma-separated, e.g. 0,1,2")
    sweep.add_argument("--workers", type=int, default=1)
    _add_overrides(sweep)

    agg = sub.add_parser("aggregate", help="summarise the run CSVs in a directory by config hash")
    agg.add_argument("dir")

    demo = sub.add_parser("demo-cosine-rank", help="rank recovery by minimising pairwise cosine")
    demo.add_argument("--dim", type=int, default=256)
    demo.add_argument("--batch", type=int, default=64)
    demo.add_argument("--lr", type=float, default=5e-3)
    demo.add_argument("--steps", type=int, default=2000)
    demo.add_argument("--epsilon", type=float, default=0.05)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--objective", choices=("squared", "signed"), default="squared")
    return parser


def cmd_train(args) -> None:
    config = load_config(args.config, _overrides(args))
    record = run_experiment(config, args.seed, config.out_dir)
    print(f"wrote {len(record.snapshots)} rows; checkpoint {record.checkpoint_path}")


def cmd_sweep(args) -> None:
    config = load_config(args.config, _overrides(args))
    betas = _float_list(args.betas)
    seeds = _int_list(args.seeds)
    if not betas or not seeds:
        raise ConfigError("sweep needs at least one beta and one seed")
    if any(not b >= 0 for b in betas):
        raise ConfigError("betas must be non-negative")
    rows = beta_sweep(config, betas, seeds, config.out_dir, args.workers)
    out = Path(config.out_dir) / f"sweep_{config.name}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(sweep_csv_text(rows), encoding="utf-8")
    sys.stdout.write(sweep_csv_text(rows))


def cmd_aggregate(args) -> None:
    for summary in aggregate_dir(args.dir):
        path = Path(args.dir) / f"summary_{summary.config_hash}.csv"
        path.write_text(summary.csv_text(), encoding="utf-8")
        print(f"{summary.config_hash}: {len(summary.seeds)} seeds, peak score "
              f"{summary.peak_mean:.6g} +/- {summary.peak_std:.6g} -> {path}")


def cmd_demo(args) -> None:
    import numpy as np

    from beer.metrics import cosine_rank_demo

    trace = cosine_rank_demo(dim=args.dim, batch=args.batch, lr=args.lr, steps=args.steps,
                             epsilon=args.epsilon, rng=np.random.default_rng(args.seed),
                             objective=args.objective)
    print("step,mean_cosine,representation_rank")
    for step, cos, rank in trace:
        print(f"{step},{cos:.17g},{rank}")


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "aggregate": cmd_aggregate,
            "demo-cosine-rank": cmd_demo}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # any other failure is a runtime error for the caller
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if os.environ.get("BEER_TRACEBACK"):
            raise
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
