"""Grid world: DQN with and without the cosine-bound regularizer on a few seeds.

Run: python demos/gridworld_compare.py  (about 20 s per seed and agent)
"""
from pathlib import Path

from beer.harness import aggregate_seeds, load_config, run_seeds

configs = Path(__file__).parent.parent / "configs"
seeds = [0, 1, 2]

for name in ("gridworld_beer", "gridworld_dqn"):
    summary = aggregate_seeds(run_seeds(load_config(configs / f"{name}.json"), seeds))
    print(name)
    for i, step in enumerate(summary.steps):
        rank = summary.mean["representation_rank"][i]
        err = summary.mean["approx_error"][i]
        goal = summary.mean["steps_to_goal"][i]
        print(f"  step {int(step):6d}  steps to goal {goal:6.2f}  rank {rank:6.2f}  approx error {err:.3e}")
    print(f"  peak return {summary.peak_mean:.2f} +/- {summary.peak_std:.2f}")
