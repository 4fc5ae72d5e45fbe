"""Pulling a near-collinear matrix apart by minimising sampled pairwise cosine.

Run: python demos/cosine_rank.py
"""
import numpy as np

from beer.metrics import cosine_rank_demo

for objective in ("squared", "signed"):
    trace = cosine_rank_demo(dim=256, batch=64, lr=5e-3, steps=2000, epsilon=0.05,
                             log_every=500, rng=np.random.default_rng(0), objective=objective)
    print(f"objective={objective}")
    for step, cos, rank in trace:
        print(f"  step {step:5d}  mean cosine {cos:+.4f}  rank {rank}")
