"""How the cosine bound behaves on a few hand-picked successor pairs.

Run: python demos/bound_geometry.py
"""
import numpy as np

from beer.agents import beer_bound, beer_regularizer, bound_gap
from beer.autodiff import Tensor, no_grad

gamma = 0.99
w = np.array([1.0, 0.0])

# identical unit features and zero reward: the bound sits just above 1
phi = np.array([1.0, 0.0])
print("same vector, r=0   bound", beer_bound(phi, phi, 0.0, w, gamma))
print("                   gap  ", bound_gap(phi, phi, 0.0, w, gamma))

# growing the reward shrinks the bound until orthogonal features fall outside it
for r in (0.0, 0.5, 1.0, 1.5):
    b = beer_bound([1.0, 0.0], [0.0, 1.0], r, w, gamma)
    print(f"orthogonal, r={r:<4} bound {b:+.4f}  cosine 0.0  inside={0.0 <= b}")

# rewards that satisfy the Bellman identity never violate the bound
rng = np.random.default_rng(0)
P, N, W = (rng.normal(size=(5000, 8)) for _ in range(3))
r = np.einsum("ij,ij->i", P, W) - gamma * np.einsum("ij,ij->i", N, W)
cos = np.einsum("ij,ij->i", P, N) / (np.linalg.norm(P, axis=1) * np.linalg.norm(N, axis=1))
print("Bellman-consistent rows, max(cos - bound):", np.max(cos - beer_bound(P, N, r, W, gamma)))

# the regularizer only charges rows that exceed the bound
with no_grad():
    inside = beer_regularizer(Tensor(P[:64]), N[:64], r[:64], W[:64], gamma).item()
    outside = beer_regularizer(Tensor(P[:64]), P[:64], 10 * r[:64], W[:64], gamma).item()
print(f"regularizer on consistent rows {inside}, on self-successor rows with big rewards {outside:.4f}")
