"""Adam with bias correction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from beer.autodiff.tensor import Tensor
from beer.errors import ShapeError


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Sequence[Tensor], **hyper) -> "AdamState":
        return cls(
            m=[np.zeros(p.shape) for p in params],
            v=[np.zeros(p.shape) for p in params],
            **hyper,
        )


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None], state: AdamState) -> None:
    """One in-place Adam update; a ``None`` gradient counts as zero."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state differ in length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros(p.shape)
        if g.shape != p.shape or m.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps_adam)


@dataclass
class Adam:
    """Adam bound to a fixed parameter list.

    The moment buffers live in two flat arrays so one step costs a handful
    of vectorised operations; ``state.m`` and ``state.v`` are per-parameter
    views into them, so :func:`adam_step` and this class stay interchangeable.
    """

    params: list[Tensor]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.params = list(self.params)
        sizes = [p.size for p in self.params]
        ends = np.cumsum(sizes)
        self._slices = [slice(e - n, e) for n, e in zip(sizes, ends)]
        total = int(ends[-1]) if sizes else 0
        self._m = np.zeros(total)
        self._v = np.zeros(total)
        self.state = AdamState(
            m=[self._m[sl].reshape(p.shape) for sl, p in zip(self._slices, self.params)],
            v=[self._v[sl].reshape(p.shape) for sl, p in zip(self._slices, self.params)],
            lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps_adam=self.eps_adam,
        )

    def step(self, grads: Mapping[Tensor, np.ndarray]) -> None:
        """Update every parameter from ``grads`` (missing entries count as zero)."""
        flat = []
        for p in self.params:
            g = grads.get(p)
            if g is None:
                flat.append(np.zeros(p.size))
            elif g.shape != p.shape:
                raise ShapeError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
            else:
                flat.append(g.reshape(-1))
        g = np.concatenate(flat) if flat else np.zeros(0)
        st = self.state
        st.t += 1
        b1, b2 = st.beta1, st.beta2
        c1 = 1.0 - b1**st.t
        c2 = 1.0 - b2**st.t
        m, v = self._m, self._v
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        delta = st.lr * (m / c1) / (np.sqrt(v / c2) + st.eps_adam)
        for p, sl in zip(self.params, self._slices):
            p.data -= delta[sl].reshape(p.shape)

    def state_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for i, (m, v) in enumerate(zip(self.state.m, self.state.v)):
            out[f"{prefix}.m.{i}"] = m.copy()
            out[f"{prefix}.v.{i}"] = v.copy()
        return out

    def load_state_arrays(self, prefix: str, arrays: Mapping[str, np.ndarray], t: int) -> None:
        for i, p in enumerate(self.params):
            m = np.asarray(arrays[f"{prefix}.m.{i}"], dtype=np.float64)
            v = np.asarray(arrays[f"{prefix}.v.{i}"], dtype=np.float64)
            if m.shape != p.shape or v.shape != p.shape:
                raise ShapeError(f"optimizer slot {i}: shape mismatch")
            self.state.m[i][...] = m
            self.state.v[i][...] = v
        self.state.t = int(t)
