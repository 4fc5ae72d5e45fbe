"""Parameter containers: a tiny module system over :class:`Tensor` leaves."""
from __future__ import annotations

import contextlib
import copy
from typing import Iterator, Sequence

import numpy as np

from beer.autodiff import functional as F
from beer.autodiff.tensor import Tensor, relu, tanh
from beer.errors import ShapeError


class Module:
    """Holds named parameter leaves and child modules, in insertion order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.is_leaf:
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix + name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            raise KeyError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"{name}: expected shape {p.shape}, got {value.shape}")
            p.data = value.copy()

    def clone(self, requires_grad: bool | None = None) -> "Module":
        """Deep copy with fresh parameter arrays."""
        twin = copy.deepcopy(self)
        for p in twin.parameters():
            p.grad = None
            if requires_grad is not None:
                p.requires_grad = requires_grad
        return twin

    @contextlib.contextmanager
    def frozen(self) -> Iterator["Module"]:
        """Treat every parameter as a constant inside the block."""
        params = self.parameters()
        flags = [p.requires_grad for p in params]
        for p in params:
            p.requires_grad = False
        try:
            yield self
        finally:
            for p, f in zip(params, flags):
                p.requires_grad = f


class Linear(Module):
    """Affine layer initialised uniformly in +-1/sqrt(fan_in)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        bound = 1.0 / np.sqrt(n_in)
        self.weight = Tensor(rng.uniform(-bound, bound, size=(n_in, n_out)), requires_grad=True)
        self.bias = (
            Tensor(rng.uniform(-bound, bound, size=n_out), requires_grad=True) if bias else None
        )

    def __call__(self, x) -> Tensor:
        return F.linear(x, self.weight, self.bias)

    def forward_array(self, x: np.ndarray) -> np.ndarray:
        """Same arithmetic as ``__call__`` on plain arrays, with no tape."""
        out = x @ self.weight.data
        if self.bias is not None:
            out += self.bias.data
        return out


class MLP(Module):
    """Stack of linear layers with ReLU between them.

    ``output_activation`` is applied after the last layer: ``"relu"`` makes
    the whole stack a representation trunk, ``"tanh"`` suits bounded actors.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        output_activation: str | None = None,
    ):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.layers = [Linear(a, b, rng) for a, b in zip(self.sizes[:-1], self.sizes[1:])]
        self.output_activation = output_activation

    def __call__(self, x) -> Tensor:
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < last:
                h = relu(h)
        if self.output_activation == "relu":
            h = relu(h)
        elif self.output_activation == "tanh":
            h = tanh(h)
        return h

    def forward_array(self, x: np.ndarray) -> np.ndarray:
        """Value-only forward pass on arrays; matches ``__call__`` bit for bit."""
        h = np.asarray(x, dtype=np.float64)
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer.forward_array(h)
            if i < last or self.output_activation == "relu":
                h = np.maximum(h, 0.0)
        if self.output_activation == "tanh":
            h = np.tanh(h)
        return h
