"""Reverse-mode automatic differentiation over dense float64 tensors."""
from beer.autodiff import functional
from beer.autodiff.functional import (
    concat,
    cosine,
    dot,
    gather,
    l2_norm,
    linear,
    mean,
    mse,
    row_cosine,
    row_dot,
    row_norm,
    take_rows,
)
from beer.autodiff.functional import sum as tsum
from beer.autodiff.nn import MLP, Linear, Module
from beer.autodiff.optim import Adam, AdamState, adam_step
from beer.autodiff.tensor import (
    NORM_FLOOR,
    Tape,
    Tensor,
    matmul,
    no_grad,
    relu,
    reshape,
    set_debug,
    stop_gradient,
    tanh,
    transpose,
)

__all__ = [
    "Adam",
    "AdamState",
    "Linear",
    "MLP",
    "Module",
    "NORM_FLOOR",
    "Tape",
    "Tensor",
    "adam_step",
    "concat",
    "cosine",
    "dot",
    "functional",
    "gather",
    "l2_norm",
    "linear",
    "matmul",
    "mean",
    "mse",
    "no_grad",
    "relu",
    "reshape",
    "row_cosine",
    "row_dot",
    "row_norm",
    "set_debug",
    "stop_gradient",
    "take_rows",
    "tanh",
    "transpose",
    "tsum",
]
