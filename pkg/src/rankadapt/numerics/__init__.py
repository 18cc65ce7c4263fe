"""Minimal dense-tensor engine: tape autodiff, Adam, seeded RNG substreams."""
from .gradcheck import grad_check
from .optim import Adam, adam_step
from .rng import ALGORITHM, Rng, normalized
from .tensor import (
    NumericsError,
    Tensor,
    add,
    backward,
    broadcast_to,
    clip,
    concat,
    constant,
    default_dtype,
    dropout,
    exp,
    gather_rows,
    invariant_mean,
    log,
    matmul,
    mean,
    mul,
    neg,
    precision,
    relu,
    reshape,
    set_default_dtype,
    sigmoid,
    softmax,
    sub,
    tanh,
    transpose,
    tsum,
    where_mask,
)

__all__ = [
    "ALGORITHM", "Adam", "NumericsError", "Rng", "Tensor",
    "adam_step", "add", "backward", "broadcast_to", "clip", "concat",
    "constant", "default_dtype", "dropout", "exp", "gather_rows",
    "grad_check", "invariant_mean", "log", "matmul", "mean", "mul",
    "neg", "normalized",
    "precision", "relu", "reshape", "set_default_dtype", "sigmoid",
    "softmax", "sub", "tanh", "transpose", "tsum", "where_mask",
]
