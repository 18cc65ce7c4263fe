"""Central-difference gradient verification.

Used by the test suite as the ground-truth oracle for every differentiable
component: rebuild the loss twice to prove the function is deterministic,
take one analytic backward sweep, then perturb every parameter element by
±h and compare.
"""
from __future__ import annotations

import numpy as np

from .tensor import NumericsError, Tensor, backward


def grad_check(fn, params: list[Tensor], h: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    `fn` must build and return a scalar loss Tensor from the current values
    of `params` (drawing any randomness from fixed substreams so repeated
    calls agree). Relative error uses max(|a|, |n|, 1e-12) as denominator.
    """
    first = fn()
    second = fn()
    if first.size != 1:
        raise NumericsError("grad_check needs a scalar loss")
    if not np.array_equal(first.data, second.data):
        raise NumericsError("function is not deterministic under fixed seed")
    analytic = backward(first)
    worst = 0.0
    for p in params:
        a = analytic.get(p)
        if a is None:
            a = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        a_flat = np.asarray(a).reshape(-1)
        for j in range(flat.size):
            saved = flat[j]
            flat[j] = saved + h
            f_plus = fn().item()
            flat[j] = saved - h
            f_minus = fn().item()
            flat[j] = saved
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(a_flat[j]), abs(numeric), 1e-12)
            err = abs(a_flat[j] - numeric) / denom
            if err > worst:
                worst = err
    return float(worst)
