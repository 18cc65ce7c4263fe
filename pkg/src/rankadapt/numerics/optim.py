"""Adam with bias correction and optional global-norm gradient clipping."""
from __future__ import annotations

import numpy as np

from .tensor import NumericsError, Tensor


class Adam:
    """Keeps first/second moment estimates per parameter.

    Parameters are identified by position in the list handed to the
    constructor; `step` takes a {tensor: gradient} map (as produced by
    `backward`) and updates parameter data in place. Parameters absent
    from the map are left untouched.
    """

    def __init__(self, params: list[Tensor], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 clip_norm: float | None = None):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads: dict[Tensor, np.ndarray]) -> None:
        self.t += 1
        scale = 1.0
        if self.clip_norm is not None:
            total = 0.0
            for p in self.params:
                g = grads.get(p)
                if g is not None:
                    total += float((g.astype(np.float64) ** 2).sum())
            norm = total ** 0.5
            if norm > self.clip_norm:
                scale = self.clip_norm / norm
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = grads.get(p)
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise NumericsError(
                    f"gradient shape {g.shape} does not match parameter {p.data.shape}"
                )
            g = g * scale if scale != 1.0 else g
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype)


def adam_step(state: Adam, grads: dict[Tensor, np.ndarray]) -> None:
    """Functional alias kept for symmetry with the rest of the numerics API."""
    state.step(grads)
