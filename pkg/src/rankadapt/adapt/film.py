"""Input modulation: per-group scale/shift of history item embeddings.

Each coefficient comes from a small two-layer net over the latent:
f(z) = W2 relu(W1 z + b1) + b2. The final layers are zero-initialised with
output bias 1 (scale) / 0 (shift), so a fresh modulator is the identity.

Modes:
  film_scalar    one scale and one shift per group (the literal formula)
  film_vector    per-dimension scale and shift
  film_per_item  nets see concat(latent, item embedding); coefficients
                 differ per history position
  add_bias       scale pinned to 1, shift only
  none           identity (the hook is skipped entirely)

Only the history is modulated; the scored candidate embeddings are not.
"""
from __future__ import annotations

import numpy as np

from .. import numerics as nx

INPUT_MODES = ("film_scalar", "film_vector", "film_per_item", "add_bias", "none")


class InputModulator:
    def __init__(self, dim: int, mode: str, rng: nx.Rng):
        if mode not in INPUT_MODES:
            raise ValueError(f"unknown input modulation mode {mode!r}")
        self.dim = dim
        self.mode = mode
        self._params: dict[str, nx.Tensor] = {}
        if mode == "none":
            return
        in_dim = 2 * dim if mode == "film_per_item" else dim
        out_dim = 1 if mode == "film_scalar" else dim
        heads = ("shift",) if mode == "add_bias" else ("scale", "shift")
        for head in heads:
            std = (2.0 / (in_dim + dim)) ** 0.5
            self._params[f"film.{head}.l1.w"] = nx.Tensor(
                rng.substream(head, "l1").gaussian((in_dim, dim), std=std), requires_grad=True)
            self._params[f"film.{head}.l1.b"] = nx.Tensor(np.zeros(dim), requires_grad=True)
            self._params[f"film.{head}.l2.w"] = nx.Tensor(np.zeros((dim, out_dim)), requires_grad=True)
            bias0 = np.ones(out_dim) if head == "scale" else np.zeros(out_dim)
            self._params[f"film.{head}.l2.b"] = nx.Tensor(bias0, requires_grad=True)

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def _net(self, head: str, inp: nx.Tensor) -> nx.Tensor:
        p = self._params
        h = nx.relu(nx.matmul(inp, p[f"film.{head}.l1.w"]) + p[f"film.{head}.l1.b"])
        return nx.matmul(h, p[f"film.{head}.l2.w"]) + p[f"film.{head}.l2.b"]

    def coefficients(self, z: nx.Tensor) -> tuple[nx.Tensor, nx.Tensor]:
        """Per-group (scale, shift); shapes (B, 1) in scalar mode else (B, d)."""
        if self.mode == "film_per_item":
            raise ValueError("film_per_item coefficients depend on the item; "
                             "use modulate_steps")
        if self.mode == "none":
            raise ValueError("modulator is disabled")
        shift = self._net("shift", z)
        if self.mode == "add_bias":
            scale = nx.constant(np.ones_like(shift.data), like=shift)
        else:
            scale = self._net("scale", z)
        return scale, shift

    def modulate_steps(self, steps: list[nx.Tensor], z: nx.Tensor) -> list[nx.Tensor]:
        if self.mode == "none":
            return steps
        if self.mode == "film_per_item":
            out = []
            for q in steps:
                inp = nx.concat([z, q], axis=-1)
                scale = self._net("scale", inp)
                shift = self._net("shift", inp)
                out.append(scale * q + shift)
            return out
        scale, shift = self.coefficients(z)
        return [scale * q + shift for q in steps]
