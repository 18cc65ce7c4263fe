"""Distribution extractor: candidate set -> per-group latent vector.

Neural-process style: each candidate embedding is passed through a shared
two-layer MLP, the per-item codes are mean-pooled (order-invariant by
construction), and a reparameterised Gaussian head produces the latent.
At training time the latent is mean + noise * std with standard-normal
noise; at evaluation the noise is zero, so the latent is the mean.

The `avg` mode is the ablation: the latent is just the mean candidate
embedding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numerics as nx

EXTRACTOR_MODES = ("np", "avg")


@dataclass
class LatentState:
    z: nx.Tensor                 # (B, d) graph node
    mean: np.ndarray             # (B, d) detached diagnostics
    std: np.ndarray              # (B, d)


class DistributionExtractor:
    def __init__(self, dim: int, mode: str, rng: nx.Rng):
        if mode not in EXTRACTOR_MODES:
            raise ValueError(f"unknown extractor mode {mode!r}")
        self.dim = dim
        self.mode = mode
        self._params: dict[str, nx.Tensor] = {}
        if mode == "np":

            def glorot(tag, shape):
                std = (2.0 / (shape[0] + shape[-1])) ** 0.5
                return nx.Tensor(rng.substream(tag).gaussian(shape, std=std),
                                 requires_grad=True)

            self._params = {
                "np.l1.w": glorot("l1w", (dim, dim)),
                "np.l1.b": nx.Tensor(np.zeros(dim), requires_grad=True),
                "np.l2.w": glorot("l2w", (dim, dim)),
                "np.l2.b": nx.Tensor(np.zeros(dim), requires_grad=True),
                "np.w_s": glorot("ws", (dim, dim)),
                "np.w_mean": glorot("wmean", (dim, dim)),
                "np.w_logstd": glorot("wlogstd", (dim, dim)),
            }

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def extract(self, cand_embs: nx.Tensor, noise: np.ndarray | None) -> LatentState:
        """cand_embs: (B, m, d); noise: (B, d) standard normal or None for eval."""
        if self.mode == "avg":
            z = nx.invariant_mean(cand_embs, axis=1)
            return LatentState(z=z, mean=z.data.copy(),
                               std=np.ones_like(z.data))
        p = self._params
        h = nx.relu(nx.matmul(cand_embs, p["np.l1.w"]) + p["np.l1.b"])
        codes = nx.matmul(h, p["np.l2.w"]) + p["np.l2.b"]        # (B, m, d)
        pooled = nx.invariant_mean(codes, axis=1)                # (B, d)
        s = nx.relu(nx.matmul(pooled, p["np.w_s"]))
        mean = nx.matmul(s, p["np.w_mean"])
        logstd = nx.matmul(s, p["np.w_logstd"])
        std = nx.exp(logstd)
        if noise is None:
            z = mean
        else:
            z = mean + std * nx.constant(noise, like=std)
        return LatentState(z=z, mean=mean.data.copy(), std=std.data.copy())
