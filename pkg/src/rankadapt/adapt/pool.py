"""Parameter modulation: per-group patches for the scoring head.

The default memory-network scheme keeps, for each patched parameter, a pool
of L base tensors plus L reading heads. The latent is dotted with the heads,
softmaxed into mixing weights, and the pool is blended into one patch per
group. Weight patches multiply the shared parameter elementwise; bias
patches add. Pools are initialised at the multiplicative/additive identity
(all-ones / zeros) so an untrained adaptor scores exactly like the base.

Modes:
  mem_net     pools + reading heads (default)
  free_para   patches generated directly from the latent by two-layer nets
              (row-major reshape to the parameter shape)
  no_global   as mem_net, but the patch replaces the shared parameter
  add_bias_1  a learned projection of the latent is added to the layer-1
              pre-activation only
  add_bias_2  the same for both layers
  none        identity (base weights used untouched)
"""
from __future__ import annotations

import numpy as np

from .. import numerics as nx
from ..model.base import Predictor

PARAM_MODES = ("mem_net", "free_para", "no_global", "add_bias_1", "add_bias_2", "none")
POOL_TARGETS = ("w1", "b1", "w2", "b2")


def _target_shapes(dim: int) -> dict[str, tuple[int, ...]]:
    return {"w1": (2 * dim, dim), "b1": (dim,), "w2": (dim, 1), "b2": (1,)}


class PredictorModulator:
    def __init__(self, dim: int, mode: str, slots: int, rng: nx.Rng):
        if mode not in PARAM_MODES:
            raise ValueError(f"unknown parameter modulation mode {mode!r}")
        self.dim = dim
        self.mode = mode
        self.slots = slots
        self._params: dict[str, nx.Tensor] = {}
        shapes = _target_shapes(dim)
        if mode in ("mem_net", "no_global"):
            for target, shape in shapes.items():
                size = int(np.prod(shape))
                init = np.ones((slots, size)) if target.startswith("w") else np.zeros((slots, size))
                self._params[f"pool.{target}.slots"] = nx.Tensor(init, requires_grad=True)
                self._params[f"pool.{target}.heads"] = nx.Tensor(
                    rng.substream("heads", target).gaussian((slots, dim), std=dim ** -0.5),
                    requires_grad=True)
        elif mode == "free_para":
            for target, shape in shapes.items():
                size = int(np.prod(shape))
                std = (2.0 / (dim + dim)) ** 0.5
                self._params[f"gen.{target}.l1.w"] = nx.Tensor(
                    rng.substream("gen", target).gaussian((dim, dim), std=std), requires_grad=True)
                self._params[f"gen.{target}.l1.b"] = nx.Tensor(np.zeros(dim), requires_grad=True)
                self._params[f"gen.{target}.l2.w"] = nx.Tensor(np.zeros((dim, size)), requires_grad=True)
                bias0 = np.ones(size) if target.startswith("w") else np.zeros(size)
                self._params[f"gen.{target}.l2.b"] = nx.Tensor(bias0, requires_grad=True)
        elif mode in ("add_bias_1", "add_bias_2"):
            self._params["bias_proj.1"] = nx.Tensor(np.zeros((dim, dim)), requires_grad=True)
            if mode == "add_bias_2":
                self._params["bias_proj.2"] = nx.Tensor(np.zeros((dim, 1)), requires_grad=True)

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def compose_patch(self, target: str, z: nx.Tensor) -> tuple[nx.Tensor, nx.Tensor]:
        """Blend the pool for `target` by softmax(z . heads): (patch, weights)."""
        slots_t = self._params[f"pool.{target}.slots"]
        heads = self._params[f"pool.{target}.heads"]
        scores = nx.matmul(z, nx.transpose(heads, (1, 0)))       # (B, L)
        weights = nx.softmax(scores)
        patch = nx.matmul(weights, slots_t)                      # (B, size)
        return patch, weights

    def free_patch(self, target: str, z: nx.Tensor) -> nx.Tensor:
        p = self._params
        h = nx.relu(nx.matmul(z, p[f"gen.{target}.l1.w"]) + p[f"gen.{target}.l1.b"])
        return nx.matmul(h, p[f"gen.{target}.l2.w"]) + p[f"gen.{target}.l2.b"]

    def effective_weights(self, predictor: Predictor, z: nx.Tensor):
        """Per-group head weights and/or extra biases for Predictor.score.

        Returns (weights, extra_bias, mixing) where weights is None when the
        shared parameters apply, extra_bias is a (layer1, layer2) pair, and
        mixing maps pool target -> (B, L) softmax weights (mem_net/no_global).
        """
        if self.mode == "none":
            return None, (None, None), {}
        B = z.shape[0]
        d = self.dim
        base = predictor.parameters()
        if self.mode in ("add_bias_1", "add_bias_2"):
            bias1 = nx.reshape(nx.matmul(z, self._params["bias_proj.1"]), (B, 1, d))
            bias2 = None
            if self.mode == "add_bias_2":
                bias2 = nx.reshape(nx.matmul(z, self._params["bias_proj.2"]), (B, 1, 1))
            return None, (bias1, bias2), {}
        shapes = _target_shapes(d)
        patches: dict[str, nx.Tensor] = {}
        mixing: dict[str, nx.Tensor] = {}
        for target in POOL_TARGETS:
            if self.mode == "free_para":
                patches[target] = self.free_patch(target, z)
            else:
                patches[target], mixing[target] = self.compose_patch(target, z)
        w1p = nx.reshape(patches["w1"], (B,) + shapes["w1"])
        w2p = nx.reshape(patches["w2"], (B,) + shapes["w2"])
        b1p = nx.reshape(patches["b1"], (B, 1, d))
        b2p = nx.reshape(patches["b2"], (B, 1, 1))
        if self.mode == "no_global":
            weights = (w1p, b1p, w2p, b2p)
        else:
            w1 = nx.reshape(base["pred.w1"], (1,) + shapes["w1"]) * w1p
            w2 = nx.reshape(base["pred.w2"], (1,) + shapes["w2"]) * w2p
            b1 = nx.reshape(base["pred.b1"], (1, 1, d)) + b1p
            b2 = nx.reshape(base["pred.b2"], (1, 1, 1)) + b2p
            weights = (w1, b1, w2, b2)
        return weights, (None, None), mixing
