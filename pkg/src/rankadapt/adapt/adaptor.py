"""The adaptor: turns the frozen global ranker into a per-group local one.

For each candidate group: extract a latent from the candidate embeddings,
modulate the history inputs, patch the scoring head, and score through the
base model's own forward path. With every component set to "none" the
adaptor delegates to the unmodified base path, so disabling it reproduces
base scores bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numerics as nx
from ..model.base import BaseRanker, GroupBatch
from .extractor import EXTRACTOR_MODES, DistributionExtractor
from .film import INPUT_MODES, InputModulator
from .pool import PARAM_MODES, PredictorModulator


@dataclass(frozen=True)
class AdaptorConfig:
    dim: int = 64
    extractor: str = "np"
    input_mod: str = "film_scalar"
    param_mod: str = "mem_net"
    slots: int = 10

    def validate(self) -> None:
        if self.extractor not in EXTRACTOR_MODES:
            raise ValueError(f"unknown extractor {self.extractor!r}")
        if self.input_mod not in INPUT_MODES:
            raise ValueError(f"unknown input_mod {self.input_mod!r}")
        if self.param_mod not in PARAM_MODES:
            raise ValueError(f"unknown param_mod {self.param_mod!r}")
        if self.slots < 1:
            raise ValueError("slots must be >= 1")


@dataclass
class Diagnostics:
    """Per-group adaptation internals for qualitative export."""
    latent: np.ndarray                      # (B, d)
    mixing: dict[str, np.ndarray] = field(default_factory=dict)  # target -> (B, L)


class RankAdaptor:
    def __init__(self, cfg: AdaptorConfig, rng: nx.Rng):
        cfg.validate()
        self.cfg = cfg
        init = rng.substream("init-adaptor")
        self.extractor = DistributionExtractor(cfg.dim, cfg.extractor, init.substream("np"))
        self.input_mod = InputModulator(cfg.dim, cfg.input_mod, init.substream("film"))
        self.param_mod = PredictorModulator(cfg.dim, cfg.param_mod, cfg.slots,
                                            init.substream("pool"))
        self._params: dict[str, nx.Tensor] = {}
        self._params.update(self.extractor.parameters())
        self._params.update(self.input_mod.parameters())
        self._params.update(self.param_mod.parameters())

    @property
    def disabled(self) -> bool:
        return self.cfg.input_mod == "none" and self.cfg.param_mod == "none"

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def set_trainable(self, flag: bool) -> None:
        for t in self._params.values():
            t.requires_grad = flag

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for name, tensor in self._params.items():
            if name not in arrays:
                raise KeyError(f"checkpoint is missing adaptor parameter {name!r}")
            tensor.data = arrays[name].astype(tensor.dtype)

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def score_batch(self, base: BaseRanker, batch: GroupBatch, train: bool = False,
                    rng: nx.Rng | None = None,
                    collect: bool = False) -> tuple[nx.Tensor, Diagnostics | None]:
        """Adapted scores for a batch; diagnostics only when `collect`."""
        if self.disabled:
            scores = base.score_batch(batch, train=train, rng=rng)
            return scores, (Diagnostics(latent=np.zeros((batch.size, self.cfg.dim),
                                                        dtype=scores.dtype))
                            if collect else None)
        cand = nx.gather_rows(base.item_table, batch.cand_ids)
        noise = None
        if train and self.cfg.extractor == "np":
            noise = rng.substream("latent-noise").gaussian((batch.size, self.cfg.dim))
        latent = self.extractor.extract(cand, noise)
        modulate = None
        if self.cfg.input_mod != "none" and base.cfg.encoder != "mf":
            modulate = lambda steps: self.input_mod.modulate_steps(steps, latent.z)
        weights, extra_bias, mixing = self.param_mod.effective_weights(base.predictor,
                                                                      latent.z)
        scores = base.score_batch(batch, train=train, rng=rng, modulate=modulate,
                                  weights=weights, extra_bias=extra_bias)
        diag = None
        if collect:
            diag = Diagnostics(latent=latent.z.data.copy(),
                               mixing={t: w.data.copy() for t, w in mixing.items()})
        return scores, diag
