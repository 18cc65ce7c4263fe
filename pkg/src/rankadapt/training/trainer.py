"""Training loops for the base ranker and the adaptor.

Strategies for the adaptation stage:

  scratch_joint      base + adaptor both random, trained together
  finetune_joint     base from a checkpoint, both trained together
  finetune_adaptor   base from a checkpoint and frozen bitwise; only the
                     adaptor's parameters receive gradients or optimizer
                     state

Both stages shuffle per epoch from a seeded substream, clip gradients at a
global norm, and early-stop on validation GAUC with a fixed patience,
restoring the best-epoch parameters. The adaptation stage always starts
with a fresh optimizer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numerics as nx
from ..adapt.adaptor import RankAdaptor
from ..data.sampling import CandidateGroup
from ..evaluation.report import evaluate
from ..model.base import BaseRanker, GroupBatch
from .loss import bce_loss

STRATEGIES = ("scratch_joint", "finetune_joint", "finetune_adaptor")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 0.001
    batch_size: int = 256
    max_epochs: int = 20
    patience: int = 3
    grad_clip: float = 5.0
    eval_batch_size: int = 512


@dataclass
class TrainResult:
    log_lines: list[str] = field(default_factory=list)
    best_epoch: int = -1
    best_gauc: float = float("-inf")
    best_ndcg: float = 0.0
    epochs_run: int = 0


def _epoch_batches(groups: list[CandidateGroup], batch_size: int, perm: np.ndarray):
    for start in range(0, len(groups), batch_size):
        idx = perm[start:start + batch_size]
        yield GroupBatch.from_groups([groups[i] for i in idx])


def _run_loop(params: dict[str, nx.Tensor], forward, valid_eval,
              snapshot_restore, train_groups, settings: TrainSettings,
              rng: nx.Rng) -> TrainResult:
    """Shared epoch loop: forward/backward/step, validate, early stop."""
    opt = nx.Adam(list(params.values()), lr=settings.lr, clip_norm=settings.grad_clip)
    result = TrainResult()
    result.log_lines.append("epoch\tstep\tloss\tvalid_gauc\tvalid_ndcg")
    best_state: dict[str, np.ndarray] | None = None
    bad_epochs = 0
    step = 0
    n = len(train_groups)
    for epoch in range(settings.max_epochs):
        perm = rng.substream("shuffle", epoch).permutation(n)
        losses = []
        for batch in _epoch_batches(train_groups, settings.batch_size, perm):
            step_rng = rng.substream("step", epoch, step)
            loss = forward(batch, step_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch} step {step}")
            grads = nx.backward(loss)
            opt.step(grads)
            losses.append(value)
            step += 1
        gauc, ndcg = valid_eval()
        result.log_lines.append(
            f"{epoch}\t{step}\t{np.mean(losses):.6f}\t{gauc:.6f}\t{ndcg:.6f}")
        result.epochs_run = epoch + 1
        if gauc > result.best_gauc:
            result.best_gauc = gauc
            result.best_ndcg = ndcg
            result.best_epoch = epoch
            best_state = {name: t.data.copy() for name, t in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= settings.patience:
                break
    if best_state is not None:
        snapshot_restore(best_state)
    return result


def train_base(model: BaseRanker, train_groups, valid_groups,
               settings: TrainSettings, rng: nx.Rng) -> TrainResult:
    model.set_trainable(True)
    params = model.parameters()

    def forward(batch: GroupBatch, step_rng: nx.Rng):
        scores = model.score_batch(batch, train=True, rng=step_rng)
        return bce_loss(scores, batch.labels)

    def valid_eval():
        report = evaluate(lambda b: model.score_batch(b).data, valid_groups,
                          settings.eval_batch_size)
        return report.gauc, report.ndcg

    def restore(state):
        for name, t in params.items():
            t.data = state[name]

    return _run_loop(params, forward, valid_eval, restore, train_groups,
                     settings, rng.substream("train-base"))


def train_adapter(base: BaseRanker, adaptor: RankAdaptor, strategy: str,
                  train_groups, valid_groups, settings: TrainSettings,
                  rng: nx.Rng) -> TrainResult:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    adaptor.set_trainable(True)
    if strategy == "finetune_adaptor":
        base.set_trainable(False)   # stop-gradient: no grads, no optimizer state
        params = adaptor.parameters()
    else:
        base.set_trainable(True)
        params = {**base.parameters(), **adaptor.parameters()}

    def forward(batch: GroupBatch, step_rng: nx.Rng):
        scores, _ = adaptor.score_batch(base, batch, train=True, rng=step_rng)
        return bce_loss(scores, batch.labels)

    def valid_eval():
        report = evaluate(
            lambda b: adaptor.score_batch(base, b)[0].data, valid_groups,
            settings.eval_batch_size)
        return report.gauc, report.ndcg

    def restore(state):
        for name, t in params.items():
            t.data = state[name]

    return _run_loop(params, forward, valid_eval, restore, train_groups,
                     settings, rng.substream("train-adapt", strategy))
