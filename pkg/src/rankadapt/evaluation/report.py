"""Batch evaluation, per-user aggregation, and the dual-distribution study.

`evaluate` takes a scoring callable (GroupBatch -> ndarray of scores) so the
same code path serves the base model, the adapted model, and test oracles.
Per-user metric means are aggregated with equal user weight.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..data.recall import RecallIndex, build_recall_groups
from ..data.sampling import CandidateGroup
from ..model.base import GroupBatch
from ..numerics import Rng
from .metrics import group_auc, group_ndcg


@dataclass
class EvaluationReport:
    gauc: float
    ndcg: float
    num_users: int
    num_groups: int
    per_user: dict[int, tuple[float, float]]          # user -> (gauc, ndcg)
    per_provenance: dict[str, tuple[float, float, int]] = field(default_factory=dict)
    group_gauc: np.ndarray = None
    group_ndcg: np.ndarray = None

    def metric_lines(self, prefix: str = "") -> list[str]:
        p = f"{prefix}." if prefix else ""
        lines = [
            f"{p}gauc\t{self.gauc:.6f}",
            f"{p}ndcg\t{self.ndcg:.6f}",
            f"{p}num_users\t{self.num_users}",
            f"{p}num_groups\t{self.num_groups}",
        ]
        for tag, (g, n, count) in sorted(self.per_provenance.items()):
            lines.append(f"{p}provenance.{tag}.gauc\t{g:.6f}")
            lines.append(f"{p}provenance.{tag}.ndcg\t{n:.6f}")
            lines.append(f"{p}provenance.{tag}.groups\t{count}")
        return lines


def iter_batches(groups: list[CandidateGroup], batch_size: int):
    for start in range(0, len(groups), batch_size):
        yield GroupBatch.from_groups(groups[start:start + batch_size])


def evaluate(score_fn, groups: list[CandidateGroup], batch_size: int = 256) -> EvaluationReport:
    auc_per_group = np.zeros(len(groups))
    ndcg_per_group = np.zeros(len(groups))
    pos = 0
    for batch in iter_batches(groups, batch_size):
        scores = np.asarray(score_fn(batch))
        for b, g in enumerate(batch.groups):
            auc_per_group[pos] = group_auc(scores[b], batch.labels[b])
            ndcg_per_group[pos] = group_ndcg(scores[b], batch.cand_ids[b], batch.labels[b])
            pos += 1
    users: dict[int, list[int]] = {}
    provs: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        users.setdefault(g.user, []).append(i)
        provs.setdefault(g.provenance, []).append(i)
    per_user = {u: (float(auc_per_group[ix].mean()), float(ndcg_per_group[ix].mean()))
                for u, ix in sorted(users.items())}
    per_prov = {tag: (float(auc_per_group[ix].mean()), float(ndcg_per_group[ix].mean()), len(ix))
                for tag, ix in sorted(provs.items())}
    user_auc = np.asarray([v[0] for v in per_user.values()])
    user_ndcg = np.asarray([v[1] for v in per_user.values()])
    return EvaluationReport(
        gauc=float(user_auc.mean()), ndcg=float(user_ndcg.mean()),
        num_users=len(per_user), num_groups=len(groups),
        per_user=per_user, per_provenance=per_prov,
        group_gauc=auc_per_group, group_ndcg=ndcg_per_group)


def paired_test(a, b) -> float:
    """Two-sided paired t-test p-value; identical inputs give p = 1.0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired test needs equal-length samples")
    diff = a - b
    if np.all(diff == 0.0):
        return 1.0
    t, p = stats.ttest_rel(a, b)
    if np.isnan(p):  # constant nonzero difference: overwhelming evidence
        return 0.0
    return float(p)


@dataclass
class DualDistributionReport:
    """2 models x 2 candidate settings x 2 metrics, plus relative gains."""
    cells: dict[str, EvaluationReport]     # keys: base.same, base.new, ada.same, ada.new

    def relative_gain(self, setting: str, metric: str = "ndcg") -> float:
        base = getattr(self.cells[f"base.{setting}"], metric)
        ada = getattr(self.cells[f"ada.{setting}"], metric)
        return (ada - base) / base if base else float("inf")

    def metric_lines(self) -> list[str]:
        lines = []
        for key in ("base.same", "base.new", "ada.same", "ada.new"):
            lines.extend(self.cells[key].metric_lines(prefix=key))
        for setting in ("same", "new"):
            for metric in ("gauc", "ndcg"):
                lines.append(f"gain.{setting}.{metric}\t"
                             f"{self.relative_gain(setting, metric):.6f}")
        return lines


def dual_distribution_eval(base_fn, ada_fn, seeds, index: RecallIndex, rng: Rng,
                           d_same, d_new, batch_size: int = 256) -> DualDistributionReport:
    """Evaluate both models on matched groups under two candidate mixes.

    The same positives (seeds) underlie both settings; only the negative
    channel mix differs, so the comparison isolates the candidate shift.
    """
    same_groups = build_recall_groups(seeds, index, rng, d_same)
    new_groups = build_recall_groups(seeds, index, rng, d_new)
    return DualDistributionReport(cells={
        "base.same": evaluate(base_fn, same_groups, batch_size),
        "base.new": evaluate(base_fn, new_groups, batch_size),
        "ada.same": evaluate(ada_fn, same_groups, batch_size),
        "ada.new": evaluate(ada_fn, new_groups, batch_size),
    })
