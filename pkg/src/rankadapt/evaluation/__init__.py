"""Ranking metrics, evaluation reports, significance testing."""
from .metrics import group_auc, group_ndcg, positive_rank
from .report import (
    DualDistributionReport,
    EvaluationReport,
    dual_distribution_eval,
    evaluate,
    iter_batches,
    paired_test,
)

__all__ = [
    "DualDistributionReport", "EvaluationReport", "dual_distribution_eval",
    "evaluate", "group_auc", "group_ndcg", "iter_batches", "paired_test",
    "positive_rank",
]
