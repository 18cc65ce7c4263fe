"""Losses, training loops, checkpoints, parameter accounting."""
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    checksum,
    dump_checkpoint,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)
from .loss import bce_loss
from .params import closed_form_pool_bound, format_report, parameter_report
from .trainer import (
    STRATEGIES,
    TrainResult,
    TrainSettings,
    TrainingDiverged,
    train_adapter,
    train_base,
)

__all__ = [
    "Checkpoint", "CheckpointError", "STRATEGIES", "TrainResult",
    "TrainSettings", "TrainingDiverged", "bce_loss", "checksum",
    "closed_form_pool_bound", "dump_checkpoint", "format_report",
    "load_checkpoint", "parameter_report", "parse_checkpoint",
    "save_checkpoint", "train_adapter", "train_base",
]
