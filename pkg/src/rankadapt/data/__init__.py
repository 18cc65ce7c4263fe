"""Interaction ingestion, splitting, candidate-group sampling, synthesis."""
from .interactions import (
    Catalog,
    DataError,
    GroupSeed,
    Interaction,
    Split,
    UserSequence,
    build_catalog,
    build_sequences,
    leave_one_out_split,
    load_interactions,
    write_interactions,
)
from .recall import (
    RecallIndex,
    build_recall_groups,
    build_recall_index,
    recall_sample_negatives,
    scaled_window,
)
from .sampling import (
    CandidateGroup,
    attach_histories,
    build_mixer_groups,
    groups_for_split,
    mixer_sample_negatives,
    read_group_rows,
    write_groups,
)
from .synthetic import ConfigError, SyntheticConfig, generate_synthetic

__all__ = [
    "Catalog", "CandidateGroup", "ConfigError", "DataError", "GroupSeed",
    "Interaction", "RecallIndex", "Split", "SyntheticConfig", "UserSequence",
    "attach_histories", "build_catalog", "build_mixer_groups",
    "build_recall_groups", "build_recall_index", "build_sequences",
    "generate_synthetic", "groups_for_split", "leave_one_out_split",
    "load_interactions", "mixer_sample_negatives", "read_group_rows",
    "recall_sample_negatives", "scaled_window", "write_groups",
    "write_interactions",
]
