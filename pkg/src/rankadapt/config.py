"""Flat key=value run configuration.

One namespace for the whole pipeline. Files hold `key = value` lines
(# comments allowed); unknown keys are rejected so typos fail loudly.
Values are typed by their defaults. Command-line --set overrides beat the
file, which beats the defaults. The canonical text rendering (sorted keys)
is hashed into artifact headers and echoed into checkpoints.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # global
    seed: int = 0
    # synthetic corpus
    num_users: int = 2000
    num_items: int = 500
    num_categories: int = 10
    dirichlet_alpha: float = 0.3
    zipf_s: float = 1.0
    seq_len_min: int = 12
    seq_len_max: int = 30
    # data preparation
    min_seq_len: int = 10
    max_seq_len: int = 50
    max_train_targets_per_user: int = 0
    sampler: str = "mixer"                   # mixer | recall
    filter_seen: int = 0                     # 1 = seen items never sampled as negatives
    recall_train_d: str = "0.2,0.5,0.3"      # channel shares pop,mf,i2i
    recall_eval_d: str = "0.4,0.1,0.5"       # shifted mix for --dual-dist
    # model
    encoder: str = "gru"                     # gru | mf | attention
    dim: int = 64
    dropout: float = 0.4
    # adaptor
    extractor: str = "np"                    # np | avg
    input_mod: str = "film_scalar"           # film_scalar | film_vector | film_per_item | add_bias | none
    param_mod: str = "mem_net"               # mem_net | free_para | no_global | add_bias_1 | add_bias_2 | none
    slots: int = 10
    # training
    strategy: str = "finetune_adaptor"       # scratch_joint | finetune_joint | finetune_adaptor
    lr: float = 0.001
    batch_size: int = 256
    max_epochs: int = 20
    patience: int = 3
    grad_clip: float = 5.0

    def d_vector(self, key: str) -> tuple[float, ...]:
        raw = getattr(self, key)
        try:
            vec = tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ConfigError(f"{key} must be comma-separated floats, got {raw!r}") from None
        if len(vec) != 3:
            raise ConfigError(f"{key} needs exactly 3 channel shares, got {len(vec)}")
        if any(x < 0 for x in vec) or abs(sum(vec) - 1.0) > 1e-9:
            raise ConfigError(f"{key} must be nonnegative and sum to 1")
        return vec

    def canonical_text(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name)}" for f in sorted(fields(self), key=lambda f: f.name)]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:12]


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELDS[key].type
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    return raw


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        setattr(cfg, key, _parse_value(key, value))
    return cfg


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, base)


def apply_overrides(cfg: RunConfig, pairs: list[str]) -> RunConfig:
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _parse_value(key, value))
    return cfg
