"""End-to-end pipeline steps shared by the CLI and the test suite.

Each step reads/writes artifacts in a run directory:

    interactions.tsv            generated corpus
    groups.{train,valid,test}.tsv   prepared candidate groups
    base.ckpt / ada.ckpt        checkpoints (theta / theta+phi)
    train_base.log.tsv / train_adapt.log.tsv
    eval.metrics.tsv, eval.report.txt, dual.metrics.tsv, qual.tsv
    inspect.txt

Artifacts carry a `# config=<hash>` header; none carry timestamps, so a
re-run with the same seed and config reproduces every file byte for byte.
"""
from __future__ import annotations

import os

import numpy as np

from . import numerics as nx
from .adapt import AdaptorConfig, RankAdaptor
from .config import ConfigError, RunConfig, parse_config_text
from .data import (
    SyntheticConfig,
    build_catalog,
    build_mixer_groups,
    build_recall_groups,
    build_recall_index,
    build_sequences,
    generate_synthetic,
    groups_for_split,
    leave_one_out_split,
    load_interactions,
    write_groups,
    write_interactions,
)
from .evaluation import dual_distribution_eval, evaluate
from .model import BaseRanker, ModelConfig
from .training import (
    TrainSettings,
    load_checkpoint,
    parameter_report,
    save_checkpoint,
    train_adapter,
    train_base,
)

GROUP_FILES = {"train": "groups.train.tsv", "valid": "groups.valid.tsv",
               "test": "groups.test.tsv"}


def _headers(cfg: RunConfig) -> list[str]:
    return [f"config={cfg.config_hash()}"]


def path_in(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, name)


def cmd_generate(cfg: RunConfig, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    syn = SyntheticConfig(
        num_users=cfg.num_users, num_items=cfg.num_items,
        num_categories=cfg.num_categories, dirichlet_alpha=cfg.dirichlet_alpha,
        zipf_s=cfg.zipf_s, seq_len_min=cfg.seq_len_min, seq_len_max=cfg.seq_len_max)
    records = generate_synthetic(syn, nx.Rng(cfg.seed))
    out = path_in(out_dir, "interactions.tsv")
    write_interactions(out, records, header_lines=_headers(cfg))
    return out


def load_corpus(cfg: RunConfig, out_dir: str):
    path = path_in(out_dir, "interactions.tsv")
    if not os.path.exists(path):
        raise ConfigError(f"no interactions file at {path}; run generate first")
    records = load_interactions(path)
    sequences = build_sequences(records, min_len=cfg.min_seq_len)
    if not sequences:
        raise ConfigError("no user kept: every sequence is shorter than min_seq_len")
    split = leave_one_out_split(sequences, max_seq_len=cfg.max_seq_len,
                                max_train_targets_per_user=cfg.max_train_targets_per_user)
    catalog = build_catalog(records, sequences)
    return records, sequences, split, catalog


def cmd_prepare(cfg: RunConfig, out_dir: str) -> dict[str, str]:
    records, sequences, split, catalog = load_corpus(cfg, out_dir)
    rng = nx.Rng(cfg.seed)
    if cfg.sampler == "mixer":
        seen = ({s.user: frozenset(s.items) for s in sequences}
                if cfg.filter_seen else None)
        parts = {part: build_mixer_groups(getattr(split, part), catalog, rng,
                                          seen=seen)
                 for part in ("train", "valid", "test")}
    elif cfg.sampler == "recall":
        index = build_recall_index(sequences, catalog, cfg.dim, rng)
        d_train = cfg.d_vector("recall_train_d")
        parts = {part: build_recall_groups(getattr(split, part), index, rng, d_train)
                 for part in ("train", "valid", "test")}
    else:
        raise ConfigError(f"unknown sampler {cfg.sampler!r}")
    written = {}
    for part, groups in parts.items():
        out = path_in(out_dir, GROUP_FILES[part])
        write_groups(out, groups, header_lines=_headers(cfg))
        written[part] = out
    return written


def load_groups(cfg: RunConfig, out_dir: str, parts=("train", "valid", "test")):
    _, sequences, split, catalog = load_corpus(cfg, out_dir)
    out = {}
    for part in parts:
        path = path_in(out_dir, GROUP_FILES[part])
        if not os.path.exists(path):
            raise ConfigError(f"no prepared groups at {path}; run prepare first")
        out[part] = groups_for_split(getattr(split, part), path)
    return sequences, split, catalog, out


def model_dims(records) -> tuple[int, int]:
    num_items = max(r.item for r in records) + 1
    num_users = max(r.user for r in records) + 1
    return num_items, num_users


def build_model(cfg: RunConfig, num_items: int, num_users: int, rng: nx.Rng) -> BaseRanker:
    mcfg = ModelConfig(num_items=num_items, num_users=num_users, dim=cfg.dim,
                       encoder=cfg.encoder, dropout=cfg.dropout,
                       max_seq_len=cfg.max_seq_len)
    return BaseRanker(mcfg, rng)


def build_adaptor(cfg: RunConfig, rng: nx.Rng) -> RankAdaptor:
    acfg = AdaptorConfig(dim=cfg.dim, extractor=cfg.extractor,
                         input_mod=cfg.input_mod, param_mod=cfg.param_mod,
                         slots=cfg.slots)
    return RankAdaptor(acfg, rng)


def settings_from(cfg: RunConfig) -> TrainSettings:
    return TrainSettings(lr=cfg.lr, batch_size=cfg.batch_size,
                         max_epochs=cfg.max_epochs, patience=cfg.patience,
                         grad_clip=cfg.grad_clip)


def cmd_train_base(cfg: RunConfig, out_dir: str) -> str:
    records, _, _, groups = _corpus_and_groups(cfg, out_dir, ("train", "valid"))
    num_items, num_users = model_dims(records)
    rng = nx.Rng(cfg.seed)
    model = build_model(cfg, num_items, num_users, rng.substream("model"))
    result = train_base(model, groups["train"], groups["valid"],
                        settings_from(cfg), rng)
    ckpt_path = path_in(out_dir, "base.ckpt")
    save_checkpoint(ckpt_path, cfg.canonical_text(), model.state())
    _write_log(path_in(out_dir, "train_base.log.tsv"), cfg, result.log_lines)
    return ckpt_path


def _corpus_and_groups(cfg, out_dir, parts):
    records, *_ = load_corpus(cfg, out_dir)
    sequences, split, catalog, groups = load_groups(cfg, out_dir, parts)
    return records, split, catalog, groups


def restore_base(cfg: RunConfig, ckpt_path: str, num_items: int, num_users: int) -> BaseRanker:
    ckpt = load_checkpoint(ckpt_path)
    stored = parse_config_text(ckpt.config_text)
    model = build_model(stored, num_items, num_users, nx.Rng(stored.seed).substream("model"))
    model.load_state(ckpt.theta)
    return model


def cmd_train_adapt(cfg: RunConfig, out_dir: str) -> str:
    records, _, _, groups = _corpus_and_groups(cfg, out_dir, ("train", "valid"))
    num_items, num_users = model_dims(records)
    rng = nx.Rng(cfg.seed)
    if cfg.strategy == "scratch_joint":
        model = build_model(cfg, num_items, num_users, rng.substream("model"))
    else:
        base_path = path_in(out_dir, "base.ckpt")
        if not os.path.exists(base_path):
            raise ConfigError(
                f"strategy {cfg.strategy} needs a base checkpoint at {base_path}; "
                "run train-base first")
        model = restore_base(cfg, base_path, num_items, num_users)
    adaptor = build_adaptor(cfg, rng.substream("adaptor"))
    result = train_adapter(model, adaptor, cfg.strategy, groups["train"],
                           groups["valid"], settings_from(cfg), rng)
    ckpt_path = path_in(out_dir, "ada.ckpt")
    save_checkpoint(ckpt_path, cfg.canonical_text(), model.state(), adaptor.state())
    _write_log(path_in(out_dir, "train_adapt.log.tsv"), cfg, result.log_lines)
    return ckpt_path


def _write_log(path, cfg: RunConfig, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in _headers(cfg):
            fh.write(f"# {h}\n")
        for line in lines:
            fh.write(line + "\n")


def load_models_for_eval(cfg: RunConfig, out_dir: str, checkpoint: str | None,
                         num_items: int, num_users: int,
                         adaptor_on: bool) -> tuple[BaseRanker, RankAdaptor | None]:
    if checkpoint is None:
        preferred = path_in(out_dir, "ada.ckpt")
        checkpoint = preferred if os.path.exists(preferred) else path_in(out_dir, "base.ckpt")
    if not os.path.exists(checkpoint):
        raise ConfigError(f"no checkpoint at {checkpoint}")
    ckpt = load_checkpoint(checkpoint)
    stored = parse_config_text(ckpt.config_text)
    model = build_model(stored, num_items, num_users, nx.Rng(stored.seed).substream("model"))
    model.load_state(ckpt.theta)
    adaptor = None
    if adaptor_on:
        if ckpt.phi is None:
            raise ConfigError(f"{checkpoint} holds no adaptor parameters; "
                              "evaluate with --adaptor off or train-adapt first")
        adaptor = build_adaptor(stored, nx.Rng(stored.seed).substream("adaptor"))
        adaptor.load_state(ckpt.phi)
    return model, adaptor


def cmd_eval(cfg: RunConfig, out_dir: str, checkpoint: str | None = None,
             adaptor_on: bool = True, dual_dist: bool = False,
             export_qual: bool = False) -> dict:
    records, sequences, split, catalog = load_corpus(cfg, out_dir)
    _, _, _, groups = _corpus_and_groups(cfg, out_dir, ("test",))
    num_items, num_users = model_dims(records)
    model, adaptor = load_models_for_eval(cfg, out_dir, checkpoint,
                                          num_items, num_users, adaptor_on)
    if adaptor is not None:
        score_fn = lambda b: adaptor.score_batch(model, b)[0].data
        tag = "adaptor=on"
    else:
        score_fn = lambda b: model.score_batch(b).data
        tag = "adaptor=off"
    report = evaluate(score_fn, groups["test"])
    lines = [f"setting\t{tag}"] + report.metric_lines()
    artifacts = {"report": report}

    if dual_dist:
        if adaptor is None:
            raise ConfigError("--dual-dist compares base and adapted scoring; "
                              "it needs an adaptor checkpoint")
        rng = nx.Rng(cfg.seed)
        index = build_recall_index(sequences, catalog, cfg.dim, rng)
        dual = dual_distribution_eval(
            lambda b: model.score_batch(b).data,
            lambda b: adaptor.score_batch(model, b)[0].data,
            split.test, index, rng,
            cfg.d_vector("recall_train_d"), cfg.d_vector("recall_eval_d"))
        _write_metric_file(path_in(out_dir, "dual.metrics.tsv"), cfg, dual.metric_lines())
        artifacts["dual"] = dual

    if export_qual:
        if adaptor is None:
            raise ConfigError("--export-qual needs the adaptor enabled")
        _export_qual(path_in(out_dir, "qual.tsv"), cfg, model, adaptor, groups["test"])
        artifacts["qual_path"] = path_in(out_dir, "qual.tsv")

    _write_metric_file(path_in(out_dir, "eval.metrics.tsv"), cfg, lines)
    _write_report_text(path_in(out_dir, "eval.report.txt"), cfg, tag, report)
    return artifacts


def _write_metric_file(path, cfg, lines) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in _headers(cfg):
            fh.write(f"# {h}\n")
        for line in lines:
            fh.write(line + "\n")


def _write_report_text(path, cfg, tag, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h in _headers(cfg):
            fh.write(f"# {h}\n")
        fh.write(f"evaluation ({tag})\n")
        fh.write(f"  users:  {report.num_users}\n")
        fh.write(f"  groups: {report.num_groups}\n")
        fh.write(f"  GAUC:   {report.gauc:.6f}\n")
        fh.write(f"  NDCG:   {report.ndcg:.6f}\n")
        if report.per_provenance:
            fh.write("  by provenance:\n")
            for tag_, (g, n, c) in sorted(report.per_provenance.items()):
                fh.write(f"    {tag_}: gauc={g:.6f} ndcg={n:.6f} groups={c}\n")


def _export_qual(path, cfg: RunConfig, model: BaseRanker, adaptor: RankAdaptor,
                 groups) -> None:
    """Per-group latent and pool-mixing dump (one row per evaluated group)."""
    from .evaluation.report import iter_batches
    from .adapt.pool import POOL_TARGETS

    has_pools = adaptor.cfg.param_mod in ("mem_net", "no_global")
    with open(path, "w", encoding="utf-8") as fh:
        for h in _headers(cfg):
            fh.write(f"# {h}\n")
        cols = ["group", "user", "provenance"]
        cols += [f"z{i}" for i in range(adaptor.cfg.dim)]
        if has_pools:
            for target in POOL_TARGETS:
                cols += [f"alpha.{target}.{i}" for i in range(adaptor.cfg.slots)]
        fh.write("\t".join(cols) + "\n")
        gi = 0
        for batch in iter_batches(groups, 256):
            _, diag = adaptor.score_batch(model, batch, collect=True)
            for b, g in enumerate(batch.groups):
                row = [str(gi), str(g.user), g.provenance]
                row += [f"{v:.6f}" for v in diag.latent[b]]
                if has_pools:
                    for target in POOL_TARGETS:
                        row += [f"{v:.6f}" for v in diag.mixing[target][b]]
                fh.write("\t".join(row) + "\n")
                gi += 1


def cmd_inspect(cfg: RunConfig, out_dir: str, checkpoint: str | None = None) -> dict:
    if checkpoint is None:
        checkpoint = path_in(out_dir, "ada.ckpt")
        if not os.path.exists(checkpoint):
            checkpoint = path_in(out_dir, "base.ckpt")
    if not os.path.exists(checkpoint):
        raise ConfigError(f"no checkpoint at {checkpoint}")
    ckpt = load_checkpoint(checkpoint)
    report = parameter_report(ckpt)
    from .training.params import format_report
    text = format_report(report)
    with open(path_in(out_dir, "inspect.txt"), "w", encoding="utf-8") as fh:
        for h in _headers(cfg):
            fh.write(f"# {h}\n")
        fh.write(text)
    return report
