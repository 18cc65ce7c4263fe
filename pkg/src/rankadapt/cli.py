"""Command-line entry point.

    rankadapt generate    synthesise an interaction corpus
    rankadapt prepare     build candidate-group files from a corpus
    rankadapt train-base  train the global ranking model
    rankadapt train-adapt train the adaptor (or a joint model)
    rankadapt eval        score the test groups and write metric files
    rankadapt inspect     parameter accounting for a checkpoint

Every command takes --config FILE, --seed N, --out DIR and repeatable
--set key=value overrides (flag > config file > default). Exit codes:
0 success, 2 configuration/usage error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .data.interactions import DataError
from .data.synthetic import ConfigError as SyntheticConfigError
from .training.checkpoint import CheckpointError
from .training.trainer import TrainingDiverged

USAGE_ERRORS = (ConfigError, SyntheticConfigError, DataError, CheckpointError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankadapt",
                                     description="Distribution-adaptive listwise ranking")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="global random seed")
        p.add_argument("--out", default="run_out", help="run directory (default: run_out)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a single config key (repeatable)")
        return p

    common(sub.add_parser("generate", help="synthesise an interaction corpus"))
    common(sub.add_parser("prepare", help="sample candidate groups for all splits"))
    common(sub.add_parser("train-base", help="train the global model"))
    p = common(sub.add_parser("train-adapt", help="train the adaptor"))
    p.add_argument("--strategy", choices=("scratch_joint", "finetune_joint",
                                          "finetune_adaptor"),
                   help="shorthand for --set strategy=...")
    p = common(sub.add_parser("eval", help="evaluate on the test groups"))
    p.add_argument("--checkpoint", help="checkpoint to evaluate (default: ada.ckpt, else base.ckpt)")
    p.add_argument("--adaptor", choices=("on", "off"), default="on",
                   help="score with or without the adaptor (default on)")
    p.add_argument("--dual-dist", action="store_true",
                   help="also evaluate under matched vs shifted candidate mixes")
    p.add_argument("--export-qual", action="store_true",
                   help="dump per-group latents and pool mixing weights")
    p = common(sub.add_parser("inspect", help="parameter accounting for a checkpoint"))
    p.add_argument("--checkpoint", help="checkpoint to inspect (default: ada.ckpt, else base.ckpt)")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    if getattr(args, "strategy", None):
        cfg.strategy = args.strategy
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        out = args.out
        if args.command == "generate":
            path = pipeline.cmd_generate(cfg, out)
            print(f"wrote {path}")
        elif args.command == "prepare":
            written = pipeline.cmd_prepare(cfg, out)
            for part, path in written.items():
                print(f"wrote {path} ({part})")
        elif args.command == "train-base":
            path = pipeline.cmd_train_base(cfg, out)
            print(f"wrote {path}")
        elif args.command == "train-adapt":
            path = pipeline.cmd_train_adapt(cfg, out)
            print(f"wrote {path}")
        elif args.command == "eval":
            artifacts = pipeline.cmd_eval(
                cfg, out, checkpoint=args.checkpoint,
                adaptor_on=(args.adaptor == "on"),
                dual_dist=args.dual_dist, export_qual=args.export_qual)
            report = artifacts["report"]
            print(f"GAUC {report.gauc:.6f}  NDCG {report.ndcg:.6f}  "
                  f"({report.num_groups} groups, {report.num_users} users)")
        elif args.command == "inspect":
            report = pipeline.cmd_inspect(cfg, out, checkpoint=args.checkpoint)
            print(f"theta {report['theta_total']}  phi {report['phi_total']}")
            if report["theta_total"]:
                print(f"phi/theta ratio {report['ratio']:.4f}")
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDiverged, OSError, ValueError, KeyError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
