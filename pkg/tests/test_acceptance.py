"""End-to-end acceptance checks, one per release criterion.

Each test prints a single PASS line (visible with -s) after its assertions;
the per-test pytest verdict is the official pass/fail record. Criteria 8-10
share three fully trained model triples built once on first use.
"""
import time

import numpy as np
import pytest

from rankadapt import numerics as nx
from rankadapt import pipeline
from rankadapt.adapt import AdaptorConfig, RankAdaptor
from rankadapt.config import RunConfig
from rankadapt.data import (
    SyntheticConfig,
    build_catalog,
    build_mixer_groups,
    build_recall_groups,
    build_recall_index,
    build_sequences,
    generate_synthetic,
    leave_one_out_split,
)
from rankadapt.data.sampling import CandidateGroup
from rankadapt.evaluation import dual_distribution_eval, evaluate
from rankadapt.evaluation.metrics import group_auc, group_ndcg
from rankadapt.model import BaseRanker, ModelConfig
from rankadapt.model.base import GroupBatch
from rankadapt.training import (
    TrainSettings,
    checksum,
    dump_checkpoint,
    parse_checkpoint,
    train_adapter,
    train_base,
)
from rankadapt.training.loss import bce_loss


def report(line):
    print(f"\n{line}")


# ----------------------------------------------------------------------
# criterion 1: analytic gradients of the complete adapted-scoring loss
# ----------------------------------------------------------------------

def test_criterion_01_gradient_check_full_loss():
    t0 = time.monotonic()
    with nx.precision("double"):
        mcfg = ModelConfig(num_items=30, num_users=9, dim=8, encoder="gru",
                           dropout=0.0, max_seq_len=8)
        base = BaseRanker(mcfg, nx.Rng(11))
        ada = RankAdaptor(AdaptorConfig(dim=8, slots=3), nx.Rng(12))
        base.set_trainable(True)
        ada.set_trainable(True)
        params = {**base.parameters(), **ada.parameters()}
        # nudge every tensor off its (partly symmetric) init so no gradient
        # path is structurally dead during the check
        jitter = nx.Rng(13)
        for name, tensor in params.items():
            tensor.data = tensor.data + jitter.substream(name).gaussian(
                tensor.shape, std=0.05).astype(tensor.data.dtype)

        groups = [
            CandidateGroup(u, tuple(range(1 + u, 6 + u)), 7 + u,
                           tuple(9 + u + j for j in range(5)), "x")
            for u in range(3)
        ]
        batch = GroupBatch.from_groups(groups)   # seq=5, m=6 per group

        def loss_fn():
            scores, _ = ada.score_batch(base, batch, train=True, rng=nx.Rng(99))
            return bce_loss(scores, batch.labels)

        err = nx.grad_check(loss_fn, list(params.values()), h=1e-5)
    took = time.monotonic() - t0
    assert err < 1e-4, f"max relative gradient error {err:.3e}"
    assert took < 60.0
    report(f"criterion 1 PASS  gradient check max rel err {err:.2e} in {took:.1f}s")


# ----------------------------------------------------------------------
# criterion 2: disabled adaptor is bitwise identical to the base model
# ----------------------------------------------------------------------

def small_world(seed=0, num_users=150, num_items=200):
    cfg = SyntheticConfig(num_users=num_users, num_items=num_items,
                          num_categories=5, dirichlet_alpha=0.3,
                          seq_len_min=12, seq_len_max=18)
    records = generate_synthetic(cfg, nx.Rng(seed))
    sequences = build_sequences(records)
    split = leave_one_out_split(sequences)
    catalog = build_catalog(records, sequences)
    rng = nx.Rng(seed)
    groups = {part: build_mixer_groups(getattr(split, part), catalog, rng)
              for part in ("train", "valid", "test")}
    return cfg, sequences, split, catalog, groups


def test_criterion_02_disabled_adaptor_bitwise_equal():
    _, _, _, _, groups = small_world()
    pool = (groups["train"] + groups["valid"] + groups["test"])[:1000]
    assert len(pool) == 1000
    mcfg = ModelConfig(num_items=200, num_users=150, dim=32, encoder="gru",
                       dropout=0.0)
    base = BaseRanker(mcfg, nx.Rng(3))
    blob = dump_checkpoint("", base.state())

    restored = BaseRanker(mcfg, nx.Rng(17))       # different init, then load
    restored.load_state(parse_checkpoint(blob).theta)
    disabled = RankAdaptor(AdaptorConfig(dim=32, input_mod="none",
                                         param_mod="none"), nx.Rng(23))
    for start in range(0, 1000, 250):
        batch = GroupBatch.from_groups(pool[start:start + 250])
        want = base.score_batch(batch).data
        got, _ = disabled.score_batch(restored, batch)
        assert np.array_equal(want, got.data)
    report("criterion 2 PASS  1000 groups scored bitwise equal with adaptor disabled")


# ----------------------------------------------------------------------
# criterion 3: latent (mu, sigma) invariant under candidate permutations
# ----------------------------------------------------------------------

def test_criterion_03_latent_permutation_invariance():
    _, _, _, _, groups = small_world(seed=1)
    sample = groups["train"][:100]
    mcfg = ModelConfig(num_items=200, num_users=150, dim=32, encoder="gru")
    base = BaseRanker(mcfg, nx.Rng(5))
    ada = RankAdaptor(AdaptorConfig(dim=32), nx.Rng(6))
    jitter = nx.Rng(7)
    for name, tensor in ada.extractor._params.items():
        tensor.data = (tensor.data
                       + jitter.substream(name).gaussian(tensor.shape, std=0.2)
                       .astype(np.float32))

    def latent_of(group_list):
        batch = GroupBatch.from_groups(group_list)
        cand = nx.gather_rows(base.item_table, batch.cand_ids)
        state = ada.extractor.extract(cand, None)
        return state.mean, state.std

    mean0, std0 = latent_of(sample)
    shuffler = np.random.default_rng(123)
    for trial in range(20):
        permuted = []
        for g in sample:
            order = shuffler.permutation(len(g.items))
            items = [g.items[i] for i in order]
            pos_at = items.index(g.positive)
            items[0], items[pos_at] = items[pos_at], items[0]
            permuted.append(CandidateGroup(g.user, g.history, items[0],
                                           tuple(items[1:]), g.provenance))
        mean_p, std_p = latent_of(permuted)
        assert np.array_equal(mean0, mean_p), f"mu changed on trial {trial}"
        assert np.array_equal(std0, std_p), f"sigma changed on trial {trial}"
    report("criterion 3 PASS  (mu, sigma) bitwise stable over 20 permutations x 100 groups")


# ----------------------------------------------------------------------
# criterion 4: frozen-base strategy leaves every base tensor untouched
# ----------------------------------------------------------------------

def test_criterion_04_frozen_base_checksum_after_100_steps():
    _, _, _, _, groups = small_world(seed=2)
    mcfg = ModelConfig(num_items=200, num_users=150, dim=32, encoder="gru",
                       dropout=0.0)
    base = BaseRanker(mcfg, nx.Rng(8))
    ada = RankAdaptor(AdaptorConfig(dim=32), nx.Rng(9))
    train = groups["train"][:640]
    before = checksum(base.state())
    settings = TrainSettings(lr=0.01, batch_size=64, max_epochs=10, patience=999)
    result = train_adapter(base, ada, "finetune_adaptor", train,
                           groups["valid"][:100], settings, nx.Rng(0))
    steps = int(result.log_lines[-1].split("\t")[1])
    assert steps == 100                       # 640/64 batches x 10 epochs
    assert checksum(base.state()) == before
    report("criterion 4 PASS  base checksum unchanged after 100 adaptor-only steps")


# ----------------------------------------------------------------------
# criterion 5: ranking metrics match brute-force oracles, ties included
# ----------------------------------------------------------------------

def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0
               for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def brute_rank(scores, item_ids, labels):
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], item_ids[i]))
    pos = labels.index(1)
    return order.index(pos) + 1


def test_criterion_05_metric_oracles_exact():
    rng = np.random.default_rng(77)
    for case in range(100):
        m = int(rng.integers(5, 25))
        scores = np.round(rng.random(m), 1)       # heavy ties
        item_ids = rng.permutation(1000)[:m]
        labels = np.zeros(m, dtype=int)
        labels[rng.integers(0, m)] = 1
        want_auc = brute_auc(scores.tolist(), labels.tolist())
        got_auc = group_auc(scores, labels)
        assert got_auc == want_auc, f"case {case}: auc {got_auc} != {want_auc}"
        want_rank = brute_rank(scores.tolist(), item_ids.tolist(), labels.tolist())
        got_ndcg = group_ndcg(scores, item_ids, labels)
        assert got_ndcg == 1.0 / np.log2(want_rank + 1.0)
    report("criterion 5 PASS  group_auc / group_ndcg exact on 100 tie-heavy groups")


# ----------------------------------------------------------------------
# criterion 6: negative-sampler statistics at scale
# ----------------------------------------------------------------------

class RecordingRng(nx.Rng):
    """Rng that logs randint/bernoulli draws, propagating through substreams."""

    def __init__(self, seed, _key=(), log=None):
        super().__init__(seed, _key)
        self.log = log if log is not None else []

    def substream(self, *key_parts):
        return RecordingRng(self.seed, self._key + key_parts, self.log)

    def randint(self, low, high, shape=()):
        v = super().randint(low, high, shape)
        self.log.append(("randint", low, high, int(np.asarray(v).flat[0])))
        return v

    def bernoulli(self, p, shape=()):
        v = super().bernoulli(p, shape)
        self.log.append(("bernoulli", p, bool(np.asarray(v).flat[0])))
        return v


def test_criterion_06_sampler_statistics():
    from rankadapt.data.sampling import mixer_sample_negatives

    cfg = SyntheticConfig(num_users=700, num_items=300, num_categories=8,
                          dirichlet_alpha=0.5, seq_len_min=16, seq_len_max=20)
    records = generate_synthetic(cfg, nx.Rng(4))
    sequences = build_sequences(records)
    split = leave_one_out_split(sequences)
    catalog = build_catalog(records, sequences)

    targets = [(seed.user, seed.positive) for seed in split.train]
    assert len(targets) >= 10_000
    d_counts = {1: 0, 2: 0, 3: 0}
    pop_flags = 0
    outer = nx.Rng(0)
    for n, (user, positive) in enumerate(targets[:10_000]):
        log = []
        rec = RecordingRng(0, ("mixer", user, n), log)
        negatives = mixer_sample_negatives(rec, positive, catalog)
        assert len(negatives) == 19
        first = next(e for e in log if e[0] == "randint" and e[1] == 1 and e[2] == 4)
        d_counts[first[3]] += 1
        coin = next(e for e in log if e[0] == "bernoulli")
        assert coin[1] == 0.5
        pop_flags += int(coin[2])
    for d in (1, 2, 3):
        share = d_counts[d] / 10_000
        assert abs(share - 1.0 / 3.0) <= 0.02, f"P(d={d}) = {share:.4f}"
    assert abs(pop_flags / 10_000 - 0.5) <= 0.02

    # recall-channel budgets: every sampled group carries exactly 19 negatives
    index = build_recall_index(sequences, catalog, 16, nx.Rng(5))
    recall_groups = build_recall_groups(split.valid, index, nx.Rng(6),
                                        (0.3, 0.4, 0.3))
    assert len(recall_groups) >= 500
    assert all(len(g.negatives) == 19 for g in recall_groups)
    report("criterion 6 PASS  mixer d/branch within 2%, recall budgets sum to 19")


# ----------------------------------------------------------------------
# criterion 7: parameter accounting vs an independent shape walk
# ----------------------------------------------------------------------

def test_criterion_07_parameter_accounting(tmp_path):
    cfg = RunConfig()
    mcfg = ModelConfig(num_items=cfg.num_items, num_users=cfg.num_users,
                       dim=cfg.dim, encoder=cfg.encoder)
    base = BaseRanker(mcfg, nx.Rng(0))
    ada = RankAdaptor(AdaptorConfig(dim=cfg.dim), nx.Rng(1))
    ckpt_path = tmp_path / "ada.ckpt"
    from rankadapt.training import save_checkpoint
    save_checkpoint(ckpt_path, cfg.canonical_text(), base.state(), ada.state())

    got = pipeline.cmd_inspect(cfg, str(tmp_path), checkpoint=str(ckpt_path))
    theta_walk = sum(int(np.prod(a.shape)) for a in base.state().values())
    phi_walk = sum(int(np.prod(a.shape)) for a in ada.state().values())
    assert got["theta_total"] == theta_walk
    assert got["phi_total"] == phi_walk
    for name, arr in {**base.state()}.items():
        assert got["tensors"][f"theta.{name}"]["size"] == int(np.prod(arr.shape))
    assert got["phi_total"] == 114_828

    big = BaseRanker(ModelConfig(num_items=10_676, num_users=1000, dim=64,
                                 encoder="gru"), nx.Rng(2))
    big_theta = sum(int(np.prod(a.shape)) for a in big.state().values())
    ratio = 114_828 / big_theta
    assert ratio < 0.20
    report(f"criterion 7 PASS  |phi|=114828, inspect==shape walk, "
           f"ratio at 10676-item vocabulary {ratio:.3f} < 0.20")


# ----------------------------------------------------------------------
# criteria 8-10 share three fully trained model triples (seeds 0, 1, 2)
# ----------------------------------------------------------------------

HEAVY_SEEDS = (0, 1, 2)
BENCH_DATA = dict(num_users=2000, num_items=500, num_categories=10,
                  dirichlet_alpha=2.0, zipf_s=1.0,
                  seq_len_min=12, seq_len_max=30)
BASE_SETTINGS = TrainSettings(lr=0.001, batch_size=256, max_epochs=20, patience=3)
ADAPT_SETTINGS = TrainSettings(lr=0.003, batch_size=128, max_epochs=30,
                               patience=999)
ADAPTOR_CFG = AdaptorConfig(dim=64, input_mod="film_vector")

_heavy_cache = {}


def bench_world(seed):
    rng = nx.Rng(seed)
    cfg = SyntheticConfig(**BENCH_DATA)
    records = generate_synthetic(cfg, rng)
    sequences = build_sequences(records)
    split = leave_one_out_split(sequences, max_seq_len=30,
                                max_train_targets_per_user=8)
    catalog = build_catalog(records, sequences)
    groups = {part: build_mixer_groups(getattr(split, part), catalog, rng)
              for part in ("train", "valid", "test")}
    return rng, sequences, split, catalog, groups


def heavy_models(seed):
    """Train the benchmark base + adaptor pair for one seed (cached)."""
    if seed in _heavy_cache:
        return _heavy_cache[seed]
    t0 = time.monotonic()
    rng, sequences, split, catalog, groups = bench_world(seed)
    mkw = dict(num_items=BENCH_DATA["num_items"], num_users=BENCH_DATA["num_users"],
               dim=64, encoder="gru", max_seq_len=30)
    base = BaseRanker(ModelConfig(dropout=0.4, **mkw), rng.substream("model"))
    train_base(base, groups["train"], groups["valid"], BASE_SETTINGS, rng)
    base_report = evaluate(lambda b: base.score_batch(b).data, groups["test"])

    # adaptation stage: the frozen encoder/predictor no longer needs dropout,
    # so the base is rebuilt with it off before the adaptor trains
    frozen = BaseRanker(ModelConfig(dropout=0.0, **mkw), nx.Rng(seed).substream("model"))
    frozen.load_state(base.state())
    ada = RankAdaptor(ADAPTOR_CFG, rng.substream("adaptor"))
    train_adapter(frozen, ada, "finetune_adaptor", groups["train"],
                  groups["valid"], ADAPT_SETTINGS, rng)
    ada_report = evaluate(lambda b: ada.score_batch(frozen, b)[0].data,
                          groups["test"])
    entry = dict(base=frozen, ada=ada, sequences=sequences, split=split,
                 catalog=catalog, groups=groups,
                 base_ndcg=base_report.ndcg, ada_ndcg=ada_report.ndcg,
                 secs=time.monotonic() - t0)
    _heavy_cache[seed] = entry
    return entry


def test_criterion_08_adaptor_beats_frozen_base():
    t0 = time.monotonic()
    deltas = []
    for seed in HEAVY_SEEDS:
        entry = heavy_models(seed)
        deltas.append(entry["ada_ndcg"] - entry["base_ndcg"])
    total = time.monotonic() - t0
    for seed, delta in zip(HEAVY_SEEDS, deltas):
        assert delta >= 0.01, (f"seed {seed}: NDCG gain {delta:+.4f} "
                               f"is below +0.01")
    assert total < 900.0, f"benchmark took {total:.0f}s (budget 900s)"
    report("criterion 8 PASS  NDCG gains "
           + ", ".join(f"{d:+.4f}" for d in deltas)
           + f" over 3 seeds in {total:.0f}s")


def test_criterion_09_gain_larger_under_shifted_candidates():
    wins = 0
    gains = []
    for seed in HEAVY_SEEDS:
        entry = heavy_models(seed)
        rng = nx.Rng(seed).substream("dual")
        index = build_recall_index(entry["sequences"], entry["catalog"], 64, rng)
        dual = dual_distribution_eval(
            lambda b: entry["base"].score_batch(b).data,
            lambda b: entry["ada"].score_batch(entry["base"], b)[0].data,
            entry["split"].test, index, rng,
            d_same=(0.2, 0.5, 0.3), d_new=(0.4, 0.1, 0.5))
        same = dual.relative_gain("same", "ndcg")
        new = dual.relative_gain("new", "ndcg")
        gains.append((same, new))
        wins += int(new > same)
    assert wins >= 2, f"shifted-mix gain larger on only {wins}/3 seeds: {gains}"
    report("criterion 9 PASS  relative NDCG gain larger under shifted mix on "
           f"{wins}/3 seeds " + " ".join(f"({s:+.4f}->{n:+.4f})" for s, n in gains))


def test_criterion_10_training_strategy_ordering():
    averages = {}
    settings = TrainSettings(lr=0.003, batch_size=128, max_epochs=10, patience=999)
    for strategy in ("scratch_joint", "finetune_joint", "finetune_adaptor"):
        scores = []
        for seed in HEAVY_SEEDS:
            entry = heavy_models(seed)
            groups = entry["groups"]
            mkw = dict(num_items=BENCH_DATA["num_items"],
                       num_users=BENCH_DATA["num_users"],
                       dim=64, encoder="gru", dropout=0.0, max_seq_len=30)
            rng = nx.Rng(seed).substream("strategy", strategy)
            model = BaseRanker(ModelConfig(**mkw), rng.substream("model"))
            if strategy != "scratch_joint":
                model.load_state(entry["base"].state())
            ada = RankAdaptor(ADAPTOR_CFG, rng.substream("adaptor"))
            train_adapter(model, ada, strategy, groups["train"], groups["valid"],
                          settings, rng)
            rep = evaluate(lambda b: ada.score_batch(model, b)[0].data,
                           groups["test"])
            scores.append(rep.ndcg)
        averages[strategy] = float(np.mean(scores))
    scratch = averages["scratch_joint"]
    others = min(averages["finetune_joint"], averages["finetune_adaptor"])
    assert scratch <= others, f"strategy averages {averages}"
    report("criterion 10 PASS  scratch_joint "
           f"{scratch:.4f} <= min(finetune) {others:.4f}")


# ----------------------------------------------------------------------
# criterion 11: the five-step pipeline is reproducible byte for byte
# ----------------------------------------------------------------------

def test_criterion_11_end_to_end_determinism(tmp_path):
    overrides = dict(num_users=150, num_items=200, num_categories=5,
                     seq_len_min=12, seq_len_max=18, dim=16,
                     max_epochs=2, batch_size=128, patience=99, seed=3)
    cfg = RunConfig(**overrides)
    outputs = {}
    for run in ("first", "second"):
        out = tmp_path / run
        pipeline.cmd_generate(cfg, str(out))
        pipeline.cmd_prepare(cfg, str(out))
        pipeline.cmd_train_base(cfg, str(out))
        pipeline.cmd_train_adapt(cfg, str(out))
        pipeline.cmd_eval(cfg, str(out))
        blobs = {}
        for name in ("interactions.tsv", "groups.train.tsv", "eval.metrics.tsv",
                     "eval.report.txt", "train_base.log.tsv",
                     "train_adapt.log.tsv"):
            with open(out / name, "rb") as fh:
                blobs[name] = fh.read()
        outputs[run] = blobs
    for name in outputs["first"]:
        assert outputs["first"][name] == outputs["second"][name], name
    report("criterion 11 PASS  twin pipeline runs byte-identical "
           f"({len(outputs['first'])} artifacts compared)")
