"""Base sequential ranker: item embeddings, history encoder, scoring head.

Scoring is listwise over a candidate group: the user's history is encoded
once into a user vector, which is paired with each of the group's m
candidate embeddings and pushed through a two-layer sigmoid head. All
computation is batched over B groups; histories are left-padded and the
recurrent state is frozen on pad steps, so scores do not depend on batch
composition.

The scoring entry points accept optional hooks (sequence modulation,
per-group head weights, extra pre-activation biases) so that an adaptor
can reuse this exact code path; with all hooks absent the computation is
the plain base model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numerics as nx
from ..data.sampling import CandidateGroup


@dataclass(frozen=True)
class ModelConfig:
    num_items: int
    num_users: int
    dim: int = 64
    encoder: str = "gru"          # gru | mf | attention
    dropout: float = 0.4
    max_seq_len: int = 50
    attn_layers: int = 2
    attn_heads: int = 2

    def validate(self) -> None:
        if self.encoder not in ("gru", "mf", "attention"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.dim % self.attn_heads:
            raise ValueError("dim must divide evenly across attention heads")


@dataclass
class GroupBatch:
    """Padded arrays for a list of candidate groups (left-padded histories)."""
    user_ids: np.ndarray      # (B,)
    hist_ids: np.ndarray      # (B, T) int, pad id 0 on the left
    hist_mask: np.ndarray     # (B, T) float, 1.0 where real
    cand_ids: np.ndarray      # (B, m)
    labels: np.ndarray        # (B, m) float
    groups: list[CandidateGroup]

    @classmethod
    def from_groups(cls, groups: list[CandidateGroup]) -> "GroupBatch":
        B = len(groups)
        T = max(1, max(len(g.history) for g in groups))
        m = len(groups[0].items)
        hist = np.zeros((B, T), dtype=np.int64)
        mask = np.zeros((B, T), dtype=np.float64)
        cands = np.zeros((B, m), dtype=np.int64)
        labels = np.zeros((B, m), dtype=np.float64)
        users = np.zeros(B, dtype=np.int64)
        for b, g in enumerate(groups):
            h = g.history
            if h:
                hist[b, T - len(h):] = h
                mask[b, T - len(h):] = 1.0
            cands[b] = g.items
            labels[b] = g.labels
            users[b] = g.user
        return cls(users, hist, mask, cands, labels, groups)

    @property
    def size(self) -> int:
        return len(self.groups)

    @property
    def seq_len(self) -> int:
        return self.hist_ids.shape[1]


def _glorot(rng: nx.Rng, shape) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    std = (2.0 / (fan_in + fan_out)) ** 0.5
    return rng.gaussian(shape, std=std)


class GruEncoder:
    """Single-layer GRU, zero initial state, returns the last real hidden state.

    Gate convention (documented; the test oracle unrolls the same equations):
        u = sigmoid(x Wxu + h Whu + bu)          update
        r = sigmoid(x Wxr + h Whr + br)          reset
        c = tanh(x Wxc + r * (h Whc) + bc)       candidate
        h' = (1 - u) * c + u * h
    """

    def __init__(self, dim: int, rng: nx.Rng):
        self.dim = dim
        p = {}
        for gate in ("update", "reset", "cand"):
            p[f"enc.gru.wx_{gate}"] = nx.Tensor(_glorot(rng.substream("wx", gate), (dim, dim)), requires_grad=True)
            p[f"enc.gru.wh_{gate}"] = nx.Tensor(_glorot(rng.substream("wh", gate), (dim, dim)), requires_grad=True)
            p[f"enc.gru.b_{gate}"] = nx.Tensor(np.zeros(dim), requires_grad=True)
        self._params = p

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def encode(self, steps: list[nx.Tensor], mask: np.ndarray) -> nx.Tensor:
        p = self._params
        B = steps[0].shape[0]
        h = nx.Tensor(np.zeros((B, self.dim)), dtype=steps[0].dtype)
        for t, x in enumerate(steps):
            u = nx.sigmoid(x @ p["enc.gru.wx_update"] + h @ p["enc.gru.wh_update"] + p["enc.gru.b_update"])
            r = nx.sigmoid(x @ p["enc.gru.wx_reset"] + h @ p["enc.gru.wh_reset"] + p["enc.gru.b_reset"])
            c = nx.tanh(x @ p["enc.gru.wx_cand"] + r * (h @ p["enc.gru.wh_cand"]) + p["enc.gru.b_cand"])
            h_new = (1.0 - u) * c + u * h
            h = nx.where_mask(mask[:, t:t + 1].astype(bool), h_new, h)
        return h


class AttentionEncoder:
    """Unidirectional self-attention: causal, learned position embeddings.

    Positions are indexed by distance from the sequence end so that the
    encoding is independent of batch padding width. No layer norm; residual
    connections around attention and the relu feed-forward block.
    """

    def __init__(self, dim: int, layers: int, heads: int, max_seq_len: int, rng: nx.Rng):
        self.dim = dim
        self.layers = layers
        self.heads = heads
        p = {"enc.attn.pos": nx.Tensor(rng.substream("pos").gaussian((max_seq_len, dim), std=0.01),
                                       requires_grad=True)}
        for layer in range(layers):
            for name in ("wq", "wk", "wv", "wo", "ffn_w1", "ffn_w2"):
                p[f"enc.attn.{layer}.{name}"] = nx.Tensor(
                    _glorot(rng.substream(layer, name), (dim, dim)), requires_grad=True)
            for name in ("ffn_b1", "ffn_b2"):
                p[f"enc.attn.{layer}.{name}"] = nx.Tensor(np.zeros(dim), requires_grad=True)
        self._params = p

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def encode(self, steps: list[nx.Tensor], mask: np.ndarray) -> nx.Tensor:
        p = self._params
        B, T = mask.shape
        H, dh = self.heads, self.dim // self.heads
        x = nx.concat([nx.reshape(s, (B, 1, self.dim)) for s in steps], axis=1)
        pos_ids = np.arange(T - 1, -1, -1)  # distance from the end
        pos = nx.reshape(nx.gather_rows(p["enc.attn.pos"], pos_ids), (1, T, self.dim))
        x = x + pos
        causal = np.tril(np.ones((T, T)))
        allowed = causal[None, :, :] * mask[:, None, :]           # (B, T, T)
        addmask = ((1.0 - allowed) * -1e9)[:, None, :, :]         # (B, 1, T, T)
        scale = 1.0 / (dh ** 0.5)
        for layer in range(self.layers):
            lp = lambda n: p[f"enc.attn.{layer}.{n}"]

            def split_heads(t):
                return nx.transpose(nx.reshape(t, (B, T, H, dh)), (0, 2, 1, 3))

            q = split_heads(x @ lp("wq"))
            k = split_heads(x @ lp("wk"))
            v = split_heads(x @ lp("wv"))
            scores = nx.matmul(q, nx.transpose(k, (0, 1, 3, 2))) * scale
            att = nx.softmax(scores + nx.constant(addmask, like=x))
            ctx = nx.matmul(att, v)
            ctx = nx.reshape(nx.transpose(ctx, (0, 2, 1, 3)), (B, T, self.dim))
            x = x + ctx @ lp("wo")
            x = x + nx.relu(x @ lp("ffn_w1") + lp("ffn_b1")) @ lp("ffn_w2") + lp("ffn_b2")
        # pick the last (right-most) position with a one-hot selector
        sel = np.zeros((T, 1))
        sel[T - 1, 0] = 1.0
        out = nx.matmul(nx.transpose(x, (0, 2, 1)), nx.constant(sel, like=x))
        return nx.reshape(out, (B, self.dim))


class Predictor:
    """Two-layer scoring head: relu hidden (with dropout), sigmoid output.

    `weights`, when given, carries per-group tensors (B, 2d, d)/(B, 1, d)/
    (B, d, 1)/(B, 1, 1) replacing the shared parameters; `extra_bias` adds
    per-group pre-activation biases to either layer.
    """

    def __init__(self, dim: int, dropout: float, rng: nx.Rng):
        self.dim = dim
        self.dropout = dropout
        self._params = {
            "pred.w1": nx.Tensor(_glorot(rng.substream("w1"), (2 * dim, dim)), requires_grad=True),
            "pred.b1": nx.Tensor(np.zeros(dim), requires_grad=True),
            "pred.w2": nx.Tensor(_glorot(rng.substream("w2"), (dim, 1)), requires_grad=True),
            "pred.b2": nx.Tensor(np.zeros(1), requires_grad=True),
        }

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def score(self, x: nx.Tensor, weights=None, extra_bias=(None, None),
              train: bool = False, rng: nx.Rng | None = None) -> nx.Tensor:
        p = self._params
        w1, b1, w2, b2 = weights if weights is not None else (
            p["pred.w1"], p["pred.b1"], p["pred.w2"], p["pred.b2"])
        B, m = x.shape[0], x.shape[1]
        pre1 = nx.matmul(x, w1) + b1
        if extra_bias[0] is not None:
            pre1 = pre1 + extra_bias[0]
        h = nx.relu(pre1)
        h = nx.dropout(h, self.dropout, rng.substream("drop-hidden") if rng else None, train)
        pre2 = nx.matmul(h, w2) + b2
        if extra_bias[1] is not None:
            pre2 = pre2 + extra_bias[1]
        return nx.reshape(nx.sigmoid(pre2), (B, m))


class BaseRanker:
    """Global ranking model: embeddings + encoder + predictor."""

    def __init__(self, cfg: ModelConfig, rng: nx.Rng):
        cfg.validate()
        self.cfg = cfg
        init = rng.substream("init")
        self.item_table = nx.Tensor(
            init.substream("emb.item").gaussian((cfg.num_items, cfg.dim), std=0.01),
            requires_grad=True)
        self._params = {"emb.item": self.item_table}
        if cfg.encoder == "mf":
            self.user_table = nx.Tensor(
                init.substream("emb.user").gaussian((cfg.num_users, cfg.dim), std=0.01),
                requires_grad=True)
            self._params["emb.user"] = self.user_table
            self.encoder = None
        elif cfg.encoder == "gru":
            self.encoder = GruEncoder(cfg.dim, init.substream("gru"))
            self._params.update(self.encoder.parameters())
        else:
            self.encoder = AttentionEncoder(cfg.dim, cfg.attn_layers, cfg.attn_heads,
                                            cfg.max_seq_len, init.substream("attn"))
            self._params.update(self.encoder.parameters())
        self.predictor = Predictor(cfg.dim, cfg.dropout, init.substream("pred"))
        self._params.update(self.predictor.parameters())

    def parameters(self) -> dict[str, nx.Tensor]:
        return dict(self._params)

    def set_trainable(self, flag: bool) -> None:
        for t in self._params.values():
            t.requires_grad = flag

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for name, tensor in self._params.items():
            if name not in arrays:
                raise KeyError(f"checkpoint is missing parameter {name!r}")
            if arrays[name].shape != tensor.shape:
                raise ValueError(f"shape mismatch for {name!r}: "
                                 f"{arrays[name].shape} vs {tensor.shape}")
            tensor.data = arrays[name].astype(tensor.dtype)

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    # -- forward -------------------------------------------------------
    def encode_history(self, batch: GroupBatch, train: bool = False,
                       rng: nx.Rng | None = None, modulate=None) -> nx.Tensor:
        if self.cfg.encoder == "mf":
            return nx.gather_rows(self.user_table, batch.user_ids)
        steps = [nx.gather_rows(self.item_table, batch.hist_ids[:, t])
                 for t in range(batch.seq_len)]
        if modulate is not None:
            steps = modulate(steps)
        if train and self.cfg.dropout > 0:
            steps = [nx.dropout(s, self.cfg.dropout,
                                rng.substream("drop-seq", t), train)
                     for t, s in enumerate(steps)]
        return self.encoder.encode(steps, batch.hist_mask)

    def score_batch(self, batch: GroupBatch, train: bool = False,
                    rng: nx.Rng | None = None, modulate=None, weights=None,
                    extra_bias=(None, None)) -> nx.Tensor:
        B, m = batch.cand_ids.shape
        cand = nx.gather_rows(self.item_table, batch.cand_ids)        # (B, m, d)
        user_vec = self.encode_history(batch, train, rng, modulate)   # (B, d)
        tiled = nx.broadcast_to(nx.reshape(user_vec, (B, 1, self.cfg.dim)),
                                (B, m, self.cfg.dim))
        x = nx.concat([tiled, cand], axis=-1)                         # (B, m, 2d)
        return self.predictor.score(x, weights, extra_bias, train, rng)
