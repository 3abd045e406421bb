"""Hybrid pointer network: hybrid context encoder, LSTM point encoder and
two pointer decoders whose logits are merged by an aggregator."""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .nn import BatchNorm, Linear, LSTMCell, Module, uniform_param
from .tensor import Tensor
from .tsp import Instance, make_rng, tour_lengths

AGGREGATORS = ("sum", "max", "mean", "concat")
SAMPLE_FLOOR = 1e-12


@dataclass
class ModelConfig:
    hidden_dim: int = 128
    transformer_layers: int = 6
    graph_layers: int = 3
    feedforward_dim: int = 512
    heads: int = 8
    tanh_clip: float = 10.0
    aggregator: str = "sum"
    # False: encode once per instance (contexts relative to the centroid)
    recompute_context: bool = True

    def __post_init__(self):
        errors = []
        for name in ("hidden_dim", "transformer_layers", "graph_layers", "feedforward_dim", "heads"):
            if int(getattr(self, name)) < 1:
                errors.append(f"{name} must be positive")
        if self.heads >= 1 and self.hidden_dim % self.heads:
            errors.append(f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}")
        if self.tanh_clip <= 0:
            errors.append("tanh_clip must be positive")
        if self.aggregator not in AGGREGATORS:
            errors.append(f"aggregator must be one of {AGGREGATORS}")
        if errors:
            raise ValueError("; ".join(errors))

    def to_dict(self) -> dict:
        return asdict(self)


# feature extractor

def feature_context(coords: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rows (x_j - x_i, y_j - y_i, |v_j - v_i|) for reference points ``ref``.

    coords (..., n, 2), ref (..., 2) -> (..., n, 3).
    """
    diff = coords - ref[..., None, :]
    dist = np.sqrt((diff ** 2).sum(-1, keepdims=True))
    return np.concatenate([diff, dist], axis=-1)


def extract_features(inst: Instance, current: int) -> np.ndarray:
    if not 0 <= current < inst.n:
        raise ValueError(f"city {current} out of range for n={inst.n}")
    out = feature_context(inst.coords, inst.coords[current])
    out[current] = 0.0
    return out


# encoders

class TransformerLayer(Module):
    def __init__(self, d: int, heads: int, ff: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(d)
        self.heads = heads
        self.wq = Linear(d, d, rng, bias=False, bound=bound)
        self.wk = Linear(d, d, rng, bias=False, bound=bound)
        self.wv = Linear(d, d, rng, bias=False, bound=bound)
        self.bn1 = BatchNorm(d)
        self.ff1 = Linear(d, ff, rng, bound=bound)
        self.ff2 = Linear(ff, d, rng, bound=bound)
        self.bn2 = BatchNorm(d)
        self.last_attention: np.ndarray | None = None

    def _split(self, x: Tensor) -> Tensor:
        b, m, d = x.shape
        return T.transpose(x.reshape(b, m, self.heads, d // self.heads), (0, 2, 1, 3))

    def __call__(self, h: Tensor) -> Tensor:
        b, m, d = h.shape
        q, k, v = self._split(self.wq(h)), self._split(self.wk(h)), self._split(self.wv(h))
        scores = T.matmul(q, T.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(d // self.heads))
        att = T.softmax_rows(scores)
        self.last_attention = att.data
        mixed = T.transpose(T.matmul(att, v), (0, 2, 1, 3)).reshape(b, m, d)
        h = self.bn1(h + mixed)
        return self.bn2(h + self.ff2(T.relu(self.ff1(h))))


class GraphLayer(Module):
    """X <- g * X W + (1 - g) * relu((X / |N|) A + c), g a learned scalar."""

    def __init__(self, d: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(d)
        self.w_g = Linear(d, d, rng, bias=False, bound=bound)
        self.phi = Linear(d, d, rng, bound=bound)
        self.gamma = Tensor(np.array([0.5]), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        n = x.shape[-2]
        neighbours = max(n - 1, 1)
        return self.gamma * self.w_g(x) + (1.0 - self.gamma) * T.relu(self.phi(x * (1.0 / neighbours)))


class PointerAttention(Module):
    def __init__(self, d: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(d)
        self.w_r = Linear(d, d, rng, bias=False, bound=bound)
        self.w_q = Linear(d, d, rng, bias=False, bound=bound)
        self.v = uniform_param(rng, (d, 1), bound)

    def __call__(self, ref: Tensor, query: Tensor) -> Tensor:
        """ref (B, n, d), query (B, d) -> logits (B, n)."""
        b, n, _ = ref.shape
        q = self.w_q(query).reshape(b, 1, -1)
        u = T.matmul(T.tanh(self.w_r(ref) + q), self.v)
        return u.reshape(b, n)


@dataclass
class EncoderOutputs:
    transformer: Tensor  # (B, n+1, d), row 0 is the start token
    graph: Tensor  # (B, n, d)


@dataclass
class StepDistribution:
    probs: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    visited: np.ndarray


@dataclass
class RolloutResult:
    tours: np.ndarray  # (B, n) int
    lengths: np.ndarray  # (B,)
    log_probs: Tensor  # (B,) summed log-probabilities of the chosen cities
    steps: list[StepDistribution] = field(default_factory=list)


class HPN(Module):
    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        d = cfg.hidden_dim
        bound = 1.0 / math.sqrt(d)
        rng = make_rng(seed)
        self.embed_t = Linear(3, d, rng, bound=bound)
        self.start_token = uniform_param(rng, (1, 1, d), bound)
        self.transformer = [TransformerLayer(d, cfg.heads, cfg.feedforward_dim, rng)
                            for _ in range(cfg.transformer_layers)]
        self.embed_g = Linear(3, d, rng, bound=bound)
        self.graph = [GraphLayer(d, rng) for _ in range(cfg.graph_layers)]
        self.embed_point = Linear(2, d, rng, bound=bound)
        self.placeholder = uniform_param(rng, (1, d), bound)
        self.lstm = LSTMCell(d, d, rng)
        self.dec1 = PointerAttention(d, rng)
        self.dec2 = PointerAttention(d, rng)
        if cfg.aggregator == "concat":
            self.agg = Linear(2, 1, rng, bound=1.0 / math.sqrt(2))

    def clone(self) -> HPN:
        return copy.deepcopy(self)

    # encoders

    def transformer_encode(self, features: np.ndarray) -> Tensor:
        x = self.embed_t(Tensor(features))
        b = x.shape[0]
        h = T.concat([self.start_token + np.zeros((b, 1, 1)), x], axis=1)
        for layer in self.transformer:
            h = layer(h)
        return h

    def graph_embed(self, features: np.ndarray) -> Tensor:
        x = self.embed_g(Tensor(features))
        for layer in self.graph:
            x = layer(x)
        return x

    def encode(self, coords: np.ndarray, ref: np.ndarray) -> EncoderOutputs:
        feats = feature_context(coords, ref)
        return EncoderOutputs(self.transformer_encode(feats), self.graph_embed(feats))

    def point_encode(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        return self.lstm(x, state)

    # decoder

    def pointer_logits(self, enc: EncoderOutputs, query: Tensor) -> tuple[Tensor, Tensor]:
        c = self.cfg.tanh_clip
        u1 = T.tanh(self.dec1(enc.transformer[:, 1:, :], query)) * c
        u2 = T.tanh(self.dec2(enc.graph, query)) * c
        return u1, u2

    def aggregate(self, u1: Tensor, u2: Tensor) -> Tensor:
        kind = self.cfg.aggregator
        if kind == "sum":
            return u1 + u2
        if kind == "max":
            return T.maximum(u1, u2)
        if kind == "mean":
            return (u1 + u2) * 0.5
        b, n = u1.shape
        pair = T.concat([u1.reshape(b, n, 1), u2.reshape(b, n, 1)], axis=2)
        return self.agg(pair).reshape(b, n)

    def decode_step(self, enc: EncoderOutputs, query: Tensor, visited: np.ndarray):
        """Returns (probs, u1, u2); visited cities get probability exactly 0."""
        if np.any(visited.all(axis=-1)):
            raise ValueError("decode_step: every city already visited")
        u1, u2 = self.pointer_logits(enc, query)
        probs = T.softmax_rows(self.aggregate(u1, u2), visited)
        return probs, u1, u2

    # rollout

    def rollout(self, coords: np.ndarray, mode: str = "greedy", rng: np.random.Generator | None = None,
                actions: np.ndarray | None = None, record_steps: bool = False) -> RolloutResult:
        """Decode a batch of instances.

        ``mode`` is ``"greedy"`` or ``"sample"``; ``actions`` (B, n) forces the
        chosen cities, which is how a fixed tour is re-scored.
        """
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 2:
            coords = coords[None]
        b, n, _ = coords.shape
        if b == 0:
            raise ValueError("empty batch")
        if mode not in ("greedy", "sample"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "sample" and rng is None and actions is None:
            raise ValueError("sample mode needs an rng")
        rows = np.arange(b)
        d = self.cfg.hidden_dim
        visited = np.zeros((b, n), dtype=bool)
        tours = np.zeros((b, n), dtype=np.int64)
        state = (Tensor(np.zeros((b, d))), Tensor(np.zeros((b, d))))
        x_in = self.placeholder + np.zeros((b, 1))
        ref = coords.mean(axis=1)
        log_probs = Tensor(np.zeros(b))
        steps = []
        enc = None
        for t in range(n):
            if enc is None or self.cfg.recompute_context:
                enc = self.encode(coords, ref)
            state = self.point_encode(x_in, state)
            probs, u1, u2 = self.decode_step(enc, state[0], visited)
            p = probs.data
            if record_steps:
                steps.append(StepDistribution(p.copy(), u1.data.copy(), u2.data.copy(), visited.copy()))
            if actions is not None:
                choice = np.asarray(actions)[:, t]
            elif mode == "greedy":
                choice = np.argmax(p, axis=1)
            else:
                choice = sample_from(p, rng)
            log_probs = log_probs + T.log(probs[rows, choice])
            visited[rows, choice] = True
            tours[:, t] = choice
            ref = coords[rows, choice]
            x_in = self.embed_point(Tensor(ref))
        return RolloutResult(tours, tour_lengths(coords, tours), log_probs, steps)


def sample_from(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row; probabilities below ``SAMPLE_FLOOR`` count as zero."""
    p = np.where(p < SAMPLE_FLOOR, 0.0, p)
    cum = np.cumsum(p, axis=1)
    u = rng.random(len(p))[:, None] * cum[:, -1:]
    return np.argmax(cum > u, axis=1)


def greedy_lengths(model: HPN, coords: np.ndarray, batch: int = 250) -> np.ndarray:
    """Greedy tour lengths in eval mode, without recording a graph."""
    was_training = model.training
    model.eval()
    out = []
    try:
        with T.no_grad():
            for i in range(0, len(coords), batch):
                out.append(model.rollout(coords[i:i + batch], "greedy").lengths)
    finally:
        model.train(was_training)
    return np.concatenate(out) if out else np.zeros(0)


def greedy_tours(model: HPN, coords: np.ndarray, batch: int = 250) -> np.ndarray:
    was_training = model.training
    model.eval()
    out = []
    try:
        with T.no_grad():
            for i in range(0, len(coords), batch):
                out.append(model.rollout(coords[i:i + batch], "greedy").tours)
    finally:
        model.train(was_training)
    return np.concatenate(out)
