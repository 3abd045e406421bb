"""REINFORCE with a greedy-rollout baseline and a paired t-test refresh rule."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import tensor as T
from .checkpoint import load_checkpoint, save_checkpoint
from .model import HPN, ModelConfig, greedy_lengths
from .optim import Adam, AdamState
from .tensor import Tensor
from .tsp import make_rng

log = logging.getLogger(__name__)

EVAL_SEED_TAG = 0xE7A1
METRIC_FIELDS = ("epoch", "mean_sampled_len", "mean_greedy_len", "baseline_refreshed", "lr")


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 1
    steps_per_epoch: int = 2500
    batch_size: int = 512
    alpha: float = 0.05
    learning_rate: float = 1e-4
    lr_decay: float = 1.0
    n_cities: int = 50
    model: ModelConfig = field(default_factory=ModelConfig)
    seed: int = 0
    eval_size: int = 1000
    eval_n_cities: int | None = None

    def validate(self) -> TrainConfig:
        errors = []
        if not 0 < self.alpha < 1:
            errors.append(f"alpha: must lie in (0, 1), got {self.alpha}")
        if self.batch_size < 2:
            errors.append(f"batch_size: must be >= 2 (the paired t-test needs variance), got {self.batch_size}")
        if self.eval_size < 2:
            errors.append(f"eval_size: must be >= 2 for the paired t-test, got {self.eval_size}")
        for name in ("steps_per_epoch", "n_cities"):
            if getattr(self, name) < 1:
                errors.append(f"{name}: must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            errors.append(f"epochs: must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            errors.append(f"learning_rate: must be positive, got {self.learning_rate}")
        if self.lr_decay <= 0:
            errors.append(f"lr_decay: must be positive, got {self.lr_decay}")
        if self.eval_n_cities is not None and self.eval_n_cities < 1:
            errors.append(f"eval_n_cities: must be positive, got {self.eval_n_cities}")
        if errors:
            raise ConfigError("; ".join(errors))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> TrainConfig:
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown fields: {', '.join(unknown)}")
        model_raw = raw.pop("model", {}) or {}
        try:
            model = ModelConfig(**model_raw)
        except TypeError as exc:
            raise ConfigError(f"model: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None
        return cls(model=model, **raw).validate()


REGIMES: dict[str, dict] = {
    # reference hyperparameters, TSP50
    "small": dict(epochs=100, steps_per_epoch=2500, batch_size=512, learning_rate=1e-4,
                  n_cities=50, model=dict(tanh_clip=10.0)),
    # feature-extractor regime: validated on TSP500
    "large": dict(epochs=10, steps_per_epoch=2500, batch_size=512, learning_rate=1e-3,
                  lr_decay=0.96, n_cities=50, eval_n_cities=500,
                  model=dict(tanh_clip=100.0)),
    # desk scale
    "smoke": dict(epochs=5, steps_per_epoch=100, batch_size=64, learning_rate=1e-3,
                  n_cities=10, eval_size=1000,
                  model=dict(hidden_dim=32, transformer_layers=2, graph_layers=3,
                             feedforward_dim=64, heads=4, tanh_clip=10.0)),
}


def regime(name: str, **overrides) -> TrainConfig:
    if name not in REGIMES:
        raise ConfigError(f"unknown regime {name!r}; choose from {sorted(REGIMES)}")
    raw = {**REGIMES[name], **overrides}
    return TrainConfig.from_dict(raw)


def paired_t_test_one_sided(a, b) -> float:
    """p-value for H1: mean(a - b) < 0 (``a`` better than ``b``).

    Zero-variance differences: all zero or constant positive -> 1,
    constant negative -> 0.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    diff = a - b
    sd = diff.std(ddof=1)
    mu = diff.mean()
    if sd == 0:
        return 0.0 if mu < 0 else 1.0
    t_stat = mu / (sd / np.sqrt(len(diff)))
    return float(stats.t.cdf(t_stat, df=len(diff) - 1))


def surrogate_loss(log_probs: Tensor, advantage: np.ndarray) -> Tensor:
    """mean_i (L(pi_i) - b(s_i)) * log p(pi_i); its gradient is the REINFORCE estimate."""
    return (log_probs * advantage).mean()


@dataclass
class StepStats:
    mean_advantage: float
    mean_sampled_len: float
    mean_baseline_len: float


def train_step(model: HPN, baseline: HPN, optimizer: Adam, coords: np.ndarray,
               rng: np.random.Generator, candidate: str = "sample") -> StepStats:
    """One policy-gradient update on the batch ``coords``.

    ``candidate="greedy"`` decodes the trained policy greedily in eval mode,
    which makes ``model == baseline`` a zero-advantage case.
    """
    if candidate == "sample":
        model.train()
        res = model.rollout(coords, "sample", rng)
    elif candidate == "greedy":
        model.eval()
        res = model.rollout(coords, "greedy")
    else:
        raise ValueError(f"unknown candidate mode {candidate!r}")
    baseline.eval()
    with T.no_grad():
        bl = baseline.rollout(coords, "greedy")
    advantage = res.lengths - bl.lengths
    loss = surrogate_loss(res.log_probs, advantage)
    optimizer.zero_grad()
    loss.backward()
    for p in optimizer.params:
        if p.grad is None:
            p.grad = np.zeros(p.shape)
    optimizer.step()
    model.train()
    return StepStats(float(advantage.mean()), float(res.lengths.mean()), float(bl.lengths.mean()))


@dataclass
class EpochMetrics:
    epoch: int
    mean_sampled_len: float
    mean_greedy_len: float
    baseline_refreshed: bool
    lr: float
    p_value: float = float("nan")
    seconds: float = 0.0

    def row(self) -> list:
        return [self.epoch, repr(self.mean_sampled_len), repr(self.mean_greedy_len),
                int(self.baseline_refreshed), repr(self.lr)]


@dataclass
class TrainState:
    cfg: TrainConfig
    model: HPN
    baseline: HPN
    optimizer: Adam
    epochs_done: int = 0
    metrics: list[EpochMetrics] = field(default_factory=list)

    @classmethod
    def fresh(cls, cfg: TrainConfig) -> TrainState:
        cfg.validate()
        model = HPN(cfg.model, seed=cfg.seed)
        return cls(cfg, model, model.clone(), Adam(model.parameters(), lr=cfg.learning_rate))

    def save(self, path) -> None:
        arrays = {f"model/{k}": v for k, v in self.model.state_dict().items()}
        arrays.update({f"baseline/{k}": v for k, v in self.baseline.state_dict().items()})
        names = [name for name, _ in self.model.named_parameters()]
        steps = {}
        for name, s in zip(names, self.optimizer.states):
            arrays[f"adam_m/{name}"] = s.m
            arrays[f"adam_v/{name}"] = s.v
            steps[name] = s.step
        meta = {"config": self.cfg.to_dict(), "epochs_done": self.epochs_done,
                "adam_steps": steps, "lr": self.optimizer.lr}
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path) -> TrainState:
        arrays, meta = load_checkpoint(path)
        cfg = TrainConfig.from_dict(meta["config"])
        state = cls.fresh(cfg)
        state.model.load_state_dict(_group(arrays, "model/"))
        state.baseline.load_state_dict(_group(arrays, "baseline/"))
        names = [name for name, _ in state.model.named_parameters()]
        state.optimizer.states = [
            AdamState(arrays[f"adam_m/{n}"].copy(), arrays[f"adam_v/{n}"].copy(), step=meta["adam_steps"][n])
            for n in names]
        state.optimizer.lr = meta["lr"]
        state.epochs_done = meta["epochs_done"]
        return state


def _group(arrays: dict, prefix: str) -> dict:
    return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}


def load_model(path) -> HPN:
    """Trained policy from a training checkpoint."""
    arrays, meta = load_checkpoint(path)
    model = HPN(ModelConfig(**meta["config"]["model"]))
    model.load_state_dict(_group(arrays, "model/"))
    return model.eval()


def eval_coords(cfg: TrainConfig) -> np.ndarray:
    n = cfg.eval_n_cities or cfg.n_cities
    return make_rng((cfg.seed, EVAL_SEED_TAG)).random((cfg.eval_size, n, 2))


def train(cfg: TrainConfig | None = None, state: TrainState | None = None,
          on_epoch: Callable[[TrainState, EpochMetrics], None] | None = None) -> TrainState:
    """Run (or resume) training; returns the final state with per-epoch metrics."""
    if state is None:
        state = TrainState.fresh(cfg)
    cfg = state.cfg.validate()
    held_out = eval_coords(cfg)
    baseline_lens = greedy_lengths(state.baseline, held_out) if cfg.epochs > state.epochs_done else None
    for epoch in range(state.epochs_done, cfg.epochs):
        t0 = time.perf_counter()
        lr = cfg.learning_rate * cfg.lr_decay ** epoch
        state.optimizer.lr = lr
        rng = make_rng((cfg.seed, epoch))
        sampled = []
        for _ in range(cfg.steps_per_epoch):
            coords = rng.random((cfg.batch_size, cfg.n_cities, 2))
            sampled.append(train_step(state.model, state.baseline, state.optimizer, coords, rng).mean_sampled_len)
        cand = greedy_lengths(state.model, held_out)
        p = paired_t_test_one_sided(cand, baseline_lens)
        refreshed = p < cfg.alpha
        if refreshed:
            state.baseline.load_state_dict(state.model.state_dict())
            baseline_lens = cand
        m = EpochMetrics(epoch, float(np.mean(sampled)), float(cand.mean()), refreshed, lr, p,
                         time.perf_counter() - t0)
        state.metrics.append(m)
        state.epochs_done = epoch + 1
        log.info("epoch %d sampled %.4f greedy %.4f p=%.3g refreshed=%s (%.1fs)",
                 epoch, m.mean_sampled_len, m.mean_greedy_len, p, refreshed, m.seconds)
        if on_epoch is not None:
            on_epoch(state, m)
    return state


def append_metrics(path, m: EpochMetrics) -> None:
    path = Path(path)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(METRIC_FIELDS)
        w.writerow(m.row())
