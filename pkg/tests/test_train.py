import math

import numpy as np
import pytest
from scipy import integrate

from hpntsp import tensor as T
from hpntsp.model import HPN, ModelConfig
from hpntsp.optim import Adam
from hpntsp.train import (ConfigError, TrainConfig, TrainState, append_metrics, paired_t_test_one_sided,
                          regime, surrogate_loss, train, train_step)

from helpers import rel_error

TINY_MODEL = dict(hidden_dim=8, transformer_layers=1, graph_layers=1, feedforward_dim=16, heads=2)


def tiny_cfg(**kw) -> TrainConfig:
    base = dict(epochs=2, steps_per_epoch=3, batch_size=4, n_cities=5, eval_size=16,
                learning_rate=1e-3, model=TINY_MODEL, seed=3)
    return TrainConfig.from_dict({**base, **kw})


def t_cdf_by_quadrature(t: float, df: int) -> float:
    """Student-t CDF from the density, integrated numerically."""
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    dens = lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2)  # noqa: E731
    if t <= 0:
        return integrate.quad(dens, -np.inf, t, epsabs=1e-13, epsrel=1e-12)[0]
    return 0.5 + integrate.quad(dens, 0, t, epsabs=1e-13, epsrel=1e-12)[0]


class TestPairedTTest:
    def test_identical_samples(self):
        a = [1.0, 2.0, 3.0]
        assert paired_t_test_one_sided(a, a) == 1.0

    def test_constant_improvement(self):
        assert paired_t_test_one_sided([0, 1, 2, 3], [1, 2, 3, 4]) == 0.0

    def test_constant_worsening(self):
        assert paired_t_test_one_sided([2, 3], [1, 2]) == 1.0

    def test_against_quadrature(self):
        diffs = np.array([-1.0, -0.5, -1.5, -0.8, -1.2])
        t_stat = diffs.mean() / (diffs.std(ddof=1) / math.sqrt(5))
        expected = t_cdf_by_quadrature(t_stat, 4)
        assert paired_t_test_one_sided(diffs, np.zeros(5)) == pytest.approx(expected, abs=1e-6)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            paired_t_test_one_sided([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_t_test_one_sided([1.0, 2.0], [2.0])


class TestConfig:
    def test_batch_of_one_rejected(self):
        with pytest.raises(ConfigError, match="batch_size.*t-test"):
            TrainConfig(batch_size=1).validate()

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ConfigError, match="alpha"):
            TrainConfig(alpha=alpha).validate()

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="bogus"):
            TrainConfig.from_dict({"bogus": 1})

    def test_bad_model_field(self):
        with pytest.raises(ConfigError, match="model"):
            TrainConfig.from_dict({"model": {"heads": 3, "hidden_dim": 8}})

    def test_regimes(self):
        small, large, smoke = regime("small"), regime("large"), regime("smoke")
        assert (small.learning_rate, small.batch_size, small.steps_per_epoch) == (1e-4, 512, 2500)
        assert (small.model.tanh_clip, small.model.transformer_layers, small.model.graph_layers,
                small.model.feedforward_dim) == (10.0, 6, 3, 512)
        assert (large.learning_rate, large.lr_decay, large.model.tanh_clip, large.epochs,
                large.eval_n_cities) == (1e-3, 0.96, 100.0, 10, 500)
        assert (smoke.n_cities, smoke.batch_size, smoke.model.hidden_dim) == (10, 64, 32)

    def test_round_trip(self):
        cfg = regime("smoke", seed=5)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_surrogate_gradient_matches_finite_differences():
    model = HPN(ModelConfig(**TINY_MODEL), seed=1).train()
    rng = np.random.default_rng(2)
    coords = rng.random((3, 4, 2))
    tours = model.rollout(coords, "sample", rng).tours
    adv = np.array([0.4, -0.9, 0.15])

    def loss(record):
        with (T.enable_grad() if record else T.no_grad()):
            return surrogate_loss(model.rollout(coords, actions=tours).log_probs, adv)

    model.zero_grad()
    loss(True).backward()
    pick = np.random.default_rng(3)
    for name, p in model.named_parameters():
        flat = p.data.reshape(-1)
        idx = pick.choice(flat.size, size=min(2, flat.size), replace=False)
        numeric = []
        for i in idx:
            old = flat[i]
            flat[i] = old + 1e-5
            fp = loss(False).item()
            flat[i] = old - 1e-5
            fm = loss(False).item()
            flat[i] = old
            numeric.append((fp - fm) / 2e-5)
        assert rel_error(p.grad.reshape(-1)[idx], numeric, floor=1e-6) < 1e-3, name


class TestTrainStep:
    def test_zero_advantage_leaves_params_bit_identical(self):
        model = HPN(ModelConfig(**TINY_MODEL), seed=4)
        baseline = model.clone()
        before = model.state_dict()
        opt = Adam(model.parameters(), lr=1e-2)
        coords = np.random.default_rng(0).random((6, 7, 2))
        stats = train_step(model, baseline, opt, coords, np.random.default_rng(1), candidate="greedy")
        assert stats.mean_advantage == 0.0
        for name, value in model.state_dict().items():
            assert np.array_equal(value, before[name]), name

    def test_baseline_untouched_and_gradient_free(self):
        model = HPN(ModelConfig(**TINY_MODEL), seed=5)
        baseline = model.clone()
        frozen = baseline.state_dict()
        opt = Adam(model.parameters(), lr=1e-2)
        coords = np.random.default_rng(2).random((6, 7, 2))
        train_step(model, baseline, opt, coords, np.random.default_rng(3))
        assert any(not np.array_equal(v, frozen[k]) for k, v in model.state_dict().items())
        for k, v in baseline.state_dict().items():
            assert np.array_equal(v, frozen[k]), k
        assert all(p.grad is None for p in baseline.parameters())
        with T.no_grad():
            res = baseline.eval().rollout(coords, "greedy")
        assert T.graph_size(res.log_probs) == 0
        assert T.graph_size(model.rollout(coords, "greedy").log_probs) > 0


class TestTrain:
    def test_zero_epochs(self):
        cfg = tiny_cfg(epochs=0)
        state = TrainState.fresh(cfg)
        before = state.model.state_dict()
        out = train(state=state)
        assert out.metrics == []
        for k, v in out.model.state_dict().items():
            assert np.array_equal(v, before[k])

    def test_deterministic(self):
        a = train(tiny_cfg())
        b = train(tiny_cfg())
        assert [m.row() for m in a.metrics] == [m.row() for m in b.metrics]

    def test_refresh_rule(self):
        out = train(tiny_cfg(epochs=3, alpha=0.9999))
        for m in out.metrics:
            assert m.baseline_refreshed == (m.p_value < 0.9999)
        last_refresh = max((m.epoch for m in out.metrics if m.baseline_refreshed), default=None)
        if last_refresh == out.metrics[-1].epoch:
            for k, v in out.baseline.state_dict().items():
                assert np.array_equal(v, out.model.state_dict()[k])

    def test_lr_decay(self):
        out = train(tiny_cfg(epochs=3, lr_decay=0.5))
        assert [m.lr for m in out.metrics] == [1e-3, 5e-4, 2.5e-4]

    def test_resume_matches_uninterrupted(self, tmp_path):
        full = train(tiny_cfg(epochs=2))
        half = train(tiny_cfg(epochs=1))
        half.save(tmp_path / "c.npz")
        resumed = TrainState.load(tmp_path / "c.npz")
        resumed.cfg.epochs = 2
        resumed = train(state=resumed)
        assert resumed.metrics[-1].row() == full.metrics[-1].row()
        for k, v in resumed.model.state_dict().items():
            assert np.array_equal(v, full.model.state_dict()[k]), k

    def test_metrics_csv(self, tmp_path):
        out = train(tiny_cfg(), on_epoch=lambda s, m: append_metrics(tmp_path / "m.csv", m))
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "epoch,mean_sampled_len,mean_greedy_len,baseline_refreshed,lr"
        assert len(lines) == 1 + len(out.metrics)
