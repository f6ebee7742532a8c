import math
from contextlib import nullcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fofrboot.bootstrap import (
    BootConfig,
    ConditionRWarning,
    bootstrap_quantile,
    resample_indices,
    run_residual_bootstrap,
)
from fofrboot.errors import InvalidArgumentError, TruncationTooLargeError
from fofrboot.fofr import fit_fofr, predict_mean, residuals_of
from fofrboot.fpca import scaling_hat
from fofrboot.fungrid import Fn, FnSet, inner, make_uniform_grid

from conftest import finite_rank_data

G = make_uniform_grid(101)


def data(seed=0, n=30):
    X, Y = finite_rank_data(n=n, J=5, noise=0.4, seed=seed)
    x0 = Fn(G, X.rows[:3].mean(axis=0) + 0.2 * np.sin(np.pi * G.points))
    return X, Y, x0


class TestQuantile:
    def test_index(self):
        assert bootstrap_quantile(np.arange(1, 101), 0.95) == 96

    def test_single(self):
        for lv in (0.01, 0.5, 0.99):
            assert bootstrap_quantile([4.2], lv) == 4.2

    def test_constant(self):
        assert bootstrap_quantile(np.full(50, 2.0), 0.9) == 2.0

    def test_bad_level(self):
        with pytest.raises(InvalidArgumentError):
            bootstrap_quantile([1, 2], 1.0)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(0.01, 0.98))
    @settings(max_examples=50, deadline=None)
    def test_monotone(self, xs, lv):
        assert bootstrap_quantile(xs, lv) <= bootstrap_quantile(xs, min(lv + 0.01, 0.99))


class TestEngine:
    def test_zero_residuals(self):
        X, Y = finite_rank_data(n=20, J=3)
        x0 = X[0] * 0.5
        d = run_residual_bootstrap(X, Y, x0, BootConfig(3, 3, 3, B=50), [G.constant()], [0.3])
        assert np.max(np.abs(d.sq_norms)) < 1e-20
        assert np.max(np.abs(d.projections)) < 1e-10
        assert np.max(np.abs(d.evaluations)) < 1e-10

    def test_deterministic(self):
        X, Y, x0 = data()
        a = run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 3, B=1, seed=9))
        b = run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 3, B=1, seed=9))
        assert a.sq_norms.tobytes() == b.sq_norms.tobytes()

    def test_workers(self):
        X, Y, x0 = data()
        args = dict(proj_fns=[G.constant()], eval_ts=[0.5, 0.9])
        a = run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 3, B=350, seed=4, workers=1), **args)
        b = run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 3, B=350, seed=4, workers=4), **args)
        for name in ("sq_norms", "projections", "evaluations"):
            assert getattr(a, name).tobytes() == getattr(b, name).tobytes()

    @pytest.mark.parametrize("k,g,h", [(2, 2, 2), (2, 3, 4), (4, 2, 3), (3, 3, 5)])
    def test_brute_force_refit(self, k, g, h):
        """Refitting the regression on every bootstrap sample matches the
        linear-combination shortcut."""
        X, Y, x0 = data(seed=1)
        x = G.fn(lambda t: t**2)
        B = 15
        cfg = BootConfig(k, g, h, B=B, seed=2)
        with pytest.warns(ConditionRWarning) if h < g else nullcontext():
            d = run_residual_bootstrap(X, Y, x0, cfg, [x], [0.37])
        res = residuals_of(fit_fofr(X, Y, k), X, Y, center=True).residuals.rows
        mg = fit_fofr(X, Y, g)
        fitted = np.stack([predict_mean(mg, X[i]).values for i in range(X.n)])
        mu_g = predict_mean(mg, x0).values
        t_hat = scaling_hat(mg.fpca, x0, h)
        for b in range(B):
            idx = resample_indices(2, b, X.n)
            Ystar = FnSet(G, fitted + res[idx])
            mu_star = predict_mean(fit_fofr(X, Ystar, h), x0).values
            T = math.sqrt(X.n / t_hat) * (mu_star - mu_g)
            assert d.sq_norms[b] == pytest.approx(T**2 @ G.weights, rel=1e-9)
            assert d.projections[b, 0] == pytest.approx(inner(Fn(G, T), x), rel=1e-9, abs=1e-12)
            assert d.evaluations[b, 0] == pytest.approx(Fn(G, T).at(0.37), rel=1e-9, abs=1e-12)

    def test_conditional_centering(self):
        X, Y, x0 = data(seed=2)
        k = g = 3
        res = residuals_of(fit_fofr(X, Y, k), X, Y, center=True).residuals.rows
        mg = fit_fofr(X, Y, g)
        fitted = mg.predict_rows(X.rows)
        B = 5000
        acc = np.zeros_like(fitted)
        acc2 = np.zeros_like(fitted)
        for b in range(B):
            ystar = fitted + res[resample_indices(0, b, X.n)]
            acc += ystar
            acc2 += ystar**2
        mean = acc / B
        sd = np.sqrt(np.maximum(acc2 / B - mean**2, 0))
        assert np.all(np.abs(mean - fitted) <= 3 * sd / math.sqrt(B) + 1e-12)

    def test_scaling_invariance(self):
        X, Y, x0 = data(seed=3)
        k = 3
        m = fit_fofr(X, Y, k)
        fitted = m.predict_rows(X.rows)
        c = 2.5
        Yc = FnSet(G, fitted + c * (Y.rows - fitted))
        cfg = BootConfig(k, k, k, B=200, seed=1)
        a = run_residual_bootstrap(X, Y, x0, cfg)
        b = run_residual_bootstrap(X, Yc, x0, cfg)
        np.testing.assert_allclose(np.sqrt(b.sq_norms), c * np.sqrt(a.sq_norms), rtol=1e-9)

    def test_errors(self):
        X, Y, x0 = data()
        with pytest.raises(TruncationTooLargeError):
            run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 99, B=5))
        with pytest.raises(InvalidArgumentError):
            run_residual_bootstrap(X, Y, x0, BootConfig(2, 2, 2, B=5), eval_ts=[1.2])

    def test_config(self):
        with pytest.raises(InvalidArgumentError):
            BootConfig(0, 1, 1)
        with pytest.warns(ConditionRWarning):
            assert BootConfig(3, 3, 2).ratio_violated

