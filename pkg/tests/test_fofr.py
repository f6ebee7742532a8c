import time

import numpy as np
import pytest

from fofrboot import rng as rngmod
from fofrboot.errors import InvalidArgumentError, TruncationTooLargeError
from fofrboot.fofr import (
    cv_errors,
    error_cov,
    fit_fofr,
    loocv_select,
    predict_mean,
    residuals_of,
    ResidualSet,
)
from fofrboot.fpca import fit_fpca
from fofrboot.fungrid import FnSet, KernelOp, basis_chebyshev_shifted, hs_norm, make_uniform_grid
from fofrboot.simgen import SpectrumSpec, ScoreLaw, eigenvalues_from_gaps, gen_fnset

from conftest import finite_rank_data

G = make_uniform_grid(101)


def noisy(seed=0, n=30):
    return finite_rank_data(n=n, J=4, noise=0.5, seed=seed)


class TestFit:
    def test_constant_response(self):
        X, _ = noisy()
        A = np.cos(G.points)
        Y = FnSet(G, np.tile(A, (X.n, 1)))
        m = fit_fofr(X, Y, 3)
        assert np.max(np.abs(m.slope_coefs)) < 1e-10
        np.testing.assert_allclose(m.intercept.values, A, atol=1e-10)

    @pytest.mark.parametrize("J", [1, 3, 5])
    def test_exact_recovery(self, J):
        X, Y = finite_rank_data(n=30, J=J)
        m = fit_fofr(X, Y, J)
        for i in range(X.n):
            pred = predict_mean(m, X[i]).values
            rel = np.sqrt((pred - Y.rows[i]) ** 2 @ G.weights) / np.sqrt(Y.rows[i] ** 2 @ G.weights)
            assert rel < 1e-8

    def test_two_points(self):
        rng = np.random.default_rng(1)
        X = FnSet(G, rng.standard_normal((2, G.m)))
        Y = FnSet(G, rng.standard_normal((2, G.m)))
        m = fit_fofr(X, Y, 1)
        assert m.fpca.rank == 1
        for i in range(2):
            np.testing.assert_allclose(predict_mean(m, X[i]).values, Y.rows[i], atol=1e-10)

    def test_intercept_identity(self):
        X, Y = noisy()
        m = fit_fofr(X, Y, 3)
        np.testing.assert_allclose(m.intercept.values, Y.mean().values - m.apply_slope(X.mean()).values,
                                   atol=1e-10)
        np.testing.assert_allclose(predict_mean(m, X.mean()).values, Y.mean().values, atol=1e-12)

    def test_affine_in_x(self):
        X, Y = noisy()
        m = fit_fofr(X, Y, 3)
        a, b = X[0], X[1]
        mid = predict_mean(m, a * 0.3 + b * 0.7).values
        np.testing.assert_allclose(mid, 0.3 * predict_mean(m, a).values + 0.7 * predict_mean(m, b).values,
                                   atol=1e-10)

    def test_annihilates_orthogonal(self):
        X, Y = noisy()
        m = fit_fofr(X, Y, 2)
        f = m.fpca.eigfns[3]
        assert np.max(np.abs(m.apply_slope(f).values)) < 1e-10

    def test_affine_equivariance(self):
        X, Y = noisy()
        c = np.sin(3 * G.points)
        m1 = fit_fofr(X, Y, 3)
        m2 = fit_fofr(X, FnSet(G, Y.rows + c), 3)
        np.testing.assert_allclose(m2.intercept.values - m1.intercept.values, c, atol=1e-10)
        np.testing.assert_allclose(m2.slope_coefs, m1.slope_coefs, atol=1e-10)

    def test_monotone_in_sample_error(self):
        X, Y = noisy(n=40)
        fp = fit_fpca(X)
        errs = []
        for h in range(1, fp.rank + 1):
            r = residuals_of(fit_fofr(X, Y, h, fpca=fp), X, Y, center=False).residuals.rows
            errs.append(np.mean(r**2 @ G.weights))
        assert np.all(np.diff(errs) <= 1e-12)

    def test_full_rank_normal_equation(self):
        X, Y = finite_rank_data(n=30, J=4)
        fp = fit_fpca(X)
        m = fit_fofr(X, Y, fp.rank, fpca=fp)
        w = G.weights
        Xc = X.rows - X.rows.mean(axis=0)
        Yc = Y.rows - Y.rows.mean(axis=0)
        delta = KernelOp(G, (Yc.T @ Xc) / X.n)
        gamma = (Xc.T @ Xc) / X.n
        Bk = m.slope_kernel().kernel
        bg = KernelOp(G, Bk @ (w[:, None] * gamma))
        assert hs_norm(delta - bg) < 1e-8

    def test_errors(self):
        X, Y = noisy()
        with pytest.raises(InvalidArgumentError):
            fit_fofr(X, FnSet(G, Y.rows[:-1]), 2)
        with pytest.raises(TruncationTooLargeError):
            fit_fofr(X, Y, 50)
        with pytest.raises(InvalidArgumentError):
            fit_fofr(X, FnSet(make_uniform_grid(51), Y.rows[:, ::2]), 2)


class TestResiduals:
    def test_exact_zero(self):
        X, Y = finite_rank_data(J=3)
        r = residuals_of(fit_fofr(X, Y, 3), X, Y).residuals.rows
        assert np.max(np.abs(r)) < 1e-8

    def test_centered(self):
        X, Y = noisy()
        r = residuals_of(fit_fofr(X, Y, 2), X, Y, center=True)
        assert r.centered and np.max(np.abs(r.residuals.rows.mean(axis=0))) < 1e-10

    def test_zero_slope_direct(self):
        rng = np.random.default_rng(3)
        X = FnSet(G, rng.standard_normal((25, G.m)))
        eps = rng.standard_normal((25, G.m))
        A = np.exp(-G.points)
        Y = FnSet(G, A + eps)
        m = fit_fofr(X, Y, 1)
        r = residuals_of(m, X, Y, center=True).residuals.rows
        # direct recomputation: eps - epsbar minus the rank-1 leakage
        s = m.fpca.scores[:, :1]
        leak = s @ ((s.T @ (eps - eps.mean(axis=0))) / (25 * m.fpca.eigvals[0]))
        np.testing.assert_allclose(r, eps - eps.mean(axis=0) - leak, atol=1e-10)


class TestErrorCov:
    def test_zero(self):
        res = ResidualSet(FnSet(G, np.zeros((5, G.m))), True, 1)
        assert np.all(error_cov(res).kernel == 0)

    def test_single(self):
        e = np.sin(G.points)
        rows = np.zeros((4, G.m))
        rows[2] = e
        K = error_cov(ResidualSet(FnSet(G, rows), False, 1)).kernel
        np.testing.assert_allclose(K, np.outer(e, e) / 4, atol=1e-15)

    def test_consistency(self):
        spec = SpectrumSpec(2.5, 20)
        ev = eigenvalues_from_gaps(spec)
        basis = basis_chebyshev_shifted(20, G)
        eps = gen_fnset(1000, ev, basis, ScoreLaw("none", "normal"), rngmod.stream(5, 0))
        sigma = KernelOp(G, (basis.funcs.T * ev) @ basis.funcs)
        est = error_cov(ResidualSet(eps, False, 0))
        assert hs_norm(est - sigma) <= 0.15 * hs_norm(sigma)


class TestLoocv:
    @pytest.mark.parametrize("J", [1, 2, 3, 4, 5])
    def test_exact_rank(self, J):
        X, Y = finite_rank_data(n=30, J=J)
        t = time.perf_counter()
        assert loocv_select(X, Y, 8) == J
        assert time.perf_counter() - t < 1.0

    def test_kmax1(self):
        X, Y = noisy()
        assert loocv_select(X, Y, 1) == 1

    def test_too_few(self):
        X, Y = noisy(n=30)
        with pytest.raises(InvalidArgumentError):
            loocv_select(FnSet(G, X.rows[:2]), FnSet(G, Y.rows[:2]), 1)

    def test_matches_explicit_refits(self):
        X, Y = noisy(n=12)
        errs = cv_errors(X, Y, 3)
        brute = np.zeros(3)
        for i in range(X.n):
            Xi, Yi = X.drop(i), Y.drop(i)
            for k in range(1, 4):
                pred = predict_mean(fit_fofr(Xi, Yi, k), X[i]).values
                brute[k - 1] += (pred - Y.rows[i]) ** 2 @ G.weights
        np.testing.assert_allclose(errs, brute / X.n, rtol=1e-10)

    def test_pure_noise_picks_small_k(self):
        rng = np.random.default_rng(0)
        small = 0
        runs = 200
        for _ in range(runs):
            X = FnSet(G, rng.standard_normal((30, 6)) @ basis_chebyshev_shifted(6, G).funcs)
            Y = FnSet(G, rng.standard_normal((30, 4)) @ basis_chebyshev_shifted(4, G).funcs)
            small += loocv_select(X, Y, 5) <= 2
        assert small / runs >= 0.8
