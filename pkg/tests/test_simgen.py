import numpy as np
import pytest
from scipy.special import zeta

from fofrboot import rng as rngmod
from fofrboot.errors import InvalidArgumentError
from fofrboot.fofr import fit_fofr
from fofrboot.fpca import fit_fpca
from fofrboot.fungrid import Fn, apply_op, basis_trig, hs_norm, inner, make_uniform_grid
from fofrboot.simgen import (
    Scenario,
    ScoreLaw,
    SlopeSpec,
    SpectrumSpec,
    eigenvalues_from_gaps,
    gen_dataset,
    gen_fnset,
    make_slope,
    prepare,
    slope_coefficients,
    zeta_tail,
)

G = make_uniform_grid(101)


class TestSpectrum:
    @pytest.mark.parametrize("a,ref", [(2.5, 2.68298), (5.0, 2.07386)])
    def test_gamma1(self, a, ref):
        g1 = eigenvalues_from_gaps(SpectrumSpec(a, 20))[0]
        assert abs(g1 - ref) < 1e-3
        assert abs(g1 - 2 * zeta(a)) < 1e-10

    def test_tail_against_hurwitz(self):
        for a in (1.5, 2.5, 5.0):
            for j in (1, 7, 20):
                assert abs(zeta_tail(a, j) - zeta(a, j)) < 1e-10

    def test_gaps(self):
        ev = eigenvalues_from_gaps(SpectrumSpec(2.5, 20))
        j = np.arange(1, 20)
        np.testing.assert_allclose(ev[:-1] - ev[1:], 2 * j**-2.5, atol=1e-10)
        assert np.all(ev > 0) and np.all(np.diff(ev) < 0)

    @pytest.mark.parametrize("a", [1.0, 0.5])
    def test_bad_a(self, a):
        with pytest.raises(InvalidArgumentError):
            SpectrumSpec(a, 5)


class TestScores:
    ev = eigenvalues_from_gaps(SpectrumSpec(2.5, 20))
    basis = basis_trig(20, make_uniform_grid(101))

    def test_degenerate_law(self):
        X = gen_fnset(4, self.ev, self.basis, ScoreLaw("constant", "constant"), rngmod.stream(0))
        target = np.sqrt(self.ev) @ self.basis.funcs
        np.testing.assert_allclose(X.rows, np.tile(target, (4, 1)), atol=1e-12)

    @pytest.mark.parametrize("latent", ["exp", "normal"])
    def test_uncorrelated(self, latent):
        xi = ScoreLaw(latent, "normal").draw(5000, 6, rngmod.stream(1))
        cov = np.cov(xi, rowvar=False)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) < 0.1
        # Var(xi^2 W^2) is 26 under Exp and 8 under Normal
        kurt = 9 if latent == "exp" else 3
        sd = np.sqrt((3 * kurt - 1) / 5000)
        assert np.max(np.abs(np.diag(cov) - 1)) < 4 * sd

    def test_dependence(self):
        xi = ScoreLaw("exp", "normal").draw(5000, 20, rngmod.stream(2))
        assert np.var((xi**2).mean(axis=1)) > 0.5
        assert np.corrcoef(xi[:, 0] ** 2, xi[:, 1] ** 2)[0, 1] > 0.2
        indep = ScoreLaw("none", "normal").draw(5000, 20, rngmod.stream(2))
        assert abs(np.corrcoef(indep[:, 0] ** 2, indep[:, 1] ** 2)[0, 1]) < 0.1

    def test_short_basis(self):
        with pytest.raises(InvalidArgumentError):
            gen_fnset(3, self.ev, basis_trig(4, G), ScoreLaw(), rngmod.stream(0))

    def test_leading_eigenvalues(self):
        X, _, _ = gen_dataset(Scenario(n=2000, x_law=ScoreLaw("normal", "normal")), rngmod.stream(3))
        est = fit_fpca(X).eigvals[:3]
        np.testing.assert_allclose(est, self.ev[:3], rtol=0.2)


class TestSlope:
    trig = basis_trig(20, G)

    def test_exp(self):
        B = make_slope(SlopeSpec("exp"), self.trig)
        assert abs(hs_norm(B) - (1 - np.exp(-2)) / 2) < 1e-3
        e = np.exp(-G.points)
        rng = np.random.default_rng(0)
        for _ in range(3):
            out = apply_op(B, Fn(G, rng.standard_normal(G.m))).values
            np.testing.assert_allclose(out / e, (out / e)[0], rtol=1e-12)

    def test_diag(self):
        spec = SlopeSpec("diag")
        B = make_slope(spec, self.trig)
        d = slope_coefficients(spec)["diag"]
        for j in (0, 3, 11):
            out = apply_op(B, self.trig[j]).values
            assert abs(abs(d[j]) - 2 * (j + 1) ** -2.0) < 1e-15
            np.testing.assert_allclose(out, d[j] * self.trig.funcs[j], atol=1e-8)

    def test_prod(self):
        spec = SlopeSpec("prod")
        B = make_slope(spec, self.trig)
        c = slope_coefficients(spec)
        u = Fn(G, c["beta1"] @ self.trig.funcs)
        v = c["beta2"] @ self.trig.funcs
        j = np.arange(1, 21)
        np.testing.assert_allclose(np.abs(c["beta1"]), 3 * j**-1.5)
        np.testing.assert_allclose(np.abs(c["beta2"]), j**-2.5)
        z = G.fn(lambda t: t**2 - 0.3)
        np.testing.assert_allclose(apply_op(B, z).values, inner(z, u) * v, atol=1e-10)

    def test_signs_frozen(self):
        a = make_slope(SlopeSpec("prod", sign_seed=4), self.trig)
        b = make_slope(SlopeSpec("prod", sign_seed=4), self.trig)
        c = make_slope(SlopeSpec("prod", sign_seed=5), self.trig)
        assert np.array_equal(a.kernel, b.kernel)
        assert not np.array_equal(a.kernel, c.kernel)


class TestDataset:
    def test_truth(self):
        sc = Scenario(n=30)
        X, Y, truth = gen_dataset(sc, rngmod.stream(0, 0, 1))
        np.testing.assert_allclose(truth.mu_x0.values, apply_op(truth.slope, truth.x0).values, atol=1e-12)
        assert X.n == Y.n == 30
        assert np.all(truth.intercept.values == 0)

    def test_zero_slope(self):
        X, Y, truth = gen_dataset(Scenario(n=20, slope=SlopeSpec("zero")), rngmod.stream(1))
        assert np.all(truth.mu_x0.values == 0)
        # Y holds the errors only, so it lies in the span of the error basis
        eb = prepare(Scenario(n=20)).eps_basis.funcs
        coef = (Y.rows * G.weights) @ eb.T
        np.testing.assert_allclose(coef @ eb, Y.rows, atol=1e-10)

    def test_noiseless_recovery(self):
        sc = Scenario(n=60, eps_scale=0.0, spectrum=SpectrumSpec(2.5, 4))
        X, Y, truth = gen_dataset(sc, rngmod.stream(2))
        d = prepare(sc)
        w = d.grid.weights
        np.testing.assert_allclose(Y.rows, (X.rows * w) @ d.slope.kernel.T, atol=1e-14)
        model = fit_fofr(X, Y, 4)
        # B restricted to the span of X is recovered exactly
        pred = model.predict_rows(truth.x0.values[None, :])[0]
        np.testing.assert_allclose(pred, truth.mu_x0.values, atol=1e-8)

    def test_same_truth_across_replications(self):
        sc = Scenario(n=10)
        t1 = gen_dataset(sc, rngmod.stream(0, 0, 1))[2]
        t2 = gen_dataset(sc, rngmod.stream(0, 0, 2))[2]
        assert np.array_equal(t1.slope.kernel, t2.slope.kernel)
        assert not np.array_equal(t1.x0.values, t2.x0.values)

    def test_fixed_x0(self):
        vals = tuple(np.linspace(0, 1, 101))
        X, Y, truth = gen_dataset(Scenario(n=5, x0_rule="fixed", x0_fixed=vals), rngmod.stream(0))
        np.testing.assert_array_equal(truth.x0.values, vals)
        with pytest.raises(InvalidArgumentError):
            Scenario(x0_rule="fixed")

    def test_bad_basis(self):
        with pytest.raises(InvalidArgumentError):
            Scenario(eps_basis="legendre")
