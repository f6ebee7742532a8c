"""Confidence sets and a bootstrap test for the mean response ``mu(x0)``.

All sets are centered at ``mu_h(x0)`` and scaled by ``sqrt(t_h(x0) / n)``.
CLT critical values come from the estimated error covariance: a simulated
weighted chi-square quantile for the ball and ``sqrt(variance) * z`` for the
projection and evaluation intervals.  Bootstrap critical values are quantiles
of the residual-bootstrap draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtri

from fofrboot import rng as rngmod
from fofrboot.bootstrap import BootConfig, BootstrapDraws, bootstrap_quantile, run_residual_bootstrap
from fofrboot.errors import InvalidArgumentError
from fofrboot.fofr import error_cov, fit_from_fpca, residuals_of
from fofrboot.fpca import FpcaModel, fit_fpca, scaling_hat
from fofrboot.fungrid import Fn, FnSet, KernelOp, _check_grid, inner, interp_matrix, norm

Method = Literal["clt", "rb"]
EIG_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class ConfidenceBall:
    center: Fn
    radius: float
    level: float
    method: str

    def contains(self, y: Fn) -> bool:
        return norm(self.center - y) <= self.radius


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    target: str
    level: float
    method: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidArgumentError("interval lower bound exceeds upper bound")

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    B: int

    __test__ = False  # keep pytest from collecting this as a test class


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def _check_level(level):
    if not 0 < level < 1:
        raise InvalidArgumentError(f"level must lie in (0, 1), got {level!r}")


def weighted_chisq_quantile(sigmas, level: float = 0.95, n_draws: int = 10_000, seed: int = 0,
                            stream_keys: tuple = ()) -> float:
    """Simulated ``level`` quantile of ``sum_l sigma_l V_l`` with ``V_l ~ chi2(1)``.

    Uses the same order-statistic convention as :func:`bootstrap_quantile`.
    Draws come from ``stream(seed, CHISQ, *stream_keys)``.
    """
    s = np.asarray(sigmas, dtype=float).ravel()
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise InvalidArgumentError("weights must be finite and non-negative")
    if n_draws < 1000:
        raise InvalidArgumentError("use at least 1000 draws")
    _check_level(level)
    if s.size == 0 or not np.any(s > 0):
        return 0.0
    s = s[s > 0]
    rng = rngmod.stream(seed, rngmod.CHISQ, *stream_keys)
    z = rng.standard_normal((int(n_draws), s.size))
    return bootstrap_quantile((z**2) @ s, level)


def operator_eigenvalues(K: KernelOp) -> np.ndarray:
    """Non-increasing eigenvalues of a symmetric kernel operator, clipped at zero."""
    sw = np.sqrt(K.grid.weights)
    M = (K.kernel + K.kernel.T) / 2 * np.outer(sw, sw)
    ev = np.linalg.eigvalsh(M)[::-1]
    ev = np.clip(ev, 0.0, None)
    if ev.size == 0 or ev[0] == 0:
        return ev[:0]
    return ev[ev > EIG_CUTOFF * ev[0]]


class MeanResponseInference:
    """Confidence sets for ``mu(x0)`` from one sample, sharing a single FPCA.

    Parameters
    ----------
    X, Y : FnSet
        Regressor and response curves on one grid.
    x0 : Fn
        New regressor at which the mean response is targeted.
    fpca : FpcaModel, optional
        Precomputed FPCA of ``X``.
    """

    def __init__(self, X: FnSet, Y: FnSet, x0: Fn, fpca: FpcaModel | None = None):
        if X.n != Y.n or not X.grid.same_as(Y.grid):
            raise InvalidArgumentError("regressors and responses must share size and grid")
        _check_grid(X.grid, x0.grid)
        self.X, self.Y, self.x0 = X, Y, x0
        self.fpca = fit_fpca(X) if fpca is None else fpca
        self.n = X.n
        self._models = {}
        self._sigma = {}
        self._crit = {}

    # -- building blocks -------------------------------------------------
    def model(self, h: int):
        if h not in self._models:
            self._models[h] = fit_from_fpca(self.fpca, self.Y, h)
        return self._models[h]

    def center(self, h: int) -> Fn:
        return Fn(self.X.grid, self.model(h).predict_rows(self.x0.values)[0])

    def scaling(self, h: int) -> float:
        return scaling_hat(self.fpca, self.x0, h)

    def _unit(self, h: int) -> float:
        return math.sqrt(self.scaling(h) / self.n)

    def error_cov(self, k: int) -> KernelOp:
        if k not in self._sigma:
            res = residuals_of(self.model(k), self.X, self.Y, center=False)
            self._sigma[k] = error_cov(res)
        return self._sigma[k]

    def clt_critical_value(self, k: int, level: float, seed: int = 0, n_draws: int = 10_000,
                           stream_keys: tuple = ()) -> float:
        key = (k, level, seed, n_draws, stream_keys)
        if key not in self._crit:
            sig = operator_eigenvalues(self.error_cov(k))
            self._crit[key] = weighted_chisq_quantile(sig, level, n_draws, seed, stream_keys)
        return self._crit[key]

    def bootstrap(self, cfg: BootConfig, proj_fns: Sequence[Fn] = (), eval_ts: Sequence[float] = (),
                  stream_prefix: tuple = ()) -> BootstrapDraws:
        return run_residual_bootstrap(self.X, self.Y, self.x0, cfg, proj_fns, eval_ts,
                                      fpca=self.fpca, stream_prefix=stream_prefix)

    # -- confidence sets -------------------------------------------------
    def clt_ball(self, h: int, k: int, level: float = 0.95, seed: int = 0,
                 n_draws: int = 10_000, stream_keys: tuple = ()) -> ConfidenceBall:
        _check_level(level)
        c = self.clt_critical_value(k, level, seed, n_draws, stream_keys)
        return ConfidenceBall(self.center(h), math.sqrt(c) * self._unit(h), level, "CLT")

    def rb_ball(self, draws: BootstrapDraws, level: float = 0.95) -> ConfidenceBall:
        _check_level(level)
        h = draws.config.h
        c = bootstrap_quantile(draws.sq_norms, level)
        return ConfidenceBall(self.center(h), math.sqrt(c) * self._unit(h), level, "RB")

    def clt_proj_interval(self, x: Fn, h: int, k: int, level: float = 0.95) -> Interval:
        _check_level(level)
        sigma = self.error_cov(k)
        w = sigma.grid.weights
        var = float((w * x.values) @ sigma.kernel @ (w * x.values))
        half = math.sqrt(max(var, 0.0)) * normal_quantile(1 - (1 - level) / 2) * self._unit(h)
        mid = inner(self.center(h), x)
        return Interval(mid - half, mid + half, "projection", level, "CLT")

    def clt_eval_interval(self, t: float, h: int, k: int, level: float = 0.95) -> Interval:
        _check_level(level)
        _check_t(t)
        var = self.error_cov(k).diagonal_at(t)
        half = math.sqrt(max(var, 0.0)) * normal_quantile(1 - (1 - level) / 2) * self._unit(h)
        mid = _at(self.center(h), t)
        return Interval(mid - half, mid + half, f"evaluation({t:g})", level, "CLT")

    def rb_proj_interval(self, x: Fn, draws: BootstrapDraws, p: int = 0, level: float = 0.95) -> Interval:
        """Interval for ``<mu(x0), x>``; ``draws.projections[:, p]`` must belong to ``x``."""
        _check_level(level)
        h = draws.config.h
        c = bootstrap_quantile(np.abs(draws.projections[:, p]), level)
        half = c * self._unit(h)
        mid = inner(self.center(h), x)
        return Interval(mid - half, mid + half, "projection", level, "RB")

    def rb_eval_interval(self, draws: BootstrapDraws, q: int = 0, level: float = 0.95) -> Interval:
        _check_level(level)
        h = draws.config.h
        t = draws.eval_ts[q]
        c = bootstrap_quantile(np.abs(draws.evaluations[:, q]), level)
        half = c * self._unit(h)
        mid = _at(self.center(h), t)
        return Interval(mid - half, mid + half, f"evaluation({t:g})", level, "RB")

    def mean_equality_test(self, draws: BootstrapDraws) -> TestResult:
        """Bootstrap p-value for ``H0: mu(x0) = E[Y]``.

        The p-value is the fraction of draws with ``||T*||^2`` strictly above
        ``n ||mu_h(x0) - Ybar||^2 / t_h(x0)``.  A zero statistic (``Ybar`` at the
        center) cannot be evidence against the null and gets ``p = 1``.
        """
        h = draws.config.h
        t_hat = self.scaling(h)
        gap = norm(self.center(h) - self.Y.mean()) ** 2
        if gap == 0:
            stat = 0.0
        elif t_hat == 0:
            stat = math.inf
        else:
            stat = self.n * gap / t_hat
        B = draws.sq_norms.size
        p = 1.0 if stat == 0 else float(np.count_nonzero(draws.sq_norms > stat)) / B
        return TestResult(stat, p, B)


def _check_t(t):
    if not 0 <= t <= 1:
        raise InvalidArgumentError(f"evaluation point must lie in [0, 1], got {t!r}")


def _at(f: Fn, t: float) -> float:
    return float(f.values @ interp_matrix(f.grid, [t])[:, 0])


# -- functional surface -------------------------------------------------------

def clt_ball(X: FnSet, Y: FnSet, x0: Fn, h: int, k: int, level: float = 0.95, seed: int = 0,
             n_draws: int = 10_000) -> ConfidenceBall:
    """CLT confidence ball ``||mu_h(x0) - y|| <= sqrt(c) sqrt(t_h(x0)/n)``."""
    return MeanResponseInference(X, Y, x0).clt_ball(h, k, level, seed, n_draws)


def rb_ball(X: FnSet, Y: FnSet, x0: Fn, cfg: BootConfig, level: float = 0.95) -> ConfidenceBall:
    inf = MeanResponseInference(X, Y, x0)
    return inf.rb_ball(inf.bootstrap(cfg), level)


def proj_interval(X: FnSet, Y: FnSet, x0: Fn, x: Fn, method: Method = "rb", *, h: int | None = None,
                  k: int | None = None, cfg: BootConfig | None = None, level: float = 0.95) -> Interval:
    """Interval for ``<mu(x0), x>``.  ``method='clt'`` needs ``h`` and ``k``; ``'rb'`` needs ``cfg``."""
    inf = MeanResponseInference(X, Y, x0)
    if method == "clt":
        h, k = _clt_truncations(h, k, cfg)
        return inf.clt_proj_interval(x, h, k, level)
    if method == "rb":
        if cfg is None:
            raise InvalidArgumentError("bootstrap intervals need a BootConfig")
        return inf.rb_proj_interval(x, inf.bootstrap(cfg, proj_fns=[x]), 0, level)
    raise InvalidArgumentError(f"unknown method {method!r}")


def eval_interval(X: FnSet, Y: FnSet, x0: Fn, t: float, method: Method = "rb", *, h: int | None = None,
                  k: int | None = None, cfg: BootConfig | None = None, level: float = 0.95) -> Interval:
    """Interval for ``mu(x0)(t)``, reading curves between grid nodes linearly."""
    _check_t(t)
    inf = MeanResponseInference(X, Y, x0)
    if method == "clt":
        h, k = _clt_truncations(h, k, cfg)
        return inf.clt_eval_interval(t, h, k, level)
    if method == "rb":
        if cfg is None:
            raise InvalidArgumentError("bootstrap intervals need a BootConfig")
        return inf.rb_eval_interval(inf.bootstrap(cfg, eval_ts=[t]), 0, level)
    raise InvalidArgumentError(f"unknown method {method!r}")


def _clt_truncations(h, k, cfg):
    if cfg is not None:
        h = cfg.h if h is None else h
        k = cfg.k if k is None else k
    if h is None or k is None:
        raise InvalidArgumentError("CLT intervals need truncations h and k")
    return h, k


def mean_equality_test(X: FnSet, Y: FnSet, x0: Fn, cfg: BootConfig) -> TestResult:
    inf = MeanResponseInference(X, Y, x0)
    return inf.mean_equality_test(inf.bootstrap(cfg))
