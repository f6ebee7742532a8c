"""Monte Carlo studies: coverage of the six confidence sets, and the effect of
the data-driven scaling on the law of the projected statistic.

Every replication draws its own data from ``stream(seed, DATA, n, r)``, so a
study gives bit-identical results however many worker processes share it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from fofrboot import rng as rngmod
from fofrboot.bootstrap import BootConfig, ConditionRWarning
from fofrboot.errors import FofrError, InvalidArgumentError
from fofrboot.fofr import loocv_select
from fofrboot.fpca import NearTieWarning, fit_fpca
from fofrboot.fungrid import Fn, Grid, inner
from fofrboot.inference import MeanResponseInference
from fofrboot.simgen import (
    Scenario,
    ScoreLaw,
    SlopeSpec,
    SpectrumSpec,
    gen_dataset,
    prepare,
)

METHODS = ("CLT", "RB")
TARGETS = ("MR", "proj", "eval")
K_MAX = 10
EVAL_T = 0.9


def cubic_curve(grid: Grid) -> Fn:
    """``x(t) = 10 t^3 - 15 t^4 + 6 t^5``, the default projection direction."""
    return grid.fn(lambda t: 10 * t**3 - 15 * t**4 + 6 * t**5)


def describe_scenario(scenario: Scenario, drop_n: bool = False) -> str:
    d = asdict(scenario)
    if drop_n:
        d.pop("n")
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


# -- coverage ------------------------------------------------------------

CellKey = tuple  # (method, target, n, delta, level)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Empirical coverage per (method, target, n, delta, level).

    ``hits[key]`` counts replications whose set covered the truth and
    ``successes[(n, delta)]`` counts replications where every set could be
    built.  Failed replications are excluded from the denominators and
    counted in ``failures``.
    """

    scenario: str
    M: int
    B: int
    seed: int
    levels: tuple
    hits: dict
    successes: dict
    failures: dict
    k_counts: dict = field(default_factory=dict)

    def coverage(self, method: str, target: str, n: int, delta: int, level: float = 0.95) -> float:
        s = self.successes[(n, delta)]
        if s == 0:
            return math.nan
        return self.hits[(method, target, n, delta, level)] / s

    def se(self, method: str, target: str, n: int, delta: int, level: float = 0.95) -> float:
        p = self.coverage(method, target, n, delta, level)
        s = self.successes[(n, delta)]
        return math.sqrt(p * (1 - p) / s) if s else math.nan

    def rows(self):
        for (method, target, n, delta, level) in sorted(self.hits):
            yield {
                "method": method,
                "target": target,
                "n": n,
                "delta": delta,
                "level": level,
                "successes": self.successes[(n, delta)],
                "failures": self.failures[(n, delta)],
                "hits": self.hits[(method, target, n, delta, level)],
                "coverage": self.coverage(method, target, n, delta, level),
                "se": self.se(method, target, n, delta, level),
            }

    def to_csv(self, path=None) -> str:
        """Flat table with ``#`` metadata lines; floats are written exactly (``repr``)."""
        buf = io.StringIO()
        buf.write(f"# {rngmod.describe(self.seed)} M={self.M} B={self.B}\n")
        buf.write(f"# scenario={self.scenario}\n")
        for n in sorted(self.k_counts):
            ks = " ".join(f"{k}:{c}" for k, c in sorted(self.k_counts[n].items()))
            buf.write(f"# selected_k n={n} {ks}\n")
        cols = ["method", "target", "n", "delta", "level", "successes", "failures", "hits",
                "coverage", "se"]
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(cols)
        for row in self.rows():
            wr.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in cols)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _replicate(r: int, scenario: Scenario, delta_list, B: int, seed: int, levels, k_max: int):
    """One replication; returns ``(k, {delta: {(method, target, level): covered} | None})``."""
    n = scenario.n
    X, Y, truth = gen_dataset(scenario, rngmod.stream(seed, rngmod.DATA, n, r))
    grid = X.grid
    x = cubic_curve(grid)
    mu = truth.mu_x0
    targets = {"MR": mu, "proj": inner(mu, x), "eval": mu.at(EVAL_T)}
    out = {}
    try:
        fp = fit_fpca(X)
        k = loocv_select(X, Y, max(1, min(k_max, fp.rank - 1)))
    except FofrError:
        return None, {d: None for d in delta_list}
    inf = MeanResponseInference(X, Y, truth.x0, fp)
    for delta in delta_list:
        h = k + delta
        try:
            cfg = BootConfig(k, k, h, B, seed)
            draws = inf.bootstrap(cfg, [x], [EVAL_T], stream_prefix=(rngmod.BOOT, n, r))
            cell = {}
            for level in levels:
                sets = {
                    ("CLT", "MR"): inf.clt_ball(h, k, level, seed=seed, stream_keys=(n, r)),
                    ("CLT", "proj"): inf.clt_proj_interval(x, h, k, level),
                    ("CLT", "eval"): inf.clt_eval_interval(EVAL_T, h, k, level),
                    ("RB", "MR"): inf.rb_ball(draws, level),
                    ("RB", "proj"): inf.rb_proj_interval(x, draws, 0, level),
                    ("RB", "eval"): inf.rb_eval_interval(draws, 0, level),
                }
                for (method, target), s in sets.items():
                    cell[(method, target, level)] = bool(s.contains(targets[target]))
            out[delta] = cell
        except FofrError:
            out[delta] = None
    return k, out


def _run_quiet(fn, r):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearTieWarning)
        warnings.simplefilter("ignore", ConditionRWarning)
        return fn(r)


def _map(fn, items, workers: int):
    """Ordered map, in-process for one worker and over processes otherwise."""
    items = list(items)
    if workers <= 1:
        return [_run_quiet(fn, r) for r in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(_run_quiet, fn), items, chunksize=chunk))


def coverage_study(
    scenario: Scenario,
    n_list: Sequence[int] = (30, 100),
    delta_list: Sequence[int] = (0, 1, 2),
    M: int = 1000,
    B: int = 1000,
    seed: int = 0,
    levels: Sequence[float] = (0.95,),
    workers: int = 1,
    k_max: int = K_MAX,
) -> CoverageReport:
    """Coverage of the CLT and bootstrap sets for ``mu(X0)``, ``<mu(X0), x>`` and
    ``mu(X0)(0.9)``.

    In each replication ``k`` is chosen by leave-one-out CV over
    ``1..min(k_max, rank - 1)``, then ``g = k`` and ``h = k + delta``.
    """
    if M < 1 or B < 1:
        raise InvalidArgumentError("M and B must be positive")
    levels = tuple(float(v) for v in levels)
    delta_list = tuple(int(d) for d in delta_list)
    if any(d < 0 for d in delta_list):
        raise InvalidArgumentError("delta must be non-negative")
    hits, succ, fail, kc = {}, {}, {}, {}
    for n in n_list:
        sc = scenario.with_n(int(n))
        prepare(sc)  # build the shared design once before forking
        fn = partial(_replicate, scenario=sc, delta_list=delta_list, B=B, seed=seed,
                     levels=levels, k_max=k_max)
        results = _map(fn, range(M), workers)
        kc[sc.n] = {}
        for d in delta_list:
            succ[(sc.n, d)] = 0
            fail[(sc.n, d)] = 0
            for level in levels:
                for method in METHODS:
                    for target in TARGETS:
                        hits[(method, target, sc.n, d, level)] = 0
        for k, per_delta in results:
            if k is not None:
                kc[sc.n][k] = kc[sc.n].get(k, 0) + 1
            for d, cell in per_delta.items():
                if cell is None:
                    fail[(sc.n, d)] += 1
                    continue
                succ[(sc.n, d)] += 1
                for (method, target, level), ok in cell.items():
                    hits[(method, target, sc.n, d, level)] += ok
    return CoverageReport(
        scenario=describe_scenario(scenario, drop_n=True),
        M=M,
        B=B,
        seed=seed,
        levels=levels,
        hits=hits,
        successes=succ,
        failures=fail,
        k_counts=kc,
    )


# -- scaling comparison --------------------------------------------------

def scaling_scenario(n: int = 400, J0: int = 150, m: int = 401, latent: str = "normal") -> Scenario:
    """Design where the shared latent factor makes ``h``-scaling non-Gaussian.

    Regressor scores are ``xi * W_j`` with Rademacher ``W`` and the given
    latent law; the errors have independent normal scores.  Truncating at the
    full span ``h = J0`` makes ``t_h(X0)`` a Mahalanobis distance (so the
    eigenvalue decay does not matter) and keeps ``t_h`` large enough that the
    intercept noise it divides is negligible.
    """
    return Scenario(
        spectrum=SpectrumSpec(2.5, J0),
        x_law=ScoreLaw(latent, "rademacher"),
        eps_law=ScoreLaw("none", "normal"),
        slope=SlopeSpec("exp"),
        n=n,
        m=m,
        x_basis="trig",
        eps_basis="trig",
    )


@dataclass(frozen=True)
class ScalingReport:
    n: int
    h: int
    M: int
    seed: int
    kurtosis_h: float
    kurtosis_t: float
    pvalue_h: float
    pvalue_t: float
    failures: int = 0

    def lines(self):
        yield f"# {rngmod.describe(self.seed)} M={self.M} n={self.n} h={self.h} failures={self.failures}"
        yield "scaling,kurtosis,normaltest_p"
        yield f"h,{self.kurtosis_h!r},{self.pvalue_h!r}"
        yield f"t_hat,{self.kurtosis_t!r},{self.pvalue_t!r}"


def _scaled_projections(r: int, scenario: Scenario, h_rule, seed: int):
    X, Y, truth = gen_dataset(scenario, rngmod.stream(seed, rngmod.DATA, scenario.n, r))
    try:
        fp = fit_fpca(X)
        h = h_rule(fp) if callable(h_rule) else int(h_rule)
        inf = MeanResponseInference(X, Y, truth.x0, fp)
        d = inner(inf.center(h) - truth.mu_x0, cubic_curve(X.grid))
        n = X.n
        return h, d * math.sqrt(n / h), d * math.sqrt(n / inf.scaling(h))
    except FofrError:
        return None


def scaling_comparison(
    scenario: Scenario | None = None,
    n: int = 400,
    h_rule: int | Callable | None = None,
    M: int = 2000,
    seed: int = 0,
    workers: int = 1,
) -> ScalingReport:
    """Kurtosis and D'Agostino-Pearson normality p-values of the projected
    statistic ``<mu_h(X0) - mu(X0), x>`` under ``sqrt(n / h)`` and
    ``sqrt(n / t_h(X0))`` scaling.

    ``h_rule`` is a fixed truncation or a function of the fitted FPCA; by
    default ``h = J0``.  Kurtosis is Pearson's (3 for a normal law).
    """
    sc = scaling_scenario(n) if scenario is None else scenario.with_n(n)
    if h_rule is None:
        h_rule = sc.spectrum.J0
    prepare(sc)
    fn = partial(_scaled_projections, scenario=sc, h_rule=h_rule, seed=seed)
    results = _map(fn, range(M), workers)
    ok = [r for r in results if r is not None]
    if len(ok) < 20:
        raise InvalidArgumentError("too few successful replications for a normality test")
    ph = np.array([r[1] for r in ok])
    pt = np.array([r[2] for r in ok])
    hs = {r[0] for r in ok}
    return ScalingReport(
        n=sc.n,
        h=hs.pop() if len(hs) == 1 else -1,
        M=M,
        seed=seed,
        kurtosis_h=float(stats.kurtosis(ph, fisher=False)),
        kurtosis_t=float(stats.kurtosis(pt, fisher=False)),
        pvalue_h=float(stats.normaltest(ph).pvalue),
        pvalue_t=float(stats.normaltest(pt).pvalue),
        failures=M - len(ok),
    )
