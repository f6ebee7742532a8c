"""Residual bootstrap for the mean response.

Three truncation levels play different roles: ``k`` produces the residuals
that are resampled, ``g`` produces the fitted means that act as the truth in
the bootstrap world, and ``h`` is the truncation of the estimator whose law is
being approximated.  For every resample ``b`` the engine forms

    Y*_i = A_g + B_g X_i + e*_i,          e*_i drawn from the centered k-residuals,

refits ``A*_h, B*_h`` on ``(X_i, Y*_i)`` and records

    T*_b = sqrt(n / t_h(x0)) * (mu*_h(x0) - mu_g(x0)).

The regressors never change, so the FPCA of ``X`` is computed once.  With it
fixed, ``mu*_h(x0)`` is a fixed linear combination ``sum_i a_i Y*_i`` of the
bootstrap responses, which is how the refit is evaluated.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fofrboot import rng as rngmod
from fofrboot.errors import InvalidArgumentError, NumericalFailureError
from fofrboot.fofr import fit_from_fpca, residuals_of
from fofrboot.fpca import FpcaModel, check_truncation, fit_fpca, scaling_hat
from fofrboot.fungrid import Fn, FnSet, _check_grid, _frozen, interp_matrix


CHUNK = 100


class ConditionRWarning(UserWarning):
    """The estimation truncation is smaller than the generation truncation."""


@dataclass(frozen=True)
class BootConfig:
    k: int
    g: int
    h: int
    B: int = 1000
    seed: int = 0
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        for name in ("k", "g", "h", "B"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {v!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")
        if self.h < self.g:
            warnings.warn(
                f"h={self.h} < g={self.g}: the bootstrap bias from the g-truncated "
                "fit may not be negligible and coverage can fail",
                ConditionRWarning,
                stacklevel=3,
            )

    @property
    def ratio_violated(self) -> bool:
        return self.h < self.g


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    """Empirical law of the bootstrap statistic.

    ``sq_norms[b] = ||T*_b||^2``, ``projections[b, p] = <T*_b, x_p>`` and
    ``evaluations[b, q] = T*_b(t_q)``.
    """

    sq_norms: np.ndarray
    projections: np.ndarray
    evaluations: np.ndarray
    config: BootConfig
    scaling_used: float
    eval_ts: tuple = ()

    def __post_init__(self):
        for name in ("sq_norms", "projections", "evaluations"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


def bootstrap_quantile(draws, level: float) -> float:
    """Order statistic ``ceil(level (B + 1))`` of the draws, clipped to ``[1, B]``."""
    x = np.sort(np.asarray(draws, dtype=float).ravel())
    B = x.size
    if B < 1:
        raise InvalidArgumentError("no bootstrap draws")
    if not 0 < level < 1:
        raise InvalidArgumentError(f"level must lie in (0, 1), got {level!r}")
    # rounding guards against products such as 0.1 * 10 = 1.0000000000000002
    idx = math.ceil(round(level * (B + 1), 9))
    return float(x[min(max(idx, 1), B) - 1])


def resample_indices(seed: int, b: int, n: int, *prefix: int) -> np.ndarray:
    """Indices for resample ``b``: ``n`` uniform draws from ``0..n-1``."""
    return rngmod.stream(seed, *prefix, b).integers(0, n, size=n)


def run_residual_bootstrap(
    X: FnSet,
    Y: FnSet,
    x0: Fn,
    cfg: BootConfig,
    proj_fns: Sequence[Fn] = (),
    eval_ts: Sequence[float] = (),
    fpca: FpcaModel | None = None,
    stream_prefix: tuple = (),
) -> BootstrapDraws:
    """Draw ``cfg.B`` residual-bootstrap replicates of the mean-response statistic.

    Resample ``b`` uses the generator ``stream(cfg.seed, *stream_prefix, b)``, so
    the output does not depend on ``cfg.workers``.
    """
    if X.n != Y.n or not X.grid.same_as(Y.grid):
        raise InvalidArgumentError("regressors and responses must share size and grid")
    _check_grid(X.grid, x0.grid)
    for f in proj_fns:
        _check_grid(X.grid, f.grid)
    ts = np.asarray(list(eval_ts), dtype=float)
    if ts.size and (np.any(ts < 0) or np.any(ts > 1)):
        raise InvalidArgumentError("evaluation points must lie in [0, 1]")

    fp = fit_fpca(X) if fpca is None else fpca
    for name in ("k", "g", "h"):
        check_truncation(fp, getattr(cfg, name), name)
    n, grid = X.n, X.grid
    w = grid.weights

    res = residuals_of(fit_from_fpca(fp, Y, cfg.k), X, Y, center=True).residuals.rows
    if res.shape[0] == 0:
        raise InvalidArgumentError("no residuals to resample")
    model_g = fit_from_fpca(fp, Y, cfg.g)
    fitted_g = model_g.predict_rows(X.rows)
    mu_g_x0 = model_g.predict_rows(x0.values)[0]

    t_hat = scaling_hat(fp, x0, cfg.h)
    c = fp.phi(cfg.h) @ (w * (x0.values - fp.mean_fn.values)) / fp.eigvals[: cfg.h]
    # mu*_h(x0) = sum_i a_i Y*_i because the score columns sum to zero
    a = (1.0 + fp.scores[:, : cfg.h] @ c) / n
    offset = a @ fitted_g - mu_g_x0
    scale = math.sqrt(n / t_hat) if t_hat > 0 else math.inf

    P = np.stack([f.values for f in proj_fns]) if proj_fns else np.empty((0, grid.m))
    Pw = P * w
    L = interp_matrix(grid, ts)

    def block(lo: int, hi: int):
        counts = np.zeros((hi - lo, n))
        for row, b in enumerate(range(lo, hi)):
            idx = resample_indices(cfg.seed, b, n, *stream_prefix)
            np.add.at(counts[row], idx, a)
        diff = offset + counts @ res
        if not math.isfinite(scale):
            if np.any(diff != 0):
                raise NumericalFailureError("x0 has zero scaling but nonzero bootstrap spread")
            T = np.zeros_like(diff)
        else:
            T = scale * diff
        sq = (T**2) @ w
        proj = T @ Pw.T
        ev = T @ L
        return sq, proj, ev

    B = cfg.B
    # fixed chunk boundaries keep every floating-point reduction identical
    # whatever the worker count
    chunks = [(lo, min(lo + CHUNK, B)) for lo in range(0, B, CHUNK)]
    if cfg.workers == 1 or len(chunks) == 1:
        parts = [block(lo, hi) for lo, hi in chunks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda e: block(*e), chunks))
    return BootstrapDraws(
        sq_norms=np.concatenate([p[0] for p in parts]),
        projections=np.concatenate([p[1] for p in parts]).reshape(B, len(proj_fns)),
        evaluations=np.concatenate([p[2] for p in parts]).reshape(B, ts.size),
        config=cfg,
        scaling_used=t_hat,
        eval_ts=tuple(float(t) for t in ts),
    )
