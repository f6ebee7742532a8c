"""Functional principal components regression for curve-on-curve models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fofrboot.errors import InvalidArgumentError
from fofrboot.fpca import FpcaModel, check_truncation, fit_fpca
from fofrboot.fungrid import Fn, FnSet, KernelOp, _check_grid, _frozen

# relative slack under which two cross-validation errors count as tied
CV_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class FofrModel:
    """Truncated estimator ``mu_h(x) = A_h + B_h x``.

    ``slope_coefs[j]`` is the curve ``B_h phi_j`` (the cross-covariance applied
    to ``phi_j`` divided by ``gamma_j``), so ``B_h x = sum_j <x, phi_j> slope_coefs[j]``.
    """

    fpca: FpcaModel
    h: int
    intercept: Fn
    slope_coefs: np.ndarray
    ybar: Fn

    def __post_init__(self):
        object.__setattr__(self, "slope_coefs", _frozen(self.slope_coefs))

    @property
    def grid(self):
        return self.fpca.grid

    def slope_kernel(self) -> KernelOp:
        """``B(t, s) = sum_j slope_coefs[j](t) phi_j(s)``."""
        return KernelOp(self.grid, self.slope_coefs.T @ self.fpca.phi(self.h))

    def apply_slope(self, x: Fn) -> Fn:
        _check_grid(self.grid, x.grid)
        c = self.fpca.phi(self.h) @ (self.grid.weights * x.values)
        return Fn(self.grid, c @ self.slope_coefs)

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        """Mean responses for an ``k x m`` array of regressor curves."""
        centered = np.atleast_2d(rows) - self.fpca.mean_fn.values
        c = (centered * self.grid.weights) @ self.fpca.phi(self.h).T
        return self.ybar.values + c @ self.slope_coefs


def _check_pair(X: FnSet, Y: FnSet):
    if X.n != Y.n:
        raise InvalidArgumentError(f"{X.n} regressor curves but {Y.n} responses")
    if not X.grid.same_as(Y.grid):
        raise InvalidArgumentError("regressors and responses must share one grid")


def fit_from_fpca(fpca: FpcaModel, Y: FnSet, h: int) -> FofrModel:
    """Fit with a precomputed FPCA of the regressors (shared across refits)."""
    check_truncation(fpca, h)
    h = int(h)
    ybar = Y.rows.mean(axis=0)
    s = fpca.scores[:, :h]
    coefs = (s.T @ (Y.rows - ybar)) / (fpca.n * fpca.eigvals[:h, None])
    xbar_c = fpca.phi(h) @ (fpca.grid.weights * fpca.mean_fn.values)
    intercept = ybar - xbar_c @ coefs
    return FofrModel(
        fpca=fpca,
        h=h,
        intercept=Fn(Y.grid, intercept),
        slope_coefs=coefs,
        ybar=Fn(Y.grid, ybar),
    )


def fit_fofr(X: FnSet, Y: FnSet, h: int, fpca: FpcaModel | None = None) -> FofrModel:
    """Estimate intercept and slope with ``h`` principal components."""
    _check_pair(X, Y)
    return fit_from_fpca(fit_fpca(X) if fpca is None else fpca, Y, h)


def predict_mean(model: FofrModel, x: Fn) -> Fn:
    """``mu_h(x)``, evaluated as ``Ybar + B_h (x - Xbar)`` (algebraically ``A_h + B_h x``)."""
    _check_grid(model.grid, x.grid)
    return Fn(model.grid, model.predict_rows(x.values)[0])


@dataclass(frozen=True, eq=False)
class ResidualSet:
    residuals: FnSet
    centered: bool
    k: int


def residuals_of(model: FofrModel, X: FnSet, Y: FnSet, center: bool = True) -> ResidualSet:
    """``Y_i - mu_k(X_i)``, optionally with the mean residual curve removed."""
    _check_pair(X, Y)
    _check_grid(model.grid, X.grid)
    res = Y.rows - model.predict_rows(X.rows)
    if center:
        res = res - res.mean(axis=0)
    return ResidualSet(FnSet(Y.grid, res), bool(center), model.h)


def error_cov(res: ResidualSet) -> KernelOp:
    """``n^-1 sum e_i (x) e_i`` as a kernel."""
    E = res.residuals.rows
    n = E.shape[0]
    if n < 2:
        raise InvalidArgumentError("error covariance needs at least two residual curves")
    return KernelOp(res.residuals.grid, (E.T @ E) / n)


def cv_errors(X: FnSet, Y: FnSet, k_max: int) -> np.ndarray:
    """Leave-one-out squared prediction errors for ``k = 1..k_max``.

    Each fold refits the FPCA without observation ``i``.  Entries are ``inf``
    when some fold has fewer than ``k`` usable components.
    """
    _check_pair(X, Y)
    n = X.n
    w = X.grid.weights
    total = np.zeros(k_max)
    for i in range(n):
        fp = fit_fpca(X.drop(i))
        kk = min(k_max, fp.rank)
        if kk < k_max:
            total[kk:] = np.inf
        if kk == 0:
            continue
        Yi = np.delete(Y.rows, i, axis=0)
        ybar = Yi.mean(axis=0)
        s = fp.scores[:, :kk]
        coefs = (s.T @ (Yi - ybar)) / (fp.n * fp.eigvals[:kk, None])
        c = fp.phi(kk) @ (w * (X.rows[i] - fp.mean_fn.values))
        preds = ybar + np.cumsum(c[:, None] * coefs, axis=0)
        resid = Y.rows[i] - preds
        total[:kk] += resid**2 @ w
    return total / n


def loocv_select(X: FnSet, Y: FnSet, k_max: int) -> int:
    """Truncation in ``1..k_max`` minimizing the leave-one-out error.

    Ties (within a relative ``1e-9`` of the minimum, plus an absolute slack at
    the rounding level of the responses) resolve to the smaller ``k``.
    """
    if X.n < 3:
        raise InvalidArgumentError("leave-one-out selection needs at least three observations")
    if int(k_max) != k_max or k_max < 1:
        raise InvalidArgumentError(f"k_max must be a positive integer, got {k_max!r}")
    if k_max == 1:
        return 1
    errs = cv_errors(X, Y, int(k_max))
    if not np.isfinite(errs[0]):
        raise InvalidArgumentError("regressors have no usable principal component")
    ycen = Y.rows - Y.rows.mean(axis=0)
    scale = np.mean(ycen**2 @ Y.grid.weights)
    best = np.min(errs)
    slack = CV_TIE_RTOL * best + 1e-14 * scale
    return int(np.flatnonzero(errs <= best + slack)[0]) + 1
