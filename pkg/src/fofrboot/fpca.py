"""Empirical functional principal components."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from fofrboot.errors import InvalidArgumentError, TruncationTooLargeError
from fofrboot.fungrid import Fn, FnSet, Grid, KernelOp, OrthoSystem, _check_grid, _frozen

RANK_CUTOFF = 1e-12
TIE_TOL = 1e-10


class NearTieWarning(UserWarning):
    """A truncation level separates two numerically tied eigenvalues."""


@dataclass(frozen=True, eq=False)
class FpcaModel:
    """Eigendecomposition of the empirical covariance operator (divisor ``n``).

    Attributes
    ----------
    mean_fn : Fn
        Sample mean curve.
    eigvals : ndarray, shape (r,)
        Non-increasing retained eigenvalues.
    eigfns : OrthoSystem
        Matching eigenfunctions; the entry of largest magnitude of each is positive.
    scores : ndarray, shape (n, r)
        ``<X_i - mean, phi_j>``.
    n : int
        Sample size.
    """

    mean_fn: Fn
    eigvals: np.ndarray
    eigfns: OrthoSystem
    scores: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "eigvals", _frozen(self.eigvals))
        object.__setattr__(self, "scores", _frozen(self.scores))

    @property
    def grid(self) -> Grid:
        return self.mean_fn.grid

    @property
    def rank(self) -> int:
        return self.eigvals.size

    def phi(self, h: int | None = None) -> np.ndarray:
        """First ``h`` eigenfunctions as an ``h x m`` array."""
        return self.eigfns.funcs[: self.rank if h is None else h]

    def covariance(self) -> KernelOp:
        """Covariance kernel rebuilt from the retained components."""
        phi = self.eigfns.funcs
        return KernelOp(self.grid, (phi.T * self.eigvals) @ phi)


def _orient(vecs: np.ndarray) -> np.ndarray:
    """Flip rows so that each row's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vecs * signs[:, None]


def fit_fpca(X: FnSet) -> FpcaModel:
    """Mean, covariance eigenpairs and scores of a regressor sample.

    The covariance ``n^-1 sum (X_i - Xbar)(X_i - Xbar)^T`` is diagonalized in
    the weighted coordinates ``W^{1/2}``, where the quadrature inner product is
    Euclidean; a thin SVD of the weighted centered data gives the same
    eigenpairs as a symmetric eigensolve of ``W^{1/2} C W^{1/2}`` without
    forming ``C``.  Components below ``1e-12`` times the leading eigenvalue are
    dropped.
    """
    n = X.n
    if n < 2:
        raise InvalidArgumentError("FPCA needs at least two curves")
    grid = X.grid
    sw = np.sqrt(grid.weights)
    mean = X.rows.mean(axis=0)
    centered = X.rows - mean
    _, sing, vt = np.linalg.svd(centered * sw, full_matrices=False)
    eigvals = sing**2 / n

    # relative cutoff plus a floor at the rounding level of the data itself
    scale = np.mean(np.sum(X.rows**2 * grid.weights, axis=1))
    floor = max(RANK_CUTOFF * (eigvals[0] if eigvals.size else 0.0), 1e-26 * scale)
    keep = min(int(np.sum(eigvals > floor)), n - 1, grid.m)
    eigvals = eigvals[:keep]
    phi = _orient(vt[:keep] / sw) if keep else np.empty((0, grid.m))
    scores = (centered * grid.weights) @ phi.T
    return FpcaModel(
        mean_fn=Fn(grid, mean),
        eigvals=eigvals,
        eigfns=OrthoSystem(grid, phi),
        scores=scores,
        n=n,
    )


def check_truncation(model: FpcaModel, h: int, what: str = "h"):
    """Validate ``1 <= h <= rank`` and warn when ``h`` splits a near-tie."""
    if int(h) != h or h < 1:
        raise InvalidArgumentError(f"truncation {what} must be a positive integer, got {h!r}")
    if h > model.rank:
        raise TruncationTooLargeError(
            f"truncation {what}={h} exceeds the numerical rank {model.rank} of the regressors"
        )
    ev = model.eigvals
    if h < ev.size and abs(ev[h - 1] - ev[h]) < TIE_TOL * ev[0]:
        warnings.warn(
            f"truncation {what}={h} splits eigenvalues {ev[h - 1]:.3g} and {ev[h]:.3g}, "
            "which are numerically tied",
            NearTieWarning,
            stacklevel=3,
        )


def scores_of(model: FpcaModel, x: Fn, h: int) -> np.ndarray:
    """``(<x - Xbar, phi_j>)`` for ``j <= h``."""
    _check_grid(model.grid, x.grid)
    check_truncation(model, h)
    w = model.grid.weights
    return model.phi(h) @ (w * (x.values - model.mean_fn.values))


def scaling_hat(model: FpcaModel, x: Fn, h: int) -> float:
    """Data-driven normalizer ``sum_{j<=h} <x - Xbar, phi_j>^2 / gamma_j``."""
    s = scores_of(model, x, h)
    return float(np.sum(s**2 / model.eigvals[:h]))


def truncated_inverse_apply(model: FpcaModel, f: Fn, h: int) -> Fn:
    """Apply ``sum_{j<=h} gamma_j^{-1} phi_j (x) phi_j`` to ``f``."""
    _check_grid(model.grid, f.grid)
    check_truncation(model, h)
    phi = model.phi(h)
    coefs = phi @ (model.grid.weights * f.values)
    return Fn(model.grid, (coefs / model.eigvals[:h]) @ phi)
