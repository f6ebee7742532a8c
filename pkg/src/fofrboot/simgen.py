"""Synthetic regressors, errors and slope operators with known truth.

Curves are truncated Karhunen-Loeve expansions ``sum_j sqrt(gamma_j) xi_j phi_j``
whose scores ``xi_j = xi * W_j`` share one latent factor per curve, so they are
uncorrelated but dependent.  Eigenvalues come from the gaps
``gamma_j - gamma_{j+1} = 2 j^-a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Literal

import numpy as np

from fofrboot import rng as rngmod
from fofrboot.errors import InvalidArgumentError
from fofrboot.fungrid import (
    Fn,
    FnSet,
    Grid,
    KernelOp,
    OrthoSystem,
    apply_op,
    basis_chebyshev_shifted,
    basis_monomial,
    basis_trig,
    make_uniform_grid,
    tensor_product,
)

ZETA_TERMS = 10**6

Latent = Literal["normal", "exp", "none", "constant"]
WLaw = Literal["normal", "rademacher", "constant"]


@dataclass(frozen=True)
class SpectrumSpec:
    a: float = 2.5
    J0: int = 20

    def __post_init__(self):
        if not self.a > 1:
            raise InvalidArgumentError(f"decay exponent must exceed 1, got {self.a!r}")
        if int(self.J0) != self.J0 or self.J0 < 1:
            raise InvalidArgumentError("J0 must be a positive integer")


def zeta_tail(a: float, j: int = 1, terms: int = ZETA_TERMS) -> float:
    """``sum_{l >= j} l^-a``: explicit sum up to ``terms`` plus a midpoint-rule remainder.

    The remainder ``int_{N+1/2}^inf x^-a dx`` misses the true tail by roughly
    ``a (a + 1) N^{-a-2} / 24``, far below ``1e-10`` for ``a > 1``.
    """
    if not a > 1:
        raise InvalidArgumentError(f"the series diverges for a = {a!r}")
    if j > terms:
        return (j - 0.5) ** (1 - a) / (a - 1)
    ls = np.arange(terms, j - 1, -1, dtype=float)  # smallest terms first
    return float(np.sum(ls**-a)) + (terms + 0.5) ** (1 - a) / (a - 1)


def eigenvalues_from_gaps(spec: SpectrumSpec) -> np.ndarray:
    """``gamma_j = 2 sum_{l >= j} l^-a`` for ``j = 1..J0``."""
    a = spec.a
    if not a > 1:
        raise InvalidArgumentError(f"decay exponent must exceed 1, got {a!r}")
    gamma1 = 2 * zeta_tail(a)
    gaps = 2 * np.arange(1, spec.J0, dtype=float) ** -a
    return np.concatenate([[gamma1], gamma1 - np.cumsum(gaps)])


@dataclass(frozen=True)
class ScoreLaw:
    """Law of the scores ``xi_j = xi * W_j``.

    ``latent='none'`` drops the shared factor (independent scores);
    ``'constant'`` fixes it at 1.  ``'exp'`` is the centered ``Exp(1) - 1``.
    """

    latent: Latent = "exp"
    w_law: WLaw = "normal"

    def __post_init__(self):
        if self.latent not in ("normal", "exp", "none", "constant"):
            raise InvalidArgumentError(f"unknown latent law {self.latent!r}")
        if self.w_law not in ("normal", "rademacher", "constant"):
            raise InvalidArgumentError(f"unknown W law {self.w_law!r}")

    def draw(self, n: int, J: int, rng: np.random.Generator) -> np.ndarray:
        if self.w_law == "normal":
            W = rng.standard_normal((n, J))
        elif self.w_law == "rademacher":
            W = rng.choice(np.array([-1.0, 1.0]), size=(n, J))
        else:
            W = np.ones((n, J))
        if self.latent == "normal":
            xi = rng.standard_normal(n)
        elif self.latent == "exp":
            xi = rng.exponential(1.0, n) - 1.0
        else:
            xi = np.ones(n)
        return xi[:, None] * W


def gen_fnset(n: int, eigvals, basis: OrthoSystem, law: ScoreLaw, rng: np.random.Generator,
              scale: float = 1.0) -> FnSet:
    """``n`` curves ``scale * sum_j sqrt(gamma_j) xi_ij phi_j``."""
    ev = np.asarray(eigvals, dtype=float)
    J = ev.size
    if len(basis) < J:
        raise InvalidArgumentError(f"basis has {len(basis)} functions, need {J}")
    scores = law.draw(n, J, rng)
    return FnSet(basis.grid, scale * (scores * np.sqrt(ev)) @ basis.funcs[:J])


@dataclass(frozen=True)
class SlopeSpec:
    kind: Literal["prod", "diag", "exp", "zero"] = "prod"
    b1: float = 1.5
    b2: float = 2.5
    sign_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("prod", "diag", "exp", "zero"):
            raise InvalidArgumentError(f"unknown slope kind {self.kind!r}")


def slope_signs(spec: SlopeSpec, J0: int = 20) -> dict:
    """Rademacher signs for the slope coefficients, frozen by ``sign_seed``."""
    rng = rngmod.stream(spec.sign_seed, rngmod.SIGNS)
    draw = rng.choice(np.array([-1.0, 1.0]), size=(3, J0))
    return {"beta1": draw[0], "beta2": draw[1], "diag": draw[2]}


def slope_coefficients(spec: SlopeSpec, J0: int = 20) -> dict:
    s = slope_signs(spec, J0)
    j = np.arange(1, J0 + 1, dtype=float)
    return {
        "beta1": 3 * s["beta1"] * j**-spec.b1,
        "beta2": s["beta2"] * j**-spec.b2,
        "diag": 2 * s["diag"] * j ** (-(spec.b1 + spec.b2) / 2),
    }


def make_slope(spec: SlopeSpec, trig: OrthoSystem) -> KernelOp:
    """True slope operator on ``trig.grid``.

    ``prod`` is ``u (x) v`` with ``u = sum beta1_j phi_j``, ``v = sum beta2_j phi_j``
    (so ``B f = <f, u> v``); ``diag`` is ``sum d_j phi_j (x) phi_j``; ``exp`` has
    kernel ``exp(-(t + s))``.
    """
    grid = trig.grid
    if spec.kind == "exp":
        t = grid.points
        return KernelOp(grid, np.exp(-(t[:, None] + t[None, :])))
    if spec.kind == "zero":
        return KernelOp.zero(grid)
    J0 = len(trig)
    coef = slope_coefficients(spec, J0)
    phi = trig.funcs
    if spec.kind == "prod":
        return tensor_product(Fn(grid, coef["beta1"] @ phi), Fn(grid, coef["beta2"] @ phi))
    return KernelOp(grid, (phi.T * coef["diag"]) @ phi)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to generate one simulated dataset.

    ``x_basis`` and ``eps_basis`` name orthonormal systems (``monomial``,
    ``chebyshev``, ``chebyshev_classical`` or ``trig``); the errors use the
    same eigenvalues as the regressors, times ``eps_scale``.
    """

    spectrum: SpectrumSpec = field(default_factory=SpectrumSpec)
    x_law: ScoreLaw = field(default_factory=ScoreLaw)
    eps_law: ScoreLaw = field(default_factory=ScoreLaw)
    slope: SlopeSpec = field(default_factory=SlopeSpec)
    n: int = 100
    m: int = 101
    eps_scale: float = 1.0
    x_basis: str = "monomial"
    eps_basis: str = "chebyshev"
    slope_J0: int = 20
    x0_rule: Literal["fresh", "fixed"] = "fresh"
    x0_fixed: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError("need at least two observations")
        if self.eps_scale < 0:
            raise InvalidArgumentError("eps_scale must be non-negative")
        for b in (self.x_basis, self.eps_basis):
            if b not in _BASES:
                raise InvalidArgumentError(f"unknown basis {b!r}")
        if self.x0_rule not in ("fresh", "fixed"):
            raise InvalidArgumentError(f"unknown x0 rule {self.x0_rule!r}")
        if self.x0_rule == "fixed" and (self.x0_fixed is None or len(self.x0_fixed) != self.m):
            raise InvalidArgumentError("a fixed x0 needs m curve values")

    def with_n(self, n: int) -> "Scenario":
        from dataclasses import replace
        return replace(self, n=n)


_BASES = {
    "monomial": basis_monomial,
    "chebyshev": basis_chebyshev_shifted,
    "chebyshev_classical": partial(basis_chebyshev_shifted, classical=True),
    "trig": basis_trig,
}


@dataclass(frozen=True, eq=False)
class Design:
    """Deterministic ingredients shared by every replication of a study."""

    grid: Grid
    eigvals: np.ndarray
    x_basis: OrthoSystem
    eps_basis: OrthoSystem
    slope: KernelOp
    signs: dict


@lru_cache(maxsize=32)
def _design(spectrum: SpectrumSpec, slope: SlopeSpec, m: int, x_basis: str, eps_basis: str,
            slope_J0: int) -> Design:
    grid = make_uniform_grid(m)
    J0 = spectrum.J0
    trig = basis_trig(slope_J0, grid)
    return Design(
        grid=grid,
        eigvals=eigenvalues_from_gaps(spectrum),
        x_basis=_BASES[x_basis](J0, grid),
        eps_basis=_BASES[eps_basis](J0, grid),
        slope=make_slope(slope, trig),
        signs=slope_signs(slope, slope_J0),
    )


def prepare(scenario: Scenario) -> Design:
    return _design(scenario.spectrum, scenario.slope, scenario.m, scenario.x_basis,
                   scenario.eps_basis, scenario.slope_J0)


@dataclass(frozen=True, eq=False)
class SimTruth:
    slope: KernelOp
    intercept: Fn
    mu_x0: Fn
    x0: Fn
    eigvals: np.ndarray


def gen_dataset(scenario: Scenario, rng: np.random.Generator):
    """Draw ``(X, Y, truth)`` with ``Y_i = B X_i + eps_i`` and a fresh ``X0``.

    The first ``n`` regressor curves form the sample and one more curve from
    the same law is the new regressor ``X0`` (unless the scenario fixes it).
    """
    d = prepare(scenario)
    n = scenario.n
    Xall = gen_fnset(n + 1, d.eigvals, d.x_basis, scenario.x_law, rng)
    eps = gen_fnset(n, d.eigvals, d.eps_basis, scenario.eps_law, rng, scale=scenario.eps_scale)
    X = FnSet(d.grid, Xall.rows[:n])
    if scenario.x0_rule == "fixed":
        x0 = Fn(d.grid, np.asarray(scenario.x0_fixed, dtype=float))
    else:
        x0 = Fn(d.grid, Xall.rows[n])
    w = d.grid.weights
    BX = (X.rows * w) @ d.slope.kernel.T
    Y = FnSet(d.grid, BX + eps.rows)
    zero = Fn(d.grid, np.zeros(d.grid.m))
    truth = SimTruth(
        slope=d.slope,
        intercept=zero,
        mu_x0=apply_op(d.slope, x0) + zero,
        x0=x0,
        eigvals=d.eigvals,
    )
    return X, Y, truth
