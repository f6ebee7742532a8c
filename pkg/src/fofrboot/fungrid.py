"""Curves on a quadrature grid over [0, 1].

Square-integrable functions are represented by their values on a fixed grid;
inner products use trapezoid weights.  Bounded operators are stored as kernels
``K[r, c] = K(t_r, t_c)`` acting by ``(Kf)(t_r) = sum_c w_c K(t_r, t_c) f(t_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fofrboot.errors import (
    DegenerateInputError,
    IncompatibleGridError,
    InvalidArgumentError,
)

# relative residual norm below which a curve counts as dependent on its predecessors
GS_DEPENDENCE_TOL = 1e-13
POLY_MAX_J = 20


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature nodes and weights on [0, 1]."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        wts = _frozen(self.weights)
        if pts.ndim != 1 or wts.shape != pts.shape:
            raise InvalidArgumentError("points and weights must be 1-d arrays of equal length")
        if pts.size < 2:
            raise InvalidArgumentError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(wts)):
            raise InvalidArgumentError("grid points and weights must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("grid points must be strictly increasing")
        if pts[0] < 0 or pts[-1] > 1:
            raise InvalidArgumentError("grid points must lie in [0, 1]")
        if np.any(wts <= 0):
            raise InvalidArgumentError("quadrature weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def m(self) -> int:
        return self.points.size

    def __len__(self):
        return self.points.size

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return f"Grid(m={self.m}, [{self.points[0]:g}, {self.points[-1]:g}])"

    def constant(self, c: float = 1.0) -> "Fn":
        return Fn(self, np.full(self.m, float(c)))

    def fn(self, func) -> "Fn":
        """Evaluate a vectorized callable on the grid."""
        return Fn(self, np.broadcast_to(np.asarray(func(self.points), dtype=float), (self.m,)))


def make_uniform_grid(m: int = 101) -> Grid:
    """Equispaced grid with endpoints and trapezoid weights."""
    if int(m) != m or m < 3:
        raise InvalidArgumentError(f"grid size must be an integer >= 3, got {m!r}")
    m = int(m)
    h = 1.0 / (m - 1)
    weights = np.full(m, h)
    weights[0] = weights[-1] = h / 2
    return Grid(np.linspace(0.0, 1.0, m), weights)


def trapezoid_grid(points: Sequence[float]) -> Grid:
    """Trapezoid weights for arbitrary increasing nodes.

    Uniform nodes spanning [0, 1] get exactly the weights of
    :func:`make_uniform_grid`, so curves round-tripped through text files
    reproduce in-memory results bit for bit.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 2:
        raise InvalidArgumentError("need at least two grid points")
    if pts.size >= 3:
        uniform = make_uniform_grid(pts.size)
        if np.array_equal(pts, uniform.points):
            return uniform
    if np.any(np.diff(pts) <= 0):
        raise InvalidArgumentError("grid points must be strictly increasing")
    gaps = np.diff(pts)
    weights = np.empty_like(pts)
    weights[0] = gaps[0] / 2
    weights[-1] = gaps[-1] / 2
    weights[1:-1] = (gaps[:-1] + gaps[1:]) / 2
    return Grid(pts, weights)


def _check_grid(a: Grid, b: Grid):
    if not a.same_as(b):
        raise IncompatibleGridError("curves are defined on different grids")


@dataclass(frozen=True, eq=False)
class Fn:
    """A single curve sampled on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.m,):
            raise InvalidArgumentError(
                f"curve has {vals.size} values but the grid has {self.grid.m} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        if isinstance(other, Fn):
            _check_grid(self.grid, other.grid)
            return Fn(self.grid, self.values + other.values)
        return Fn(self.grid, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, Fn):
            _check_grid(self.grid, other.grid)
            return Fn(self.grid, self.values - other.values)
        return Fn(self.grid, self.values - float(other))

    def __mul__(self, c):
        return Fn(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Fn(self.grid, -self.values)

    def __repr__(self):
        return f"Fn(m={self.grid.m}, norm={norm(self):.6g})"

    def at(self, t: float) -> float:
        """Value at ``t`` by linear interpolation between neighbouring nodes."""
        return float(np.interp(t, self.grid.points, self.values))


@dataclass(frozen=True, eq=False)
class FnSet:
    """``n`` curves on a common grid, one per row."""

    grid: Grid
    rows: np.ndarray

    def __post_init__(self):
        rows = _frozen(np.atleast_2d(self.rows))
        if rows.ndim != 2 or rows.shape[1] != self.grid.m:
            raise InvalidArgumentError(
                f"expected an n x {self.grid.m} array of curve values, got shape {rows.shape}"
            )
        if rows.shape[0] < 1:
            raise InvalidArgumentError("a curve set needs at least one curve")
        if not np.all(np.isfinite(rows)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def __repr__(self):
        return f"FnSet(n={self.n}, m={self.grid.m})"

    def __len__(self):
        return self.rows.shape[0]

    def __getitem__(self, i) -> Fn:
        return Fn(self.grid, self.rows[i])

    def __iter__(self):
        return (Fn(self.grid, row) for row in self.rows)

    def mean(self) -> Fn:
        return Fn(self.grid, self.rows.mean(axis=0))

    def drop(self, i: int) -> "FnSet":
        return FnSet(self.grid, np.delete(self.rows, i, axis=0))

    @classmethod
    def from_fns(cls, fns: Sequence[Fn]) -> "FnSet":
        if not fns:
            raise InvalidArgumentError("a curve set needs at least one curve")
        grid = fns[0].grid
        for f in fns[1:]:
            _check_grid(grid, f.grid)
        return cls(grid, np.stack([f.values for f in fns]))


@dataclass(frozen=True, eq=False)
class KernelOp:
    """Integral operator with kernel ``kernel[r, c] = K(t_r, t_c)``."""

    grid: Grid
    kernel: np.ndarray

    def __post_init__(self):
        k = _frozen(self.kernel)
        m = self.grid.m
        if k.shape != (m, m):
            raise InvalidArgumentError(f"kernel must be {m} x {m}, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise InvalidArgumentError("kernel entries must be finite")
        object.__setattr__(self, "kernel", k)

    def __sub__(self, other: "KernelOp") -> "KernelOp":
        _check_grid(self.grid, other.grid)
        return KernelOp(self.grid, self.kernel - other.kernel)

    def diagonal_at(self, t: float) -> float:
        """``K(t, t)`` interpolated linearly along the diagonal."""
        return float(np.interp(t, self.grid.points, np.diag(self.kernel)))

    @classmethod
    def zero(cls, grid: Grid) -> "KernelOp":
        return cls(grid, np.zeros((grid.m, grid.m)))


@dataclass(frozen=True, eq=False)
class OrthoSystem:
    """Curves that are orthonormal in the grid's quadrature inner product."""

    grid: Grid
    funcs: np.ndarray
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        funcs = _frozen(np.atleast_2d(self.funcs))
        if funcs.shape[1] != self.grid.m:
            raise InvalidArgumentError("basis functions do not match the grid")
        if funcs.shape[0]:
            gram = (funcs * self.grid.weights) @ funcs.T
            err = np.max(np.abs(gram - np.eye(funcs.shape[0])))
            if err > self.tol:
                raise DegenerateInputError(
                    f"system is not orthonormal (max Gram deviation {err:.2e})"
                )
        object.__setattr__(self, "funcs", funcs)

    def __len__(self):
        return self.funcs.shape[0]

    def __getitem__(self, j) -> Fn:
        return Fn(self.grid, self.funcs[j])

    def gram(self) -> np.ndarray:
        return (self.funcs * self.grid.weights) @ self.funcs.T


def inner(f: Fn, g: Fn) -> float:
    """Quadrature inner product."""
    _check_grid(f.grid, g.grid)
    return float(np.dot(f.grid.weights * f.values, g.values))


def norm(f: Fn) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def gram_schmidt(raw: Sequence[Fn], tol: float = GS_DEPENDENCE_TOL) -> OrthoSystem:
    """Classical Gram-Schmidt in the quadrature inner product, input order kept.

    Each projection step is applied twice (CGS2), which keeps the output
    orthonormal to machine precision even for badly conditioned inputs such as
    the first twenty monomials.  A curve whose residual norm falls below
    ``tol`` times its original norm raises :class:`DegenerateInputError`
    carrying its 1-based index.
    """
    if len(raw) == 0:
        raise InvalidArgumentError("nothing to orthonormalize")
    grid = raw[0].grid
    for f in raw[1:]:
        _check_grid(grid, f.grid)
    w = grid.weights
    out = np.empty((len(raw), grid.m))
    for i, f in enumerate(raw):
        v = f.values.copy()
        size = np.sqrt(np.dot(w * v, v))
        if size == 0.0:
            raise DegenerateInputError(f"curve {i + 1} is identically zero", index=i + 1)
        for _ in range(2):
            if i:
                coefs = out[:i] @ (w * v)
                v -= coefs @ out[:i]
        resid = np.sqrt(np.dot(w * v, v))
        if resid <= tol * size:
            raise DegenerateInputError(
                f"curve {i + 1} is linearly dependent on the preceding curves "
                f"(relative residual {resid / size:.1e})",
                index=i + 1,
            )
        out[i] = v / resid
    return OrthoSystem(grid, out)


def _check_poly_J(J):
    if int(J) != J or not 1 <= J <= POLY_MAX_J:
        raise InvalidArgumentError(f"J must be an integer in [1, {POLY_MAX_J}], got {J!r}")


def basis_monomial(J: int, grid: Grid) -> OrthoSystem:
    """Orthonormalized ``t, t^2, ..., t^J``."""
    _check_poly_J(J)
    t = grid.points
    return gram_schmidt([Fn(grid, t**j) for j in range(1, int(J) + 1)])


def chebyshev_raw(J: int, s: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """``f_1..f_J`` from ``f_j = 2 s f_{j-1} + sign * f_{j-2}``, ``f_0 = 1``, ``f_1 = s``.

    ``sign=+1`` is the recurrence used for the simulation error basis;
    ``sign=-1`` gives the classical first-kind polynomials ``T_j``.
    """
    prev, cur = np.ones_like(s), s.copy()
    out = [cur]
    for _ in range(2, int(J) + 1):
        prev, cur = cur, 2 * s * cur + sign * prev
        out.append(cur)
    return np.stack(out)


def basis_chebyshev_shifted(J: int, grid: Grid, classical: bool = False) -> OrthoSystem:
    """Orthonormalized ``f_j(2t - 1)`` for ``j = 1..J``.

    By default the recurrence carries a ``+`` sign in front of ``f_{j-2}``;
    pass ``classical=True`` for the textbook ``-`` sign.
    """
    _check_poly_J(J)
    raw = chebyshev_raw(J, 2 * grid.points - 1, sign=-1.0 if classical else 1.0)
    return gram_schmidt([Fn(grid, r) for r in raw])


def basis_trig(J: int, grid: Grid) -> OrthoSystem:
    """``sqrt2 sin(2 pi k t), sqrt2 cos(2 pi k t)`` for ``k = 1..J/2``, interleaved."""
    if int(J) != J or J < 2 or J % 2:
        raise InvalidArgumentError(f"J must be a positive even integer, got {J!r}")
    if J >= grid.m - 1:
        raise InvalidArgumentError(f"J = {J} trigonometric functions alias on a {grid.m}-point grid")
    t = grid.points
    rows = []
    for k in range(1, int(J) // 2 + 1):
        rows.append(np.sqrt(2) * np.sin(2 * k * np.pi * t))
        rows.append(np.sqrt(2) * np.cos(2 * k * np.pi * t))
    return OrthoSystem(grid, np.stack(rows))


def tensor_product(x: Fn, y: Fn) -> KernelOp:
    """Kernel of ``z -> <z, x> y``."""
    _check_grid(x.grid, y.grid)
    return KernelOp(x.grid, np.outer(y.values, x.values))


def apply_op(K: KernelOp, f: Fn) -> Fn:
    _check_grid(K.grid, f.grid)
    return Fn(f.grid, K.kernel @ (K.grid.weights * f.values))


def interp_matrix(grid: Grid, ts) -> np.ndarray:
    """``m x q`` matrix ``L`` with ``values @ L`` = linear interpolation at ``ts``."""
    ts = np.asarray(ts, dtype=float).ravel()
    pts = grid.points
    L = np.zeros((grid.m, ts.size))
    for q, t in enumerate(ts):
        if t <= pts[0]:
            L[0, q] = 1.0
        elif t >= pts[-1]:
            L[-1, q] = 1.0
        else:
            r = int(np.searchsorted(pts, t, side="right")) - 1
            frac = (t - pts[r]) / (pts[r + 1] - pts[r])
            L[r, q] = 1.0 - frac
            L[r + 1, q] = frac
    return L


def hs_norm(K: KernelOp) -> float:
    """Hilbert-Schmidt norm: the quadrature L2 norm of the kernel."""
    w = K.grid.weights
    return float(np.sqrt(np.sum(np.outer(w, w) * K.kernel**2)))
