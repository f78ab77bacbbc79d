"""Bessel functions and the discrete Fourier-Bessel (Hankel) transform.

The transform uses the normalization

    H_alpha f(y) = y**(-2*alpha - 1) * int_0^inf (x*y)**(alpha + 1) f(x) J_alpha(x*y) dx,

under which H_alpha is its own inverse and, for ``alpha = n/2 - 1``, the Fourier
transform of a radial function on R^n is ``(2*pi)**(n/2) * H_alpha(u0)``.

Profiles are sampled on scaled Bessel zeros (the quasi-discrete Hankel
transform): physical nodes ``r_k = j_k * R / j_{N+1}`` and dual nodes
``rho_k = j_k / R``.  The quadrature weights attached to both grids are the
Fourier-Bessel sampling weights, exact for band-limited integrands.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.special import gamma, jv

__all__ = [
    "DomainError",
    "TailWarning",
    "RadialGrid",
    "RadialProfile",
    "HankelPlan",
    "bessel_j",
    "bessel_zeros",
    "make_plan",
    "plan_for",
    "apply",
    "radial_fourier",
    "interpolate",
    "sample",
    "write_profile_csv",
    "read_profile_csv",
]


class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class TailWarning(UserWarning):
    """A profile has not decayed at the truncation radius; integrals may be inaccurate."""


def _check_order(alpha: float) -> None:
    if not np.isfinite(alpha) or alpha < -0.5:
        raise DomainError(f"Bessel order must be >= -1/2, got {alpha}")


def bessel_j(alpha: float, x):
    """First-kind Bessel function ``J_alpha(x)`` for ``alpha >= -1/2`` and ``x >= 0``.

    Accepts a scalar or an array for ``x``; returns the same shape.  At ``x = 0``
    the value is 1 for ``alpha = 0`` and 0 for ``alpha > 0``; for negative
    non-integer orders the function is singular there and a ``DomainError`` is
    raised.
    """
    _check_order(alpha)
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < 0):
        raise DomainError("bessel_j requires finite x >= 0")
    if alpha < 0 and np.any(xa == 0):
        raise DomainError(f"J_{alpha} is unbounded at x = 0")
    out = jv(alpha, xa)
    return float(out) if out.ndim == 0 else out


def bessel_zeros(alpha: float, m: int) -> np.ndarray:
    """The first ``m`` positive zeros of ``J_alpha``, increasing."""
    _check_order(alpha)
    if int(m) != m or m < 1:
        raise ValueError(f"number of zeros must be a positive integer, got {m}")
    m = int(m)
    # Consecutive zeros are more than 2.5 apart for alpha >= -1/2, so a 0.25
    # sampling step cannot skip a sign change.
    step = 0.25
    hi = (m + 0.5 * alpha + 1.0) * math.pi + alpha + 10.0
    while True:
        x = np.arange(step, hi + step, step)
        f = jv(alpha, x)
        idx = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0)
        if idx.size >= m:
            break
        hi *= 1.5
    idx = idx[:m]
    lo, up = x[idx].copy(), x[idx + 1].copy()
    flo = jv(alpha, lo)
    for _ in range(64):
        mid = 0.5 * (lo + up)
        fm = jv(alpha, mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        up = np.where(left, up, mid)
    z = 0.5 * (lo + up)
    # one Newton polish: J' = J_{alpha-1} - alpha/x J = alpha/x J - J_{alpha+1}
    fz = jv(alpha, z)
    dz = alpha / z * fz - jv(alpha + 1, z)
    return z - fz / dz


def _xpow_jv(alpha: float, x: np.ndarray) -> np.ndarray:
    """``x**(-alpha) * J_alpha(x)``, continuous at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-8
    out[small] = 1.0 / (2.0**alpha * gamma(alpha + 1.0))
    xs = x[~small]
    out[~small] = jv(alpha, xs) / xs**alpha
    return out


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature nodes and ``dr`` weights on ``(0, cutoff)``.

    ``role`` is ``"physical"`` or ``"dual"``; ``plan_cutoff`` is the truncation
    radius R of the plan the grid belongs to, which is enough to rebuild it.
    """

    alpha: float
    size: int
    cutoff: float
    nodes: np.ndarray
    weights: np.ndarray
    role: str = "physical"
    plan_cutoff: float = float("nan")
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        object.__setattr__(self, "weights", _readonly(self.weights))
        if self.nodes.shape != (self.size,) or self.weights.shape != (self.size,):
            raise ValueError("nodes and weights must both have length `size`")
        if not (np.all(self.nodes > 0) and np.all(np.diff(self.nodes) > 0)):
            raise ValueError("nodes must be positive and strictly increasing")
        if not np.all(self.weights > 0):
            raise ValueError("weights must be positive")

    def same_as(self, other: "RadialGrid") -> bool:
        if self is other:
            return True
        return (
            self.alpha == other.alpha
            and self.size == other.size
            and np.array_equal(self.nodes, other.nodes)
        )

    def integrate(self, values, power: float = 0.0) -> float:
        """``int f(r) r**power dr`` by the grid's own weights."""
        return float(np.sum(self.weights * self.nodes**power * np.asarray(values)))


Number = Union[int, float]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples ``u0(r_k)`` of a radial function ``u(x) = u0(|x|)``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != (self.grid.size,):
            raise ValueError(
                f"profile has {v.shape} values, grid has {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "RadialProfile":
        return RadialProfile(self.grid, values)

    def _coerce(self, other):
        if isinstance(other, RadialProfile):
            if not self.grid.same_as(other.grid):
                raise ValueError("profiles live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __rsub__(self, other):
        return self.with_values(self._coerce(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Number):
        return self.with_values(self.values / other)

    def __neg__(self):
        return self.with_values(-self.values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class HankelPlan:
    """Discrete transform between a physical grid and its dual grid.

    ``kernel[m, k]`` maps physical samples to dual samples and
    ``inverse_kernel[k, m]`` maps back; both realize the same continuous
    operator, so applying the plan twice returns to the starting grid.
    """

    alpha: float
    grid: RadialGrid
    dual_grid: RadialGrid
    kernel: np.ndarray
    inverse_kernel: np.ndarray

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def cutoff(self) -> float:
        return self.grid.cutoff


@functools.lru_cache(maxsize=32)
def make_plan(alpha: float, N: int, R: float = 40.0) -> HankelPlan:
    """Build (and cache) the discrete transform of order ``alpha`` with ``N`` nodes on (0, R)."""
    _check_order(alpha)
    if int(N) != N or N < 8:
        raise ValueError(f"N must be an integer >= 8, got {N}")
    if not (np.isfinite(R) and R > 0):
        raise ValueError(f"R must be positive, got {R}")
    N, R, alpha = int(N), float(R), float(alpha)

    j_all = bessel_zeros(alpha, N + 1)
    S, j = j_all[-1], j_all[:-1]
    j1sq = jv(alpha + 1.0, j) ** 2

    r = j * R / S
    rho = j / R
    w_r = 2.0 * R**2 / (S**2 * j1sq * r)
    w_rho = 2.0 / (R**2 * j1sq * rho)

    grid = RadialGrid(alpha, N, R, r, w_r, role="physical", plan_cutoff=R)
    dual = RadialGrid(alpha, N, S / R, rho, w_rho, role="dual", plan_cutoff=R)

    bes = jv(alpha, np.outer(j, j) / S)  # J_alpha(rho_m r_k), symmetric
    fwd = rho[:, None] ** (-alpha) * bes * (w_r * r ** (alpha + 1.0))[None, :]
    bwd = r[:, None] ** (-alpha) * bes * (w_rho * rho ** (alpha + 1.0))[None, :]
    return HankelPlan(alpha, grid, dual, _readonly(fwd), _readonly(bwd))


def plan_for(grid: RadialGrid) -> HankelPlan:
    """The cached plan a grid was produced by (physical or dual side)."""
    if not np.isfinite(grid.plan_cutoff):
        raise ValueError("grid was not produced by make_plan")
    plan = make_plan(grid.alpha, grid.size, grid.plan_cutoff)
    if not (plan.grid.same_as(grid) or plan.dual_grid.same_as(grid)):
        raise ValueError("grid does not match any cached plan")
    return plan


def apply(plan: HankelPlan, u: RadialProfile) -> RadialProfile:
    """Apply the transform; physical samples go to the dual grid and vice versa."""
    if plan.grid.same_as(u.grid):
        return RadialProfile(plan.dual_grid, plan.kernel @ u.values)
    if plan.dual_grid.same_as(u.grid):
        return RadialProfile(plan.grid, plan.inverse_kernel @ u.values)
    raise ValueError("profile is not sampled on either grid of this plan")


def radial_fourier(n: int, u: RadialProfile, plan: HankelPlan | None = None) -> RadialProfile:
    """Fourier transform of the radial function ``u0(|x|)`` on R^n, as a profile in ``|omega|``."""
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    if u.grid.alpha != n / 2 - 1:
        raise DomainError(
            f"grid order {u.grid.alpha} does not match n/2 - 1 = {n / 2 - 1}"
        )
    plan = plan or plan_for(u.grid)
    return (2.0 * math.pi) ** (n / 2) * apply(plan, u)


def interpolate(plan: HankelPlan, u: RadialProfile, r) -> np.ndarray:
    """Evaluate the band-limited interpolant of ``u`` at arbitrary radii ``r >= 0``.

    Uses the inversion formula with the dual samples, so it reproduces ``u`` on
    its own nodes to round-off.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    hat = apply(plan, u)  # raises if u is on neither grid
    a = plan.alpha
    y, w = hat.grid.nodes, hat.grid.weights
    # r**-a J_a(r y) = y**a * (ry)**-a J_a(ry)
    mat = _xpow_jv(a, np.outer(r, y)) * (w * y ** (2 * a + 1))[None, :]
    return mat @ hat.values


def sample(grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> RadialProfile:
    """Sample a callable on the grid nodes."""
    return RadialProfile(grid, np.asarray(fn(grid.nodes), dtype=float))


def write_profile_csv(path, u: RadialProfile) -> None:
    """Write ``r,value`` rows with 17 significant digits."""
    lines = ["r,value"]
    lines += [f"{r:.17g},{v:.17g}" for r, v in zip(u.grid.nodes, u.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile_csv(path, grid: RadialGrid) -> RadialProfile:
    """Read a profile CSV back onto ``grid``; the node column must match."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.size, 2):
        raise ValueError(f"expected {grid.size} rows of r,value; got {data.shape}")
    if not np.allclose(data[:, 0], grid.nodes, rtol=1e-15, atol=0):
        raise ValueError("CSV nodes do not match the grid")
    return RadialProfile(grid, data[:, 1])
