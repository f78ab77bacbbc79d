"""Fractional Sobolev norms, Bessel potentials and weighted Lebesgue norms of radial profiles.

Every integral over R^n is reduced to ``c_n * int_0^inf (.) r**(n-1) dr`` with
``c_n = 2*pi**(n/2) / Gamma(n/2)``, the area of the unit sphere.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from .hankel import (
    DomainError,
    HankelPlan,
    RadialGrid,
    RadialProfile,
    TailWarning,
    apply,
    plan_for,
    radial_fourier,
)

__all__ = [
    "sphere_area",
    "SobolevContext",
    "WeightedRule",
    "weighted_rule",
    "hs_norm",
    "hs_inner",
    "apply_As",
    "weighted_lq_norm",
    "weighted_integral",
    "l2_pairing",
    "l2_inner",
    "hs_orthonormal_basis",
]

TAIL_TOL = 1e-12


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / gamma(n / 2)


@dataclass(frozen=True)
class SobolevContext:
    """Dimension, smoothness order and the transform plan of order ``n/2 - 1``."""

    n: int
    s: float
    plan: HankelPlan

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if self.plan.alpha != self.n / 2 - 1:
            raise DomainError(
                f"plan order {self.plan.alpha} does not match n/2 - 1 = {self.n / 2 - 1}"
            )

    @property
    def grid(self) -> RadialGrid:
        return self.plan.grid

    def with_s(self, s: float) -> "SobolevContext":
        return SobolevContext(self.n, s, self.plan)


def _check_on_grid(ctx: SobolevContext, u: RadialProfile) -> None:
    if not ctx.grid.same_as(u.grid):
        raise ValueError("profile is not on the context's physical grid")


def _multiplier(ctx: SobolevContext, power: float) -> np.ndarray:
    rho = ctx.plan.dual_grid.nodes
    return (1.0 + rho**2) ** power


def hs_inner(ctx: SobolevContext, u: RadialProfile, v: RadialProfile) -> float:
    """``<u, v>_{H^s}``, computed on the transform side."""
    _check_on_grid(ctx, u)
    _check_on_grid(ctx, v)
    n = ctx.n
    uh = radial_fourier(n, u, ctx.plan).values
    vh = radial_fourier(n, v, ctx.plan).values
    dual = ctx.plan.dual_grid
    integrand = _multiplier(ctx, ctx.s) * uh * vh
    return (2 * math.pi) ** (-n) * sphere_area(n) * dual.integrate(integrand, n - 1)


def hs_norm(ctx: SobolevContext, u: RadialProfile) -> float:
    """``||u||_{H^s}`` with the inner product ``(2 pi)^-n int (1+|w|^2)^s u^ v^ dw``."""
    return math.sqrt(max(hs_inner(ctx, u, u), 0.0))


def apply_As(ctx: SobolevContext, u: RadialProfile) -> RadialProfile:
    """Bessel potential ``A^s u = (-Delta + I)^{s/2} u`` as a Fourier multiplier."""
    _check_on_grid(ctx, u)
    if ctx.s == 0:
        return u
    hat = apply(ctx.plan, u)
    return apply(ctx.plan, hat * _multiplier(ctx, ctx.s / 2))


def l2_inner(n: int, u: RadialProfile, v: RadialProfile) -> float:
    """``int_{R^n} u v dx`` using the grid's sampling weights."""
    if not u.grid.same_as(v.grid):
        raise ValueError("profiles live on different grids")
    return sphere_area(n) * u.grid.integrate(u.values * v.values, n - 1)


def l2_pairing(
    ctx_s: SobolevContext, ctx_t: SobolevContext, u: RadialProfile, v: RadialProfile
) -> float:
    """``int_{R^n} A^s u * A^t v dx``."""
    if ctx_s.n != ctx_t.n:
        raise ValueError("contexts disagree on the dimension")
    return l2_inner(ctx_s.n, apply_As(ctx_s, u), apply_As(ctx_t, v))


@dataclass(frozen=True)
class WeightedRule:
    """Product-integration rule for ``int_0^{r_N} r**gamma F(u(r)) dr``.

    Samples are interpolated to ``points`` by local Lagrange stencils
    (``index``/``coeff``), and the power weight is integrated exactly on the
    first panel by Gauss-Jacobi.
    """

    gamma: float
    points: np.ndarray
    weights: np.ndarray
    index: np.ndarray
    coeff: np.ndarray

    def interp(self, values: np.ndarray) -> np.ndarray:
        """Interpolate node samples (last axis) to the rule's points."""
        values = np.asarray(values)
        return np.sum(values[..., self.index] * self.coeff, axis=-1)


def _lagrange(stencil: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lagrange basis values; stencil (P, m), t (P, g) -> (P, g, m)."""
    m = stencil.shape[1]
    out = np.ones(t.shape + (m,))
    for j in range(m):
        for l in range(m):
            if l != j:
                out[..., j] *= (t - stencil[:, l, None]) / (
                    stencil[:, j, None] - stencil[:, l, None]
                )
    return out


def weighted_rule(grid: RadialGrid, gamma_: float, order: int = 8, gauss: int = 8) -> WeightedRule:
    """Cached product-integration rule for the weight ``r**gamma_`` on ``grid``."""
    if gamma_ <= -1:
        raise DomainError(f"r**{gamma_} is not integrable at the origin")
    key = ("weighted_rule", float(gamma_), order, gauss)
    if key in grid._cache:
        return grid._cache[key]
    x = grid.nodes
    N = x.size
    order = min(order, N)
    left = np.concatenate([[0.0], x[:-1]])
    right = x
    h = right - left

    gl_t, gl_w = roots_legendre(gauss)
    pts = left[:, None] + 0.5 * h[:, None] * (gl_t[None, :] + 1.0)
    wts = 0.5 * h[:, None] * gl_w[None, :] * pts**gamma_
    # first panel [0, r_1]: weight (1 + t)**gamma on [-1, 1]
    gj_t, gj_w = roots_jacobi(gauss, 0.0, gamma_)
    pts[0] = 0.5 * h[0] * (gj_t + 1.0)
    wts[0] = (0.5 * h[0]) ** (gamma_ + 1.0) * gj_w

    panel = np.arange(N)
    start = np.clip(panel - order // 2, 0, N - order)
    idx = start[:, None] + np.arange(order)[None, :]
    coeff = _lagrange(x[idx], pts)
    index = np.broadcast_to(idx[:, None, :], coeff.shape)

    rule = WeightedRule(
        float(gamma_),
        pts.ravel(),
        wts.ravel(),
        np.ascontiguousarray(index.reshape(-1, order)),
        coeff.reshape(-1, order),
    )
    grid._cache[key] = rule
    return rule


def _tail_check(u: RadialProfile, what: str) -> None:
    vals = np.abs(u.values)
    peak = vals.max()
    if peak > 0 and vals[-1] > TAIL_TOL * peak:
        warnings.warn(
            f"{what}: profile is {vals[-1] / peak:.1e} of its peak at the cutoff",
            TailWarning,
            stacklevel=3,
        )


def weighted_integral(n: int, c: float, u: RadialProfile, fn, order: int = 8) -> float:
    """``c_n int_0^inf r**(c+n-1) fn(u0(r)) dr`` with ``fn`` applied pointwise."""
    if c + n <= 0:
        raise DomainError(f"|x|^{c} is not locally integrable in R^{n}")
    rule = weighted_rule(u.grid, c + n - 1, order)
    return sphere_area(n) * float(rule.weights @ fn(rule.interp(u.values)))


def weighted_lq_norm(n: int, q: float, c: float, u: RadialProfile, order: int = 8) -> float:
    """``( int_{R^n} |x|^c |u|^q dx )^{1/q}``."""
    if not q > 1:
        raise DomainError(f"exponent q must exceed 1, got {q}")
    _tail_check(u, "weighted_lq_norm")
    val = weighted_integral(n, c, u, lambda w: np.abs(w) ** q, order)
    return max(val, 0.0) ** (1.0 / q)


def hs_orthonormal_basis(ctx: SobolevContext, k: int) -> list[RadialProfile]:
    """First ``k`` members of the H^s-orthonormal basis from seeds ``r**(2j) exp(-r**2/2)``.

    Gram-Schmidt depends only on the nested spans of the seeds, so the seeds are
    generated as Laguerre functions ``L_j^{(n/2-1)}(r**2) exp(-r**2/2)``, which
    span the same nested spaces but are far better conditioned.  Signs are
    chosen so each result has a positive leading ``r**(2j)`` coefficient,
    matching Gram-Schmidt on the monomials themselves.
    """
    from scipy.special import eval_genlaguerre

    if k < 1:
        raise ValueError("basis dimension must be >= 1")
    r = ctx.grid.nodes
    a = ctx.n / 2 - 1
    seeds = np.array(
        [(-1) ** j * eval_genlaguerre(j, a, r**2) * np.exp(-(r**2) / 2) for j in range(k)]
    )
    # H^s inner product = plain dot product of these transformed rows
    dual = ctx.plan.dual_grid
    scale = np.sqrt(
        (2 * math.pi) ** (-ctx.n)
        * sphere_area(ctx.n)
        * dual.weights
        * dual.nodes ** (ctx.n - 1)
        * _multiplier(ctx, ctx.s)
    )
    hat = (2 * math.pi) ** (ctx.n / 2) * (seeds @ ctx.plan.kernel.T)
    rows = hat * scale[None, :]

    gram = rows @ rows.T
    cond = np.linalg.cond(gram)
    if cond > 1e12:
        raise np.linalg.LinAlgError(
            f"seed Gram matrix condition number {cond:.1e} exceeds 1e12; reduce k"
        )
    coef = np.eye(k)
    q = rows.copy()
    for j in range(k):
        for _ in range(2):  # reorthogonalize once
            proj = q[:j] @ q[j]
            q[j] -= proj @ q[:j]
            coef[j] -= proj @ coef[:j]
        nrm = np.linalg.norm(q[j])
        q[j] /= nrm
        coef[j] /= nrm
    basis = coef @ seeds
    return [RadialProfile(ctx.grid, b) for b in basis]
