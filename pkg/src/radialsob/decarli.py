"""The three-parameter Hankel-type operators ``L^alpha_{nu,mu}``.

    L^alpha_{nu,mu} f(y) = y**mu * int_0^inf (x*y)**nu f(x) J_alpha(x*y) dx

The Fourier-Bessel transform is the member ``(alpha, alpha+1, -2*alpha-1)``.
Quadrature reuses the physical grid of the Hankel plan, so for that member the
output coincides with :func:`radialsob.hankel.apply`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import jv

from .hankel import (
    DomainError,
    HankelPlan,
    RadialProfile,
    TailWarning,
    plan_for,
)

__all__ = [
    "DeCarliParams",
    "AdmissibilityMargins",
    "apply_L",
    "fourier_bessel_params",
    "admissible_L_params",
    "check_invariance_1",
    "check_invariance_2",
    "lp_norm",
    "scaling_drift",
]

MU_TOL = 1e-12
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class DeCarliParams:
    alpha: float
    nu: float
    mu: float

    def __post_init__(self):
        if not self.alpha >= -0.5:
            raise DomainError(f"alpha must be >= -1/2, got {self.alpha}")


def fourier_bessel_params(alpha: float) -> DeCarliParams:
    return DeCarliParams(alpha, alpha + 1.0, -2.0 * alpha - 1.0)


def apply_L(
    params: DeCarliParams, f: RadialProfile, plan: HankelPlan | None = None
) -> RadialProfile:
    """Quadrature of ``L^alpha_{nu,mu} f`` at every dual node.

    Emits :class:`TailWarning` when the integrand has not decayed to 1e-10 of
    its peak at the last physical node.
    """
    if f.grid.alpha != params.alpha:
        raise DomainError(
            f"profile grid has order {f.grid.alpha}, operator has {params.alpha}"
        )
    plan = plan or plan_for(f.grid)
    if not plan.grid.same_as(f.grid):
        raise ValueError("L is applied to physical-grid profiles only")
    x, w = plan.grid.nodes, plan.grid.weights
    y = plan.dual_grid.nodes

    g = np.abs(f.values) * x**params.nu
    if g.max() > 0 and g[-1] > QUAD_TOL * g.max():
        warnings.warn(
            f"L quadrature not converged: tail ratio {g[-1] / g.max():.1e}",
            TailWarning,
            stacklevel=2,
        )
    xy = np.outer(y, x)
    kern = xy**params.nu * jv(params.alpha, xy)
    vals = y**params.mu * (kern @ (w * f.values))
    return RadialProfile(plan.dual_grid, vals)


@dataclass(frozen=True)
class AdmissibilityMargins:
    """Outcome of the L^p -> L^q boundedness test, with the slack of each condition.

    Positive slack means satisfied; ``mu_slack`` is ``-|mu - (1/p' - 1/q)|``.
    """

    admissible: bool
    mu_target: float
    mu_slack: float
    nu_lower_slack: float
    nu_upper_slack: float
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.admissible


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def admissible_L_params(params: DeCarliParams, p: float, q: float) -> AdmissibilityMargins:
    """Whether ``L^alpha_{nu,mu}`` is bounded from ``L^p(0,inf)`` to ``L^q(0,inf)``.

    Bounded iff ``mu = 1/p' - 1/q`` and
    ``-alpha - 1/p' < nu <= 1/2 - max(1/p' - 1/q, 0)``, for ``1 <= p <= q <= inf``.
    """
    if not (p >= 1):
        raise DomainError(f"p must be >= 1, got {p}")
    if p > q:
        raise DomainError(f"need p <= q, got p={p}, q={q}")
    inv_pp = 1.0 - _inv(p)  # 1/p'
    target = inv_pp - _inv(q)
    mu_gap = abs(params.mu - target)
    lower = params.nu - (-params.alpha - inv_pp)
    upper = (0.5 - max(target, 0.0)) - params.nu
    ok = mu_gap <= MU_TOL and lower > 0 and upper >= 0
    return AdmissibilityMargins(
        bool(ok),
        target,
        -mu_gap,
        lower,
        upper,
        {"p": p, "q": q, "inv_p_conjugate": inv_pp},
    )


def _relative(diff: np.ndarray, ref: np.ndarray, relative: bool) -> float:
    d = float(np.max(np.abs(diff))) if diff.size else 0.0
    if not relative:
        return d
    scale = float(np.max(np.abs(ref)))
    return d / scale if scale > 0 else d


def check_invariance_1(
    params: DeCarliParams,
    f: RadialProfile,
    e: float,
    plan: HankelPlan | None = None,
    relative: bool = False,
) -> float:
    """Max over dual nodes of ``|y^e L_{nu,mu} f - L_{nu,mu+e} f|``."""
    if e == 0:
        return 0.0
    lhs = apply_L(params, f, plan)
    rhs = apply_L(DeCarliParams(params.alpha, params.nu, params.mu + e), f, plan)
    lhs_v = lhs.grid.nodes**e * lhs.values
    return _relative(lhs_v - rhs.values, rhs.values, relative)


def check_invariance_2(
    params: DeCarliParams,
    f: RadialProfile,
    sigma: float,
    plan: HankelPlan | None = None,
    relative: bool = False,
) -> float:
    """Max over dual nodes of ``|L_{nu,mu} f - L_{nu-sigma,mu+sigma}(x^sigma f)|``."""
    if sigma == 0:
        return 0.0
    lhs = apply_L(params, f, plan)
    shifted = DeCarliParams(params.alpha, params.nu - sigma, params.mu + sigma)
    rhs = apply_L(shifted, f * f.grid.nodes**sigma, plan)
    return _relative(lhs.values - rhs.values, lhs.values, relative)


def lp_norm(u: RadialProfile, p: float) -> float:
    """``(int_0^inf |u|^p dr)^{1/p}`` with the grid's weights."""
    return u.grid.integrate(np.abs(u.values) ** p) ** (1.0 / p)


def scaling_drift(
    params: DeCarliParams,
    p: float,
    q: float,
    f: Callable[[np.ndarray], np.ndarray],
    plan: HankelPlan,
    lambdas: Sequence[float] = (1, 2, 4, 8),
) -> dict:
    """Ratios ``||L f_lam||_q / ||f_lam||_p`` over dilations ``f_lam(x) = f(lam x)``.

    For exact dilation covariance the ratio scales like
    ``lam**(mu - (1/p' - 1/q))``; that predicted power is returned alongside the
    measured one (normalized to ``lam = 1``).
    """
    gap = params.mu - ((1.0 - _inv(p)) - _inv(q))
    x = plan.grid.nodes
    ratios = []
    for lam in lambdas:
        f_lam = RadialProfile(plan.grid, f(lam * x))
        ratios.append(lp_norm(apply_L(params, f_lam, plan), q) / lp_norm(f_lam, p))
    ratios = np.array(ratios)
    lam = np.asarray(lambdas, dtype=float)
    return {
        "lambdas": lam,
        "ratios": ratios,
        "normalized": ratios / ratios[0],
        "predicted": (lam / lam[0]) ** gap,
        "exponent": gap,
    }
