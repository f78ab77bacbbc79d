"""The weighted Hamiltonian system and its strongly indefinite functional.

    -Delta u + u = |x|^a |v|^{p-2} v
    -Delta v + v = |x|^b |u|^{q-2} u

Weak (s,t)-solutions, ``s + t = 2``, are critical points of

    Phi(u, v) = int A^s u A^t v - int H(x, u, v),
    H(x, u, v) = |x|^b |u|^q / q + |x|^a |v|^p / p

on radial ``H^s x H^t``.  Profile-level functions take a :class:`StatePair`;
the ``*_coeffs`` variants work in Galerkin coordinates ``x = (c, d)`` with
``u = sum c_j e_j`` and ``v = sum d_j f_j`` (see :mod:`radialsob.solver`).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .embedding import AdmissibilityReport, Condition, strict
from .hankel import RadialProfile, plan_for
from .space import (
    SobolevContext,
    apply_As,
    hs_norm,
    l2_inner,
    weighted_integral,
    weighted_lq_norm,
)

__all__ = [
    "EmptyFeasibleInterval",
    "ProblemParams",
    "StatePair",
    "PSReport",
    "check_conditions",
    "st_interval",
    "choose_st",
    "parse_config",
    "format_config",
    "hamiltonian",
    "contexts",
    "quadratic_part",
    "hamiltonian_integral",
    "phi",
    "dphi",
    "e_norm",
    "eigen_split",
    "scaling_exponents",
    "scaling_T",
    "ps_diagnostics",
    "phi_coeffs",
    "grad_phi",
    "hess_phi",
    "fd_gradient",
    "eigen_split_coeffs",
    "scaling_T_coeffs",
    "e_norm_coeffs",
    "small_sphere_min",
    "lambda_ladder",
]


class EmptyFeasibleInterval(ValueError):
    """No split s + t = 2 satisfies the embedding constraints for the given data."""


def check_conditions(n: int, p: float, q: float, a: float, b: float) -> AdmissibilityReport:
    """Hypotheses for infinitely many radial solutions, one entry per inequality.

    Superlinearity ``p, q > 2`` and ``1/p + 1/q < 1``; weight bounds
    ``0 < a < (n-1)(p-2)/2`` and likewise for ``b``; the subcritical
    hyperbola ``(n+a)/p + (n+b)/q > n-2``; and for ``n >= 5`` the extra bounds
    ``q < 2(n+b)/(n-4)``, ``p < 2(n+a)/(n-4)``.
    """
    conds = [
        strict("(2) p > 2", 2.0, p),
        strict("(2) q > 2", 2.0, q),
        strict("(2) 1/p + 1/q < 1", 1 / p + 1 / q, 1.0),
        strict("(3) 0 < a", 0.0, a),
        strict("(3) a < (n-1)(p-2)/2", a, (n - 1) * (p - 2) / 2),
        strict("(3) 0 < b", 0.0, b),
        strict("(3) b < (n-1)(q-2)/2", b, (n - 1) * (q - 2) / 2),
        strict("(4) (n+a)/p + (n+b)/q > n-2", n - 2.0, (n + a) / p + (n + b) / q),
    ]
    if n >= 5:
        conds += [
            strict("(5) q < 2(n+b)/(n-4)", q, 2 * (n + b) / (n - 4)),
            strict("(5) p < 2(n+a)/(n-4)", p, 2 * (n + a) / (n - 4)),
        ]
    else:
        conds += [Condition("(5) n <= 4: not required", True, math.inf)]
    return AdmissibilityReport(tuple(conds))


def st_interval(n: int, p: float, q: float, a: float, b: float) -> tuple[float, float]:
    """Open interval of s for which ``t = 2 - s`` gives both weighted embeddings."""
    lo = max((n - 2 * (n + b) / q) / 2, 0.0, 2 - n / 2)
    hi = min(2 - (n - 2 * (n + a) / p) / 2, n / 2, 2.0)
    return lo, hi


def choose_st(n: int, p: float, q: float, a: float, b: float) -> tuple[float, float]:
    """Midpoint of the feasible interval for s, and ``t = 2 - s``."""
    lo, hi = st_interval(n, p, q, a, b)
    if not lo < hi:
        raise EmptyFeasibleInterval(f"no feasible s: interval ({lo}, {hi}) is empty")
    s = 0.5 * (lo + hi)
    return s, 2.0 - s


@dataclass(frozen=True)
class ProblemParams:
    n: int
    p: float
    q: float
    a: float
    b: float
    s: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if abs(self.s + self.t - 2.0) > 1e-14:
            raise ValueError(f"s + t must equal 2, got s={self.s}, t={self.t}")

    @classmethod
    def from_raw(cls, n, p, q, a, b, s: float | None = None) -> "ProblemParams":
        """Build parameters, choosing ``(s, t)`` by :func:`choose_st` unless ``s`` is given."""
        if s is None:
            s, t = choose_st(n, p, q, a, b)
        else:
            t = 2.0 - s
        return cls(int(n), float(p), float(q), float(a), float(b), float(s), float(t))

    @property
    def raw(self) -> tuple:
        return (self.n, self.p, self.q, self.a, self.b)

    @property
    def symmetric(self) -> bool:
        return self.p == self.q and self.a == self.b


_CONFIG_KEYS = {"n": int, "p": float, "q": float, "a": float, "b": float, "s": float}


def parse_config(text: str) -> ProblemParams:
    """Parse ``n=3 p=4 q=4 a=0.5 b=0.5 [s=...]`` (whitespace or newline separated)."""
    found = {}
    body = re.sub(r"#.*", "", text)
    for token in body.split():
        if "=" not in token:
            raise ValueError(f"malformed config token {token!r}")
        key, val = token.split("=", 1)
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        found[key] = _CONFIG_KEYS[key](val)
    missing = {"n", "p", "q", "a", "b"} - found.keys()
    if missing:
        raise ValueError(f"config is missing {sorted(missing)}")
    return ProblemParams.from_raw(**found)


def format_config(params: ProblemParams, with_s: bool = True) -> str:
    parts = [f"n={params.n}", f"p={params.p:.17g}", f"q={params.q:.17g}", f"a={params.a:.17g}", f"b={params.b:.17g}"]
    if with_s:
        parts.append(f"s={params.s:.17g}")
    return " ".join(parts)


def read_config(path) -> ProblemParams:
    return parse_config(Path(path).read_text())


def hamiltonian(params: ProblemParams, r, u, v):
    """Pointwise ``H(r, u, v)``."""
    r, u, v = map(np.asarray, (r, u, v))
    return r**params.b * np.abs(u) ** params.q / params.q + r**params.a * np.abs(v) ** params.p / params.p


@dataclass(frozen=True, eq=False)
class StatePair:
    u: RadialProfile
    v: RadialProfile

    def __post_init__(self):
        if not self.u.grid.same_as(self.v.grid):
            raise ValueError("u and v must share a grid")

    def __neg__(self):
        return StatePair(-self.u, -self.v)

    def __add__(self, other: "StatePair"):
        return StatePair(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "StatePair"):
        return StatePair(self.u - other.u, self.v - other.v)

    def scale(self, cu: float, cv: float) -> "StatePair":
        return StatePair(cu * self.u, cv * self.v)


def contexts(params: ProblemParams, z: StatePair) -> tuple[SobolevContext, SobolevContext]:
    plan = plan_for(z.u.grid)
    return SobolevContext(params.n, params.s, plan), SobolevContext(params.n, params.t, plan)


def _power(params: ProblemParams, z: StatePair, expo: float, u: RadialProfile) -> RadialProfile:
    return apply_As(SobolevContext(params.n, expo, plan_for(z.u.grid)), u)


def quadratic_part(params: ProblemParams, z: StatePair) -> float:
    """``Q(z) = int A^s u A^t v``."""
    cs, ct = contexts(params, z)
    return l2_inner(params.n, apply_As(cs, z.u), apply_As(ct, z.v))


def _u_integral(params, u: RadialProfile) -> float:
    return weighted_integral(params.n, params.b, u, lambda w: np.abs(w) ** params.q)


def _v_integral(params, v: RadialProfile) -> float:
    return weighted_integral(params.n, params.a, v, lambda w: np.abs(w) ** params.p)


def hamiltonian_integral(params: ProblemParams, z: StatePair) -> float:
    """``Psi(z) = int H(x, u, v) dx``."""
    return _u_integral(params, z.u) / params.q + _v_integral(params, z.v) / params.p


def phi(params: ProblemParams, z: StatePair) -> float:
    return quadratic_part(params, z) - hamiltonian_integral(params, z)


def _weighted_pair(n: int, c: float, w: RadialProfile, eta: RadialProfile, expo: float) -> float:
    # int |x|^c |w|^{expo-2} w eta, with both factors interpolated on one rule
    from .space import sphere_area, weighted_rule

    rule = weighted_rule(w.grid, c + n - 1)
    wf = rule.interp(w.values)
    ef = rule.interp(eta.values)
    return sphere_area(n) * float(rule.weights @ (np.abs(wf) ** (expo - 2) * wf * ef))


def dphi(params: ProblemParams, z: StatePair, eta: StatePair) -> float:
    """Directional derivative ``Phi'(z) eta``."""
    cs, ct = contexts(params, z)
    quad = l2_inner(params.n, apply_As(cs, eta.u), apply_As(ct, z.v)) + l2_inner(
        params.n, apply_As(cs, z.u), apply_As(ct, eta.v)
    )
    return (
        quad
        - _weighted_pair(params.n, params.b, z.u, eta.u, params.q)
        - _weighted_pair(params.n, params.a, z.v, eta.v, params.p)
    )


def e_norm(params: ProblemParams, z: StatePair) -> float:
    """``||z||_E = (||u||_{H^s}^2 + ||v||_{H^t}^2)^{1/2}``."""
    cs, ct = contexts(params, z)
    return math.hypot(hs_norm(cs, z.u), hs_norm(ct, z.v))


def eigen_split(params: ProblemParams, z: StatePair) -> tuple[StatePair, StatePair]:
    """Decompose ``z = z_plus + z_minus`` along the +1 / -1 eigenspaces of the pairing.

    ``E+ = {(w, A^{s-t} w)}``, ``E- = {(w, -A^{s-t} w)}``; with
    ``w~ = A^{t-s} v`` the parts are ``((u +- w~)/2, +-A^{s-t}(u +- w~)/2)``.
    """
    ds = params.s - params.t
    w_tilde = _power(params, z, -ds, z.v)
    plus = 0.5 * (z.u + w_tilde)
    minus = 0.5 * (z.u - w_tilde)
    return (
        StatePair(plus, _power(params, z, ds, plus)),
        StatePair(minus, -_power(params, z, ds, minus)),
    )


def scaling_exponents(params: ProblemParams, m: float | None = None) -> tuple[float, float, float]:
    """``(m, mu, nu)`` with ``mu = (m-q)/q`` and ``nu = (m-p)/p``; default ``m = max(p,q)+1``."""
    if m is None:
        m = max(params.p, params.q) + 1.0
    if not m > max(params.p, params.q):
        raise ValueError(f"m must exceed max(p, q) = {max(params.p, params.q)}")
    return m, (m - params.q) / params.q, (m - params.p) / params.p


def scaling_T(params: ProblemParams, lam: float, z: StatePair, m: float | None = None) -> StatePair:
    """``T_lam(u, v) = (lam^mu u, lam^nu v)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    _, mu, nu = scaling_exponents(params, m)
    return z.scale(lam**mu, lam**nu)


@dataclass(frozen=True)
class PSReport:
    """Bounds along a (near-)critical point.

    ``v_ratio = ||v||_{H^t} / (||u||_{L^q(|x|^b)}^{q-1} + 1)`` and
    ``u_ratio = ||u||_{H^s} / (||v||_{L^p(|x|^a)}^{p-1} + 1)``.  The identity
    residual compares ``(pq/(p+q) - 1) Psi(z)`` with ``Phi(z) - Phi'(z) w``.
    """

    v_ratio: float
    u_ratio: float
    identity_residual: float
    identity_residual_literal: float
    hamiltonian: float
    degenerate: bool
    details: dict = field(default_factory=dict)


def ps_diagnostics(params: ProblemParams, z: StatePair) -> PSReport:
    """Palais-Smale style bounds and the Hamiltonian identity at ``z``.

    The test direction is ``w = pq/(p+q) * (u/q, v/p)``, for which the identity
    holds for every ``z``; ``identity_residual_literal`` uses
    ``pq/(p+q) * (u/p, v/q)``, which agrees only where ``Phi'(z) = 0`` or
    ``p = q``.
    """
    p, q = params.p, params.q
    cs, ct = contexts(params, z)
    lq_u = weighted_lq_norm(params.n, q, params.b, z.u)
    lp_v = weighted_lq_norm(params.n, p, params.a, z.v)
    hs_u, ht_v = hs_norm(cs, z.u), hs_norm(ct, z.v)
    psi = hamiltonian_integral(params, z)
    val = phi(params, z)
    k = p * q / (p + q)
    lhs = (k - 1.0) * psi

    w = z.scale(k / q, k / p)
    w_lit = z.scale(k / p, k / q)
    res = abs(lhs - (val - dphi(params, z, w)))
    res_lit = abs(lhs - (val - dphi(params, z, w_lit)))
    return PSReport(
        v_ratio=ht_v / (lq_u ** (q - 1) + 1.0),
        u_ratio=hs_u / (lp_v ** (p - 1) + 1.0),
        identity_residual=res,
        identity_residual_literal=res_lit,
        hamiltonian=psi,
        degenerate=bool(hs_u == 0 and ht_v == 0),
        details={"phi": val, "hs_u": hs_u, "ht_v": ht_v, "lq_u": lq_u, "lp_v": lp_v},
    )


# --- Galerkin coordinates -------------------------------------------------
# ``basis`` is a radialsob.solver.GalerkinBasis: it carries the pairing matrix
# P_ij = int A^s e_i A^t f_j and the basis interpolated onto the product rules
# for the |x|^b (u) and |x|^a (v) weights.


def _split(basis, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (2 * basis.k,):
        raise ValueError(f"expected {2 * basis.k} coefficients, got {x.shape}")
    return x[: basis.k], x[basis.k :]


def phi_coeffs(params: ProblemParams, basis, x) -> float:
    c, d = _split(basis, x)
    u = c @ basis.e_rule
    v = d @ basis.f_rule
    return float(
        c @ basis.pairing @ d
        - basis.u_weights @ np.abs(u) ** params.q / params.q
        - basis.v_weights @ np.abs(v) ** params.p / params.p
    )


def grad_phi(params: ProblemParams, basis, x) -> np.ndarray:
    """Partial derivatives of Phi along ``(e_j, 0)`` and ``(0, f_j)``."""
    c, d = _split(basis, x)
    u = c @ basis.e_rule
    v = d @ basis.f_rule
    hu = basis.u_weights * np.abs(u) ** (params.q - 2) * u
    hv = basis.v_weights * np.abs(v) ** (params.p - 2) * v
    return np.concatenate([basis.pairing @ d - basis.e_rule @ hu, basis.pairing.T @ c - basis.f_rule @ hv])


def hess_phi(params: ProblemParams, basis, x) -> np.ndarray:
    c, d = _split(basis, x)
    u = c @ basis.e_rule
    v = d @ basis.f_rule
    ju = (basis.e_rule * (basis.u_weights * (params.q - 1) * np.abs(u) ** (params.q - 2))) @ basis.e_rule.T
    jv = (basis.f_rule * (basis.v_weights * (params.p - 1) * np.abs(v) ** (params.p - 2))) @ basis.f_rule.T
    return np.block([[-ju, basis.pairing], [basis.pairing.T, -jv]])


def fd_gradient(params: ProblemParams, basis, x, step: float = 1e-5, order: int = 2) -> np.ndarray:
    """Central finite differences of :func:`phi_coeffs` (order 2 or 4)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        def f(h):
            y = x.copy()
            y[i] += h
            return phi_coeffs(params, basis, y)

        if order == 2:
            g[i] = (f(step) - f(-step)) / (2 * step)
        elif order == 4:
            g[i] = (8 * (f(step) - f(-step)) - (f(2 * step) - f(-2 * step))) / (12 * step)
        else:
            raise ValueError("order must be 2 or 4")
    return g


def eigen_split_coeffs(basis, x) -> tuple[np.ndarray, np.ndarray]:
    """E+/E- parts in coefficients: ``f_j = A^{s-t} e_j`` makes ``E+ = {c = d}``."""
    c, d = _split(basis, x)
    plus, minus = 0.5 * (c + d), 0.5 * (c - d)
    return np.concatenate([plus, plus]), np.concatenate([minus, -minus])


def e_norm_coeffs(basis, x) -> float:
    # e_j is H^s-orthonormal and f_j is H^t-orthonormal
    return float(np.linalg.norm(x))


def scaling_T_coeffs(params: ProblemParams, basis, lam: float, x, m: float | None = None) -> np.ndarray:
    _, mu, nu = scaling_exponents(params, m)
    c, d = _split(basis, x)
    return np.concatenate([lam**mu * c, lam**nu * d])


def small_sphere_min(
    params: ProblemParams, basis, radius: float = 0.1, directions: int = 50, seed: int = 0xC0FFEE
) -> tuple[float, np.ndarray]:
    """Minimum of Phi over seeded random E+ directions with ``||z||_E = radius``.

    Returns the minimum and all sampled values.
    """
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(directions):
        c = rng.standard_normal(basis.k)
        c *= radius / (math.sqrt(2.0) * np.linalg.norm(c))
        vals.append(phi_coeffs(params, basis, np.concatenate([c, c])))
    vals = np.array(vals)
    return float(vals.min()), vals


def lambda_ladder(params: ProblemParams, basis, x, lambdas, m: float | None = None) -> np.ndarray:
    """``Phi(T_lam z)`` along a ladder of lambdas."""
    return np.array([phi_coeffs(params, basis, scaling_T_coeffs(params, basis, lam, x, m)) for lam in lambdas])
