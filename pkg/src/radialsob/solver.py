"""Galerkin critical-point search for the Hamiltonian system, and a shooting oracle.

The Galerkin space pairs an H^s-orthonormal basis ``e_j`` with
``f_j = A^{-t} A^s e_j``, which is H^t-orthonormal.  Critical points of Phi
restricted to that space are found by damped Newton with multiplicative
deflation; multiplicity searches deflate both ``z`` and ``-z`` because Phi is
even.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.optimize import minimize_scalar, root
from scipy.special import kve

from .hankel import RadialProfile, interpolate, make_plan
from .space import SobolevContext, apply_As, hs_inner, hs_orthonormal_basis, sphere_area, weighted_rule
from .system import (
    ProblemParams,
    StatePair,
    format_config,
    grad_phi,
    hess_phi,
    phi_coeffs,
    scaling_T_coeffs,
)

__all__ = [
    "GalerkinBasis",
    "CriticalPoint",
    "ShootingResult",
    "build_basis",
    "newton_solve",
    "find_multiple",
    "refine",
    "shooting_oracle",
    "oracle_discrepancy",
    "write_solution",
]

DEFAULT_TOL = 1e-10
DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True, eq=False)
class GalerkinBasis:
    """Basis pairs plus everything Phi needs in coefficient form.

    ``e_rule``/``f_rule`` hold the basis interpolated onto the product rules for
    ``r^(b+n-1)`` and ``r^(a+n-1)``; ``u_weights``/``v_weights`` are those rules'
    weights times the sphere area.
    """

    params: ProblemParams
    k: int
    e: tuple
    f: tuple
    pairing: np.ndarray
    e_rule: np.ndarray
    f_rule: np.ndarray
    u_weights: np.ndarray
    v_weights: np.ndarray

    @property
    def grid(self):
        return self.e[0].grid

    @property
    def plan(self):
        from .hankel import plan_for

        return plan_for(self.grid)

    def state(self, x) -> StatePair:
        x = np.asarray(x, dtype=float)
        c, d = x[: self.k], x[self.k :]
        E = np.array([b.values for b in self.e])
        F = np.array([b.values for b in self.f])
        return StatePair(RadialProfile(self.grid, c @ E), RadialProfile(self.grid, d @ F))

    def gram(self, which: str = "e") -> np.ndarray:
        if which == "e":
            ctx, fam = SobolevContext(self.params.n, self.params.s, self.plan), self.e
        else:
            ctx, fam = SobolevContext(self.params.n, self.params.t, self.plan), self.f
        return np.array([[hs_inner(ctx, a, b) for b in fam] for a in fam])


def build_basis(params: ProblemParams, k: int, N: int = 512, R: float = 40.0) -> GalerkinBasis:
    """Orthonormal Galerkin pairs of dimension ``k`` on an ``N``-node grid of radius ``R``."""
    if k < 1:
        raise ValueError("basis dimension must be >= 1")
    n = params.n
    plan = make_plan(n / 2 - 1, N, R)
    ctx_s = SobolevContext(n, params.s, plan)
    e = hs_orthonormal_basis(ctx_s, k)
    shift = SobolevContext(n, params.s - params.t, plan)
    f = [apply_As(shift, ej) for ej in e]

    ctx_t = SobolevContext(n, params.t, plan)
    A_e = np.array([apply_As(ctx_s, ej).values for ej in e])
    A_f = np.array([apply_As(ctx_t, fj).values for fj in f])
    w = sphere_area(n) * plan.grid.weights * plan.grid.nodes ** (n - 1)
    pairing = (A_e * w) @ A_f.T

    E = np.array([ej.values for ej in e])
    F = np.array([fj.values for fj in f])
    rule_u = weighted_rule(plan.grid, params.b + n - 1)
    rule_v = weighted_rule(plan.grid, params.a + n - 1)
    return GalerkinBasis(
        params,
        k,
        tuple(e),
        tuple(f),
        pairing,
        rule_u.interp(E),
        rule_v.interp(F),
        sphere_area(n) * rule_u.weights,
        sphere_area(n) * rule_v.weights,
    )


@dataclass(frozen=True)
class CriticalPoint:
    coeffs_u: np.ndarray
    coeffs_v: np.ndarray
    residual: float
    phi_value: float
    iterations: int
    converged: bool
    label: str = "converged"
    pseudo_inverse_steps: int = 0

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([self.coeffs_u, self.coeffs_v])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def negated(self) -> "CriticalPoint":
        return CriticalPoint(
            -self.coeffs_u, -self.coeffs_v, self.residual, self.phi_value, self.iterations,
            self.converged, self.label, self.pseudo_inverse_steps,
        )


def _deflation(x: np.ndarray, roots: Sequence[np.ndarray], power: float = 2.0, shift: float = 1.0):
    """``m(x) = prod(||x - x_i||^-power + shift)`` and ``grad(m) / m``."""
    m = 1.0
    g = np.zeros_like(x)
    for r in roots:
        diff = x - r
        d2 = float(diff @ diff)
        if d2 == 0.0:
            return math.inf, g
        term = d2 ** (-power / 2)
        m *= term + shift
        g += (-power * d2 ** (-power / 2 - 1) * diff) / (term + shift)
    return m, g


def newton_solve(
    params: ProblemParams,
    basis: GalerkinBasis,
    x0,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100,
    deflate: Sequence[np.ndarray] = (),
) -> CriticalPoint:
    """Damped Newton on ``grad Phi = 0`` in the ``2k`` coefficient space.

    With ``deflate`` nonempty the step is the Newton step of
    ``m(x) grad Phi(x)`` for the deflation factor ``m``, which repels the
    iteration from the listed points.  A near-singular Jacobian falls back to a
    pseudo-inverse step (counted in ``pseudo_inverse_steps``).  Five
    consecutive residual increases abort the run.  The last iterate is always
    returned, labeled ``converged``, ``max_iter`` or ``diverged``.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (2 * basis.k,):
        raise ValueError(f"expected {2 * basis.k} coefficients")
    roots = [np.asarray(r, dtype=float) for r in deflate]
    g = grad_phi(params, basis, x)
    res = float(np.max(np.abs(g)))
    growth = 0
    pinv_steps = 0
    label = "max_iter"
    it = 0
    while res >= tol:
        if it == max_iter:
            break
        it += 1
        J = hess_phi(params, basis, x)
        if np.linalg.cond(J) < 1e14:
            step = -np.linalg.solve(J, g)
        else:
            step = -np.linalg.pinv(J, rcond=1e-12) @ g
            pinv_steps += 1
        if roots:
            _, dlog = _deflation(x, roots)
            denom = 1.0 - float(dlog @ step)
            if denom != 0.0:
                step = step / denom

        # backtracking on the deflated residual
        m0 = _deflation(x, roots)[0] if roots else 1.0
        merit0 = m0 * float(np.linalg.norm(g))
        tau = 1.0
        while True:
            trial = x + tau * step
            g_trial = grad_phi(params, basis, trial)
            m1 = _deflation(trial, roots)[0] if roots else 1.0
            if m1 * float(np.linalg.norm(g_trial)) < merit0 or tau < 1e-4:
                break
            tau *= 0.5
        x, g = trial, g_trial
        new_res = float(np.max(np.abs(g)))
        growth = growth + 1 if new_res > res else 0
        res = new_res
        if not np.isfinite(res) or growth >= 5:
            label = "diverged"
            break
    if res < tol:
        label = "converged"
    k = basis.k
    return CriticalPoint(
        x[:k].copy(), x[k:].copy(), res, phi_coeffs(params, basis, x), it,
        label == "converged", label, pinv_steps,
    )


def _initial(rng: np.random.Generator, params: ProblemParams, basis: GalerkinBasis, decay: float) -> np.ndarray:
    """E+-biased random state moved to the top of its scaling ray.

    The direction is ``(w + e, w - e)`` with a small E- part ``e``; it is then
    rescaled by ``T_lam`` with ``lam`` maximizing ``Phi(T_lam z)``.
    """
    k = basis.k
    taper = (1.0 + np.arange(k)) ** -decay
    w = rng.standard_normal(k) * taper
    w /= np.linalg.norm(w)
    e = 0.1 * rng.standard_normal(k) * taper
    z = np.concatenate([w + e, w - e])
    best = minimize_scalar(
        lambda ll: -phi_coeffs(params, basis, scaling_T_coeffs(params, basis, math.exp(ll), z)),
        bounds=(-10.0, 30.0),
        method="bounded",
    )
    return scaling_T_coeffs(params, basis, math.exp(best.x), z)


@dataclass
class MultiplicityResult:
    points: list
    starts_used: int
    shortfall: int
    phi_gaps: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def find_multiple(
    params: ProblemParams,
    basis: GalerkinBasis,
    D: int,
    seed: int = DEFAULT_SEED,
    starts: int = 64,
    delta: float = 1e-3,
    tol: float = DEFAULT_TOL,
    round_size: int = 8,
    workers: int = 1,
    decays: Sequence[float] = (1.0, 0.5, 0.0),
) -> MultiplicityResult:
    """Search for ``D`` distinct nontrivial critical points, sorted by Phi.

    At most ``D`` points are returned; ``shortfall`` counts the missing ones.

    Starts come in fixed rounds of ``round_size``; within a round every Newton
    run deflates the same snapshot of known points (including negatives and
    the origin), so results do not depend on ``workers``.  Two points are
    distinct when their coefficient distance exceeds ``delta`` for both signs.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    rng = np.random.default_rng(seed)
    found: list[CriticalPoint] = []
    zero = np.zeros(2 * basis.k)
    used = 0

    def distinct(cp: CriticalPoint) -> bool:
        x = cp.coeffs
        if np.linalg.norm(x) <= delta:
            return False
        return all(
            np.linalg.norm(x - y.coeffs) > delta and np.linalg.norm(x + y.coeffs) > delta
            for y in found
        )

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while used < starts and len(found) < D:
            batch = min(round_size, starts - used)
            inits = [
                _initial(rng, params, basis, decays[(used + i) % len(decays)])
                for i in range(batch)
            ]
            used += batch
            snapshot = [zero] + [y.coeffs for y in found] + [-y.coeffs for y in found]

            def run(x0):
                return newton_solve(params, basis, x0, tol=tol, max_iter=200, deflate=snapshot)

            results = list(pool.map(run, inits)) if pool else [run(x0) for x0 in inits]
            for cp in results:
                if cp.converged and distinct(cp):
                    # canonical sign: positive first u-coefficient
                    found.append(cp if cp.coeffs_u[0] >= 0 else cp.negated())
    finally:
        if pool:
            pool.shutdown()
    # a round can overshoot D; keep the lowest critical values
    found = sorted(found, key=lambda cp: cp.phi_value)[:D]
    gaps = [b.phi_value - a.phi_value for a, b in zip(found, found[1:])]
    return MultiplicityResult(found, used, max(D - len(found), 0), gaps)


def refine(
    params: ProblemParams, cp: CriticalPoint, basis_fine: GalerkinBasis, tol: float = DEFAULT_TOL
) -> CriticalPoint:
    """Re-converge ``cp`` in a larger basis built on the same grid.

    Gram-Schmidt on nested seed spans leaves the first ``k`` basis functions
    unchanged, so the old coefficients are padded with zeros.
    """
    k = cp.coeffs_u.size
    pad = basis_fine.k - k
    if pad < 0:
        raise ValueError("refinement basis is smaller than the solution's")
    x0 = np.concatenate([cp.coeffs_u, np.zeros(pad), cp.coeffs_v, np.zeros(pad)])
    return newton_solve(params, basis_fine, x0, tol=tol)


# --- shooting oracle ------------------------------------------------------


@dataclass(frozen=True)
class ShootingResult:
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    u0: float
    v0: float
    mismatch: float
    converged: bool
    bracket: tuple = ()


def _rhs(params: ProblemParams):
    n, p, q, a, b = params.n, params.p, params.q, params.a, params.b

    def f(r, y):
        u, du, v, dv = y
        return [
            du,
            -(n - 1) / r * du + u - r**a * abs(v) ** (p - 2) * v,
            dv,
            -(n - 1) / r * dv + v - r**b * abs(u) ** (q - 2) * u,
        ]

    return f


def _start(params: ProblemParams, u0: float, v0: float, eps: float) -> list[float]:
    # regular expansion at the origin, up to the weighted terms
    n, p, q, a, b = params.n, params.p, params.q, params.a, params.b
    gv = abs(v0) ** (p - 2) * v0
    gu = abs(u0) ** (q - 2) * u0
    return [
        u0 + u0 * eps**2 / (2 * n) - gv * eps ** (a + 2) / ((a + 2) * (a + n)),
        u0 * eps / n - gv * eps ** (a + 1) / (a + n),
        v0 + v0 * eps**2 / (2 * n) - gu * eps ** (b + 2) / ((b + 2) * (b + n)),
        v0 * eps / n - gu * eps ** (b + 1) / (b + n),
    ]


def _robin(n: int, r: float) -> float:
    # decaying radial solution of -w'' - (n-1)/r w' + w = 0 is r^-nu K_nu(r), nu = n/2 - 1
    nu = n / 2 - 1
    return kve(nu + 1, r) / kve(nu, r)


def _integrate(params, u0, v0, r_end, eps, dense=False, events=None):
    return solve_ivp(
        _rhs(params), (eps, r_end), _start(params, u0, v0, eps), method="DOP853",
        rtol=1e-12, atol=1e-14, dense_output=dense, events=events,
    )


def _classify(params: ProblemParams, u0: float, nodes: int, eps: float, r_max: float) -> bool:
    """True when the symmetric shot from ``u0`` overshoots (more than ``nodes`` zeros)."""

    def zero(r, y):
        return y[0]

    def turn(r, y):
        return y[1]

    def blowup(r, y):
        return abs(y[0]) - 1e3 * max(1.0, abs(u0))

    blowup.terminal = True
    sol = _integrate(params, u0, u0, r_max, eps, events=[zero, turn, blowup])
    zeros = sol.t_events[0]
    rhs = _rhs(params)
    for r_t, y_t in zip(sol.t_events[1], sol.y_events[1]):
        # a turning point of |u| away from zero ends the classification
        if y_t[0] * rhs(r_t, y_t)[1] > 0:
            return int(np.sum(zeros < r_t)) > nodes
    return len(zeros) > nodes


def _collocation_guess(params: ProblemParams, nodal_index: int, r_end: float, eps: float, r_max: float):
    """``(u(0), v(0))`` from a loose collocation solve seeded by the averaged symmetric shot."""
    pm, am = 0.5 * (params.p + params.q), 0.5 * (params.a + params.b)
    avg = ProblemParams(params.n, pm, pm, am, am)
    g = shooting_oracle(avg, nodal_index, r_end, 401, eps, r_max)
    n, p, q, a, b = params.n, params.p, params.q, params.a, params.b
    kappa = _robin(n, r_end)
    S = np.zeros((4, 4))
    S[1, 1] = S[3, 3] = -(n - 1)

    def f(r, y):
        u, du, v, dv = y
        return np.vstack([du, u - r**a * np.abs(v) ** (p - 2) * v, dv, v - r**b * np.abs(u) ** (q - 2) * u])

    def bc(ya, yb):
        return np.array([ya[1], ya[3], yb[1] + kappa * yb[0], yb[3] + kappa * yb[2]])

    y0 = np.vstack([g.u, np.gradient(g.u, g.r), g.v, np.gradient(g.v, g.r)])
    # the r^a cusp at the origin keeps collocation refining; a loose solve suffices
    sol = solve_bvp(f, bc, g.r, y0, S=S, tol=1e-6, max_nodes=20000)
    return float(sol.y[0, 0]), float(sol.y[2, 0])


def shooting_oracle(
    params: ProblemParams,
    nodal_index: int = 0,
    r_end: float = 10.0,
    points: int = 1001,
    eps: float = 1e-6,
    r_max: float = 30.0,
    initial: tuple[float, float] | None = None,
) -> ShootingResult:
    """Radial ODE solution of the system with ``s = t = 1``, by shooting from the origin.

    Symmetric data (``p = q``, ``a = b``) bisect on ``u(0) = v(0)`` by zero count
    (``nodal_index`` zeros); otherwise a 2D root on ``(u(0), v(0))`` enforces the
    decaying-tail Robin condition at ``r_end``.  That root starts from
    ``initial`` or from a collocation solve seeded by the symmetric problem
    with averaged exponents and weights.  Profiles are returned on a uniform
    grid of ``[0, r_end]``; ``mismatch`` is the Robin residual at ``r_end``.
    """
    if abs(params.s - 1.0) > 1e-14:
        raise ValueError("the shooting oracle needs s = t = 1")
    kappa = _robin(params.n, r_end)
    bracket: tuple = ()
    if params.symmetric and initial is None:
        lo, hi = 1e-3, 1.0
        if _classify(params, lo, nodal_index, eps, r_max):
            raise RuntimeError("lower shooting bracket overshoots")
        while not _classify(params, hi, nodal_index, eps, r_max):
            lo, hi = hi, 2 * hi
            if hi > 1e6:
                raise RuntimeError("no overshooting start found")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if _classify(params, mid, nodal_index, eps, r_max):
                hi = mid
            else:
                lo = mid
        u0 = v0 = lo
        bracket = (lo, hi)
        converged = True
    else:
        z0 = initial if initial is not None else _collocation_guess(params, nodal_index, r_end, eps, r_max)

        def resid(z):
            y = _integrate(params, z[0], z[1], r_end, eps).y[:, -1]
            return [y[1] + kappa * y[0], y[3] + kappa * y[2]]

        out = root(resid, z0, method="hybr", options={"xtol": 1e-15})
        u0, v0 = map(float, out.x)
        # hybr reports failure once round-off stalls it; judge by the residual
        converged = bool(np.max(np.abs(out.fun)) < 1e-8)
        bracket = tuple(map(float, z0))

    r = np.linspace(0.0, r_end, points)
    if u0 == 0.0 and v0 == 0.0:
        z = np.zeros_like(r)
        return ShootingResult(r, z, z.copy(), 0.0, 0.0, 0.0, True, bracket)
    sol = _integrate(params, u0, v0, r_end, eps, dense=True)
    Y = sol.sol(np.clip(r, eps, None))
    y_end = sol.y[:, -1]
    mismatch = max(abs(y_end[1] + kappa * y_end[0]), abs(y_end[3] + kappa * y_end[2]))
    return ShootingResult(r, Y[0], Y[2], u0, v0, float(mismatch), converged, bracket)


def oracle_discrepancy(basis: GalerkinBasis, cp: CriticalPoint, shot: ShootingResult) -> float:
    """Sup-norm distance between the Galerkin pair and the shooting pair on the shot's grid.

    The Galerkin sign is matched to the shot first.
    """
    z = basis.state(cp.coeffs)
    u = interpolate(basis.plan, z.u, shot.r)
    v = interpolate(basis.plan, z.v, shot.r)
    if u[0] * shot.u[0] < 0:
        u, v = -u, -v
    return float(max(np.max(np.abs(u - shot.u)), np.max(np.abs(v - shot.v))))


def write_solution(
    path, params: ProblemParams, basis: GalerkinBasis, cp: CriticalPoint, seed: int | None = None
) -> tuple[Path, Path]:
    """Write ``r,u,v`` rows on the physical grid and a JSON metadata sidecar."""
    path = Path(path)
    z = basis.state(cp.coeffs)
    rows = ["r,u,v"] + [
        f"{r:.17g},{u:.17g},{v:.17g}" for r, u, v in zip(z.u.grid.nodes, z.u.values, z.v.values)
    ]
    path.write_text("\n".join(rows) + "\n")
    meta = {
        "params": {"n": params.n, "p": params.p, "q": params.q, "a": params.a, "b": params.b,
                   "s": params.s, "t": params.t},
        "config": format_config(params),
        "k": basis.k,
        "N": basis.grid.size,
        "R": basis.grid.cutoff,
        "residual": cp.residual,
        "phi_value": cp.phi_value,
        "iterations": cp.iterations,
        "converged": cp.converged,
        "seed": seed,
        "coeffs_u": cp.coeffs_u.tolist(),
        "coeffs_v": cp.coeffs_v.tolist(),
    }
    side = path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side
