"""The weighted embedding of radial H^s into L^q(R^n, |x|^c dx).

Admissible data: ``0 < s < n/2``, ``2 < q < 2(n+c)/(n-2s)`` and
``-2s < c < (n-1)(q-2)/2``, all strict.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .decarli import DeCarliParams, admissible_L_params
from .hankel import RadialProfile, make_plan
from .space import (
    SobolevContext,
    hs_norm,
    hs_orthonormal_basis,
    sphere_area,
    weighted_lq_norm,
    weighted_rule,
)

__all__ = [
    "Condition",
    "AdmissibilityReport",
    "EmbeddingParams",
    "ProofChain",
    "BestConstant",
    "ProbeRow",
    "check_embedding",
    "proof_chain_params",
    "tail_integral_change",
    "sample_admissible",
    "verify_inequality",
    "random_profiles",
    "estimate_best_constant",
    "concentration_probe",
    "sweep",
    "write_sweep_csv",
]

DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True)
class Condition:
    label: str
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class AdmissibilityReport:
    conditions: tuple[Condition, ...]
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def overall(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def __bool__(self) -> bool:
        return self.overall

    def __getitem__(self, label: str) -> Condition:
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(label)

    def table(self) -> str:
        width = max(len(c.label) for c in self.conditions)
        rows = [
            f"{c.label:<{width}}  {'ok  ' if c.satisfied else 'FAIL'}  margin={c.margin:+.6g}"
            for c in self.conditions
        ]
        return "\n".join(rows)


def strict(label: str, lo: float, hi: float) -> Condition:
    """Condition ``lo < hi`` with margin ``hi - lo``."""
    return Condition(label, bool(lo < hi), hi - lo)


@dataclass(frozen=True)
class EmbeddingParams:
    n: int
    s: float
    q: float
    c: float

    @property
    def critical_exponent(self) -> float:
        """``2*_c = 2(n+c)/(n-2s)``; infinite when ``s >= n/2``."""
        d = self.n - 2 * self.s
        return math.inf if d <= 0 else 2.0 * (self.n + self.c) / d

    @property
    def c_upper(self) -> float:
        return (self.n - 1) * (self.q - 2) / 2.0


def check_embedding(params: EmbeddingParams) -> AdmissibilityReport:
    n, s, q, c = params.n, params.s, params.q, params.c
    conds = (
        strict("0 < s", 0.0, s),
        strict("s < n/2", s, n / 2),
        strict("2 < q", 2.0, q),
        strict("q < 2(n+c)/(n-2s)", q, params.critical_exponent),
        strict("-2s < c", -2 * s, c),
        strict("c < (n-1)(q-2)/2", c, params.c_upper),
    )
    return AdmissibilityReport(conds, {"critical_exponent": params.critical_exponent})


@dataclass(frozen=True)
class ProofChain:
    decarli: DeCarliParams
    p: float
    sigma: float
    q: float


def proof_chain_params(params: EmbeddingParams) -> ProofChain:
    """Exponents that reduce the weighted bound to an L^p -> L^q Hankel estimate.

    ``p = nq/(nq-n-c)``, ``sigma = (n-1)/p``, ``alpha = n/2-1``,
    ``nu = alpha+1-sigma``, ``mu = -2 alpha - 1 + (c+n-1)/q + sigma``.
    """
    if not check_embedding(params):
        raise ValueError(f"{params} is not an admissible embedding")
    n, s, q, c = params.n, params.s, params.q, params.c
    p = n * q / (n * q - n - c)
    sigma = (n - 1) / p
    alpha = n / 2 - 1
    dc = DeCarliParams(alpha, alpha + 1 - sigma, -2 * alpha - 1 + (c + n - 1) / q + sigma)
    chain = ProofChain(dc, p, sigma, q)
    margins = admissible_L_params(dc, p, q)
    if not margins:
        raise RuntimeError(f"derived operator parameters are not admissible: {margins}")
    if not p > 2 * n / (2 * s + n):
        raise RuntimeError(f"integrability condition p > 2n/(2s+n) fails for p={p}")
    return chain


def _log_tail(n: int, expo: float, log_r: float) -> float:
    """``log int_R^inf (1+r^2)^{-expo} r^{n-1} dr`` for ``R = exp(log_r)``.

    Incomplete beta while ``R^2`` is representable, otherwise the leading
    term ``R^{-delta}/delta`` of the large-``R`` expansion (relative error
    ``O(R^-2)``), with ``delta = 2*expo - n``.
    """
    a, b = n / 2.0, expo - n / 2.0
    if log_r < 100.0:
        x = 1.0 / (1.0 + math.exp(2 * log_r))
        return math.log(0.5 * beta_fn(a, b) * betainc(b, a, x))
    delta = 2 * b
    return -delta * log_r - math.log(delta)


def tail_integral_change(params: EmbeddingParams, R0: float = 10.0, max_doublings: int = 200_000):
    """Cutoff-doubling convergence of ``int_0^R (1+r^2)^{-sp/(2-p)} r^{n-1} dr``.

    Returns ``(converged, last_change, log_R)`` where ``last_change`` is the
    relative change of the truncated integral between ``R/2`` and ``R``.  The
    cutoff is carried as ``log R``: near the boundary ``p -> 2n/(2s+n)`` the
    decay exponent is tiny and ``R`` leaves floating-point range long before
    the change drops below 1e-8.
    """
    chain = proof_chain_params(params)
    p, n, s = chain.p, params.n, params.s
    expo = s * p / (2 - p)
    if not 2 * expo > n:
        return False, math.inf, math.nan
    log_total = math.log(0.5 * beta_fn(n / 2.0, expo - n / 2.0))
    log_r = math.log(R0)
    step = math.log(2.0)
    change = math.inf
    for _ in range(max_doublings):
        hi, lo = _log_tail(n, expo, log_r), _log_tail(n, expo, log_r + step)
        # (tail(R) - tail(2R)) / total, in logs
        change = math.exp(hi - log_total) * -math.expm1(lo - hi)
        log_r += step
        if change < 1e-8:
            return True, change, log_r
    return False, change, log_r


def sample_admissible(count: int, seed: int = DEFAULT_SEED, dims: Sequence[int] = (2, 3, 4, 5, 6, 8)):
    """Random admissible tuples, drawn at relative positions in [0.05, 0.95] of each open range."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.choice(dims))
        s = rng.uniform(0.05, 0.95) * n / 2
        # c in (-2s, cmax) with q then chosen inside its admissible window
        c = -2 * s + rng.uniform(0.05, 0.95) * (2 * s + 2.0 * n)
        q_lo = max(2.0, 2.0 + 2.0 * c / (n - 1))
        q_hi = 2.0 * (n + c) / (n - 2 * s)
        if not q_lo < q_hi:
            continue
        q = q_lo + rng.uniform(0.05, 0.95) * (q_hi - q_lo)
        prm = EmbeddingParams(n, float(s), float(q), float(c))
        if check_embedding(prm):
            out.append(prm)
    return out


def _context(n: int, s: float, N: int, R: float) -> SobolevContext:
    return SobolevContext(n, s, make_plan(n / 2 - 1, N, R))


def verify_inequality(params: EmbeddingParams, u: RadialProfile, ctx: SobolevContext | None = None) -> float:
    """``||u||_{L^q(|x|^c)} / ||u||_{H^s}``."""
    if ctx is None:
        ctx = SobolevContext(params.n, params.s, make_plan(u.grid.alpha, u.grid.size, u.grid.plan_cutoff))
    denom = hs_norm(ctx, u)
    if denom < 1e-14:
        raise ZeroDivisionError("H^s norm vanishes; ratio undefined")
    return weighted_lq_norm(params.n, params.q, params.c, u) / denom


def random_profiles(ctx: SobolevContext, k: int, count: int, seed: int = DEFAULT_SEED) -> list[RadialProfile]:
    """Standard-normal combinations of the first ``k`` H^s-orthonormal basis functions."""
    basis = np.array([b.values for b in hs_orthonormal_basis(ctx, k)])
    coeffs = np.random.default_rng(seed).standard_normal((count, k))
    return [RadialProfile(ctx.grid, c @ basis) for c in coeffs]


@dataclass(frozen=True)
class BestConstant:
    value: float
    profile: RadialProfile
    coeffs: np.ndarray
    converged: bool
    iterations: int
    start_values: tuple = ()


class _RatioModel:
    """``log(||E c||_{L^q(|x|^c)} / |c|)`` and its gradient for an H^s-orthonormal E."""

    def __init__(self, params: EmbeddingParams, basis: np.ndarray, grid):
        self.q = params.q
        rule = weighted_rule(grid, params.c + params.n - 1)
        self.E = rule.interp(basis)  # (k, M)
        self.w = sphere_area(params.n) * rule.weights

    def value_grad(self, c: np.ndarray):
        u = c @ self.E
        au = np.abs(u)
        N = self.w @ au**self.q
        gN = self.E @ (self.w * au ** (self.q - 2) * u) * self.q
        cc = c @ c
        val = math.log(N) / self.q - 0.5 * math.log(cc)
        grad = gN / (self.q * N) - c / cc
        return val, grad


def estimate_best_constant(
    params: EmbeddingParams,
    k: int = 8,
    N: int = 512,
    R: float = 40.0,
    starts: int = 8,
    seed: int = DEFAULT_SEED,
    max_iter: int = 2000,
    tol: float = 1e-7,
    ctx: SobolevContext | None = None,
) -> BestConstant:
    """Largest embedding ratio over the span of the first ``k`` basis functions.

    Projected gradient ascent of the log-ratio on the unit sphere of
    coefficients (the basis is H^s-orthonormal).  Trial steps are
    Barzilai-Borwein lengths safeguarded by Armijo backtracking; a start is
    converged once the log-ratio changes by less than ``tol`` over a step and
    the tangent gradient is below ``sqrt(tol)``.
    """
    if not check_embedding(params):
        raise ValueError(f"{params} is not an admissible embedding")
    ctx = ctx or _context(params.n, params.s, N, R)
    basis_p = hs_orthonormal_basis(ctx, k)
    basis = np.array([b.values for b in basis_p])
    model = _RatioModel(params, basis, ctx.grid)
    rng = np.random.default_rng(seed)

    best = None
    finals = []
    all_converged = True
    total_iter = 0
    for _ in range(starts):
        c = rng.standard_normal(k)
        c /= np.linalg.norm(c)
        val, g = model.value_grad(c)
        g_t = g - (g @ c) * c  # tangent component
        step = 1.0
        converged = False
        for it in range(1, max_iter + 1):
            while True:
                trial = c + step * g_t
                trial /= np.linalg.norm(trial)
                tval, tg = model.value_grad(trial)
                if tval >= val + 1e-4 * step * (g_t @ g_t) or step < 1e-12:
                    break
                step *= 0.5
            tg_t = tg - (tg @ trial) * trial
            change = tval - val
            sk, yk = trial - c, tg_t - g_t
            c, val, g_t = trial, tval, tg_t
            curv = -(sk @ yk)
            step = float(np.clip((sk @ sk) / curv, 1e-6, 1e6)) if curv > 0 else 1.0
            if abs(change) < tol and np.linalg.norm(g_t) < math.sqrt(tol):
                converged = True
                break
        total_iter += it
        all_converged &= converged
        finals.append(math.exp(val))
        if best is None or val > best[0]:
            best = (val, c.copy())
    val, c = best
    return BestConstant(
        math.exp(val),
        RadialProfile(ctx.grid, c @ basis),
        c,
        all_converged,
        total_iter,
        tuple(finals),
    )


@dataclass(frozen=True)
class ProbeRow:
    lam: float
    hs: float
    lq: float
    resolved: bool

    @property
    def ratio(self) -> float:
        return self.lq / self.hs


def concentration_probe(
    params: EmbeddingParams,
    phi: Callable[[np.ndarray], np.ndarray],
    lambdas: Iterable[float] = (1, 2, 4, 8, 16),
    N: int = 2048,
    R: float = 4.0,
) -> list[ProbeRow]:
    """Norms of ``u_lam(r) = lam^{(n-2s)/2} phi(lam r)`` along a dilation ladder.

    A row is marked unresolved when ``u_lam`` has not decayed to 1e-10 of its
    peak by the last node on either side of the transform.
    """
    n, s = params.n, params.s
    ctx = _context(n, s, N, R)
    plan = ctx.plan
    rows = []
    for lam in lambdas:
        u = RadialProfile(ctx.grid, lam ** ((n - 2 * s) / 2) * phi(lam * ctx.grid.nodes))
        hat = np.abs(plan.kernel @ u.values)
        phys = np.abs(u.values)
        resolved = bool(
            hat[-8:].max() <= 1e-10 * hat.max() and phys[-8:].max() <= 1e-10 * phys.max()
        )
        rows.append(ProbeRow(float(lam), hs_norm(ctx, u), weighted_lq_norm(n, params.q, params.c, u), resolved))
    return rows


def sweep(
    n: int,
    s: float,
    qs: Sequence[float],
    cs: Sequence[float],
    k: int = 8,
    N: int = 512,
    R: float = 40.0,
    seed: int = DEFAULT_SEED,
    estimate: bool = True,
    workers: int = 1,
) -> list[dict]:
    """Admissibility and (where admissible) estimated constants over a (q, c) grid."""
    tuples = [EmbeddingParams(n, s, float(q), float(c)) for q in qs for c in cs]

    def task(prm: EmbeddingParams) -> dict:
        rep = check_embedding(prm)
        margin_q = min(rep["2 < q"].margin, rep["q < 2(n+c)/(n-2s)"].margin)
        c_est = math.nan
        if rep and estimate:
            c_est = estimate_best_constant(prm, k=k, N=N, R=R, seed=seed).value
        return {
            "n": prm.n,
            "s": prm.s,
            "q": prm.q,
            "c": prm.c,
            "admissible": int(rep.overall),
            "margin_low_c": rep["-2s < c"].margin,
            "margin_high_c": rep["c < (n-1)(q-2)/2"].margin,
            "margin_q": margin_q,
            "C_est": c_est,
        }

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(task, tuples))
    return [task(t) for t in tuples]


SWEEP_COLUMNS = ("n", "s", "q", "c", "admissible", "margin_low_c", "margin_high_c", "margin_q", "C_est")


def write_sweep_csv(path, rows: list[dict]) -> None:
    """Write sweep rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_sweep(path, rows)
        return
    with open(path, "w", newline="") as fh:
        _write_sweep(fh, rows)


def _write_sweep(fh, rows: list[dict]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([row[k] if isinstance(row[k], int) else f"{row[k]:.17g}" for k in SWEEP_COLUMNS])
