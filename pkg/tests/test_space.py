import math

import numpy as np
import pytest
from scipy.special import gamma

from radialsob.hankel import DomainError, RadialProfile, TailWarning, make_plan, sample
from radialsob.space import (
    SobolevContext,
    apply_As,
    hs_inner,
    hs_norm,
    hs_orthonormal_basis,
    l2_inner,
    l2_pairing,
    sphere_area,
    weighted_lq_norm,
)


def ctx(n=3, s=1.0, N=512, R=40.0):
    return SobolevContext(n, s, make_plan(n / 2 - 1, N, R))


def gauss(c):
    return sample(c.grid, lambda r: np.exp(-(r**2) / 2))


def rel_l2(c, u, v):
    d = l2_inner(c.n, u - v, u - v)
    return math.sqrt(d / l2_inner(c.n, v, v))


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


def test_context_checks_plan_order():
    with pytest.raises(DomainError):
        SobolevContext(3, 1.0, make_plan(0.0, 64, 10.0))
    with pytest.raises(ValueError):
        SobolevContext(1, 1.0, make_plan(-0.5, 64, 10.0))


def test_hs_norm_zero():
    c = ctx()
    assert hs_norm(c, RadialProfile(c.grid, np.zeros(512))) == 0.0


@pytest.mark.parametrize("n", [2, 3, 5])
def test_hs_norm_s0_is_l2(n):
    c = ctx(n, 0.0)
    u = sample(c.grid, lambda r: np.exp(-r) * (1 + r))
    phys = math.sqrt(sphere_area(n) * c.grid.integrate(u.values**2, n - 1))
    assert hs_norm(c, u) == pytest.approx(phys, rel=1e-6)


def test_h1_norm_of_gaussian_closed_form():
    # ||u||^2 = c_3 (int r^2 e^{-r^2} + int r^4 e^{-r^2}) = c_3 (G(3/2) + G(5/2)) / 2
    c = ctx(3, 1.0)
    want = math.sqrt(4 * math.pi * (gamma(1.5) + gamma(2.5)) / 2)
    assert hs_norm(c, gauss(c)) == pytest.approx(want, rel=1e-5)


def test_apply_as_identity_and_inverse():
    c = ctx(3, 0.0)
    u = sample(c.grid, lambda r: np.exp(-(r**2) / 3) * np.cos(r))
    assert np.max(np.abs(apply_As(c, u).values - u.values)) < 1e-10
    s = 0.7
    back = apply_As(c.with_s(-s), apply_As(c.with_s(s), u))
    assert rel_l2(c, back, u) < 1e-8


def test_apply_as_laplacian_of_gaussian():
    c = ctx(3, 2.0)
    out = apply_As(c, gauss(c))
    r = c.grid.nodes
    want = (3 + 1 - r**2) * np.exp(-(r**2) / 2)
    mask = (r < 20) & (np.abs(want) > 1e-12)
    assert np.max(np.abs(out.values - want)[mask] / np.abs(want[mask]).clip(1e-3)) < 1e-5


@pytest.mark.parametrize("n,q,c", [(3, 4, 1), (2, 3, 0), (5, 2.5, -1.5), (3, 6, 2.5)])
def test_weighted_norm_of_exponential(n, q, c):
    cx = ctx(n, 1.0)
    u = sample(cx.grid, lambda r: np.exp(-r))
    want = (sphere_area(n) * gamma(c + n) / q ** (c + n)) ** (1 / q)
    assert weighted_lq_norm(n, q, c, u) == pytest.approx(want, rel=1e-8)


def test_weighted_norm_zero_and_domain():
    cx = ctx()
    assert weighted_lq_norm(3, 4, 1, RadialProfile(cx.grid, np.zeros(512))) == 0.0
    with pytest.raises(DomainError):
        weighted_lq_norm(3, 4, -3.0, gauss(cx))
    with pytest.raises(DomainError):
        weighted_lq_norm(3, 1.0, 0.0, gauss(cx))


def test_weighted_norm_flags_tail():
    cx = ctx(3, 1.0, 256, 10.0)
    with pytest.warns(TailWarning):
        weighted_lq_norm(3, 4, 0, sample(cx.grid, lambda r: np.exp(-r)))


def test_weighted_norm_matches_l2():
    cx = ctx(3, 0.0)
    u = sample(cx.grid, lambda r: np.exp(-(r**2) / 2) * (1 - r**2))
    assert weighted_lq_norm(3, 2, 0, u) == pytest.approx(hs_norm(cx, u), rel=1e-6)


def test_pairing_examples():
    cs, ct = ctx(3, 1.3), ctx(3, 0.7)
    u = sample(cs.grid, lambda r: np.exp(-(r**2) / 2))
    v = sample(cs.grid, lambda r: np.exp(-r) * (1 + r))
    assert l2_pairing(cs, ct, u, RadialProfile(cs.grid, np.zeros(512))) == 0.0
    c0 = cs.with_s(0.0)
    assert l2_pairing(c0, c0, u, v) == pytest.approx(l2_inner(3, u, v), rel=1e-14)
    assert abs(l2_pairing(cs, ct, u, v) - l2_pairing(ct, cs, v, u)) < 1e-10


def test_multiplier_composition():
    c = ctx(3, 0.0)
    u = sample(c.grid, lambda r: np.exp(-(r**2) / 2) * (1 + r**2))
    lhs = apply_As(c.with_s(0.4), apply_As(c.with_s(1.1), u))
    rhs = apply_As(c.with_s(1.5), u)
    assert rel_l2(c, lhs, rhs) < 1e-8


def test_self_adjoint():
    c = ctx(3, 1.4)
    u = sample(c.grid, lambda r: np.exp(-(r**2) / 2))
    v = sample(c.grid, lambda r: np.exp(-((r - 1) ** 2)))
    a = l2_inner(3, apply_As(c, u), v)
    b = l2_inner(3, u, apply_As(c, v))
    assert abs(a - b) < 1e-9 * abs(a)


def test_homogeneity():
    c = ctx(3, 1.0)
    u = sample(c.grid, lambda r: np.exp(-r) * np.sin(r + 0.3))
    for lam in (-3.0, 0.25, 7.0):
        assert hs_norm(c, lam * u) == pytest.approx(abs(lam) * hs_norm(c, u), rel=1e-14)
        assert weighted_lq_norm(3, 4, 1, lam * u) == pytest.approx(abs(lam) * weighted_lq_norm(3, 4, 1, u), rel=1e-14)


def test_holder_interpolation_on_random_profiles():
    # q = theta*r + (1 - theta)*qt with ct = c / (1 - theta)
    n, c, q, theta, r_ = 3, 1.0, 4.0, 0.5, 2.0
    qt = (q - theta * r_) / (1 - theta)
    ct_ = c / (1 - theta)
    cx = ctx(n, 1.0)
    basis = np.array([b.values for b in hs_orthonormal_basis(cx, 8)])
    rng = np.random.default_rng(7)
    for coef in rng.standard_normal((50, 8)):
        u = RadialProfile(cx.grid, coef @ basis)
        lhs = weighted_lq_norm(n, q, c, u) ** q
        rhs = weighted_lq_norm(n, r_, 0, u) ** (r_ * theta) * weighted_lq_norm(n, qt, ct_, u) ** (qt * (1 - theta))
        assert rhs - lhs >= -1e-12 * rhs


@pytest.mark.parametrize("s", [0.5, 1.0, 1.6])
def test_basis_is_orthonormal(s):
    c = ctx(3, s)
    b = hs_orthonormal_basis(c, 12)
    G = np.array([[hs_inner(c, x, y) for y in b] for x in b])
    assert np.max(np.abs(G - np.eye(12))) < 1e-9


def test_basis_first_element_is_normalized_gaussian():
    c = ctx(3, 1.0)
    (e1,) = hs_orthonormal_basis(c, 1)
    g = gauss(c)
    assert hs_norm(c, e1) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(e1.values, g.values / hs_norm(c, g), atol=1e-13)
