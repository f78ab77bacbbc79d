import math
import warnings

import numpy as np
import pytest

from radialsob.decarli import (
    DeCarliParams,
    admissible_L_params,
    apply_L,
    check_invariance_1,
    check_invariance_2,
    fourier_bessel_params,
    scaling_drift,
)
from radialsob.hankel import DomainError, RadialProfile, TailWarning, apply, make_plan, sample


def gaussian(r):
    return np.exp(-(r**2) / 2)


def bump(r):
    return np.where(r < 4, np.exp(-4 / np.maximum(16 - r**2, 1e-300)), 0.0)


PROFILES = {"gaussian": gaussian, "x_exp": lambda r: r * np.exp(-r), "bump": bump}


@pytest.mark.parametrize("alpha", [0, 0.5, 1, 2.5])
def test_fourier_bessel_member_matches_hankel(alpha):
    plan = make_plan(alpha, 512, 40.0)
    f = sample(plan.grid, lambda r: np.exp(-(r**2) / 2) * (1 + r**2))
    got = apply_L(fourier_bessel_params(alpha), f)
    want = apply(plan, f)
    assert np.max(np.abs(got.values - want.values)) < 1e-12


def test_gaussian_is_fixed_by_fourier_bessel_member():
    plan = make_plan(1.5, 512, 40.0)
    out = apply_L(fourier_bessel_params(1.5), sample(plan.grid, gaussian))
    assert np.max(np.abs(out.values - gaussian(out.grid.nodes))) < 1e-10


def test_zero_maps_to_zero():
    plan = make_plan(0.5, 64, 20.0)
    out = apply_L(DeCarliParams(0.5, 1 / 6, 1 / 12), RadialProfile(plan.grid, np.zeros(64)))
    assert np.all(out.values == 0)


def test_non_decayed_integrand_is_flagged():
    plan = make_plan(0.5, 128, 10.0)
    with pytest.warns(TailWarning):
        apply_L(fourier_bessel_params(0.5), sample(plan.grid, lambda r: np.exp(-r / 2)))


def test_order_mismatch_rejected():
    plan = make_plan(0.5, 64, 20.0)
    with pytest.raises(DomainError):
        apply_L(fourier_bessel_params(1.0), sample(plan.grid, gaussian))


def test_alpha_lower_bound():
    with pytest.raises(DomainError):
        DeCarliParams(-0.6, 0.0, 0.0)


def test_admissible_examples():
    assert admissible_L_params(DeCarliParams(0.5, 0.5, 0.0), 2, 2)
    rep = admissible_L_params(DeCarliParams(0.5, 1 / 6, 1 / 12), 1.5, 4)
    assert rep.admissible
    assert rep.mu_target == pytest.approx(1 / 12, abs=1e-15)
    assert rep.nu_upper_slack == pytest.approx(0.5 - 1 / 12 - 1 / 6)
    assert not admissible_L_params(DeCarliParams(0.5, 1 / 6, 1 / 12 + 1e-9), 1.5, 4)


def test_admissible_upper_nu_is_inclusive_lower_strict():
    # nu = 1/2 - max(mu, 0) allowed; nu = -alpha - 1/p' not
    assert admissible_L_params(DeCarliParams(0.5, 0.5, 0.0), 2, 2)
    assert not admissible_L_params(DeCarliParams(0.5, -1.0, 0.0), 2, 2)


def test_admissible_infinite_q():
    rep = admissible_L_params(DeCarliParams(0.0, 0.0, 1.0), math.inf, math.inf)
    assert rep.mu_target == pytest.approx(1.0)
    assert admissible_L_params(DeCarliParams(0.0, 0.25, 0.0), 1, math.inf)
    assert not admissible_L_params(DeCarliParams(0.0, -0.25, 0.0), 1, math.inf)


def test_admissible_domain_errors():
    with pytest.raises(DomainError):
        admissible_L_params(DeCarliParams(0.5, 0, 0), 3, 2)
    with pytest.raises(DomainError):
        admissible_L_params(DeCarliParams(0.5, 0, 0), 0.5, 2)


def test_invariance_examples():
    plan = make_plan(0.5, 512, 40.0)
    f = sample(plan.grid, gaussian)
    prm = DeCarliParams(0.5, 1 / 6, 1 / 12)
    assert check_invariance_1(prm, f, 0) == 0.0
    assert check_invariance_2(prm, f, 0) == 0.0
    assert check_invariance_1(prm, f, 1) < 1e-10
    assert check_invariance_2(prm, f, 4 / 3) < 1e-10
    zero = RadialProfile(plan.grid, np.zeros(512))
    assert check_invariance_1(prm, zero, 1) == 0.0
    assert check_invariance_2(prm, zero, 1) == 0.0


@pytest.mark.parametrize("alpha", [0, 0.5, 1, 2.5])
@pytest.mark.parametrize("shift", [-1, -0.5, 0.5, 1, 4 / 3])
@pytest.mark.parametrize("name", sorted(PROFILES))
def test_invariance_matrix(alpha, shift, name):
    plan = make_plan(alpha, 512, 40.0)
    f = sample(plan.grid, PROFILES[name])
    prm = DeCarliParams(alpha, alpha + 1, -2 * alpha - 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TailWarning)
        assert check_invariance_1(prm, f, shift, relative=True) < 1e-10
        assert check_invariance_2(prm, f, shift, relative=True) < 1e-10


def test_necessity_probe_scaling():
    # with mu off the admissible line by 0.1 the L^p -> L^q ratio drifts by lam**0.1
    p, q = 1.5, 4.0
    prm = DeCarliParams(0.5, 1 / 6, 1 / 12 + 0.1)
    plan = make_plan(0.5, 1024, 40.0)
    out = scaling_drift(prm, p, q, lambda x: np.exp(-(x**2) / 2), plan, (1, 2, 4, 8))
    assert out["exponent"] == pytest.approx(0.1)
    assert np.all(np.diff(out["normalized"]) > 0)
    assert np.max(np.abs(out["normalized"] / out["predicted"] - 1)) < 0.05


def test_admissible_operator_ratio_is_dilation_flat():
    prm = DeCarliParams(0.5, 1 / 6, 1 / 12)
    plan = make_plan(0.5, 1024, 40.0)
    out = scaling_drift(prm, 1.5, 4.0, lambda x: np.exp(-(x**2) / 2), plan, (1, 2, 4))
    assert np.max(np.abs(out["normalized"] - 1)) < 0.05
