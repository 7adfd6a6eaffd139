import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ermakov.pinney import (
    FundamentalPair,
    Phase,
    PinneyError,
    PinneySolution,
    auto_triple,
    ermakov_lewis_original,
    ermakov_lewis_reduced,
    fundamental_pair,
    phase,
    pinney_sigma,
)
from ermakov.reduction import ConstantProfile, FrequencyProfile, MomentumLaw, ReducedState, integrate_reduced
from ermakov.systems import ErmakovSystem, PolarState

TOY = ErmakovSystem("toy")


@pytest.fixture(scope="module")
def toy_profile():
    return FrequencyProfile(TOY, MomentumLaw(TOY, math.pi / 4, 4.0, (0.5, 1.05)))


@pytest.mark.parametrize("omega2", [1.0, 4.0])
def test_numerical_pair_matches_closed_form(omega2):
    k = math.sqrt(omega2)
    pair = fundamental_pair(ConstantProfile(omega2, (-1.0, 2.0)), 0.0, tol=1e-12)
    nu, v, W = pair
    assert W == 1.0
    for th in np.linspace(-1.0, 2.0, 13):
        assert nu(th) == pytest.approx(math.cos(k * th), abs=1e-9)
        assert v(th) == pytest.approx(math.sin(k * th) / k, abs=1e-9)


def test_abel_identity_on_toy_profile(toy_profile):
    pair = fundamental_pair(toy_profile, 0.8, tol=1e-11)
    drift = max(abs(pair.wronskian(t) - pair.W) for t in np.linspace(0.5, 1.05, 201))
    assert drift < 1e-9


def test_fundamental_pair_rejects_outside_reference(toy_profile):
    with pytest.raises(ValueError):
        fundamental_pair(toy_profile, 1.3)


def test_unit_sigma():
    ps = pinney_sigma(FundamentalPair.harmonic(1.0, 0.0), 1.0, 0.0, 1.0)
    for th in (0.0, 0.4, 2.0):
        s, ds, dds, ddds = ps.derivatives(th)
        assert s == pytest.approx(1.0, abs=1e-15)
        assert abs(ds) < 1e-15 and abs(dds) < 1e-15 and abs(ddds) < 1e-15
        assert abs(ps.residual(th)) < 1e-15


def test_scaled_pair_example():
    # nu = cos, v = sin/2 (W = 1/2), A = 4, C = 1: sigma^2 = 4 cos^2 + sin^2 / 4
    pair = FundamentalPair.from_functions(
        math.cos, lambda t: -math.sin(t), lambda t: 0.5 * math.sin(t), lambda t: 0.5 * math.cos(t), ConstantProfile(1.0), (-3.0, 3.0), 0.0
    )
    assert pair.W == 0.5
    ps = PinneySolution(pair, 4.0, 0.0, 1.0)
    s, ds, dds, _ = ps.derivatives(0.0)
    assert s == 2.0
    assert dds == pytest.approx(-15.0 / 8.0, abs=1e-15)
    assert dds + s == pytest.approx(s**-3, abs=1e-15)
    assert max(abs(ps.residual(t)) for t in np.linspace(-3, 3, 61)) < 1e-13


def test_sigma_derivatives_against_finite_differences():
    pair = FundamentalPair.harmonic(2.0, 0.1)
    ps = PinneySolution(pair, *auto_triple(pair.W, 1.3, 0.4))
    h = 1e-5
    for th in (0.3, 1.1):
        s, ds, dds, ddds = ps.derivatives(th)
        sig = lambda t: ps.derivatives(t)  # noqa: E731
        assert ds == pytest.approx((ps.sigma(th + h) - ps.sigma(th - h)) / (2 * h), rel=1e-8)
        assert dds == pytest.approx((sig(th + h)[1] - sig(th - h)[1]) / (2 * h), rel=1e-7)
        assert ddds == pytest.approx((sig(th + h)[2] - sig(th - h)[2]) / (2 * h), rel=1e-6)


def test_constraint_violation():
    with pytest.raises(PinneyError, match="W\\^-2"):
        PinneySolution(FundamentalPair.harmonic(1.0, 0.0), 1.0, 0.0, 2.0)


def test_auto_triple():
    assert auto_triple(0.5, 2.0, 1.0) == (2.0, 1.0, 2.5)
    with pytest.raises(PinneyError):
        auto_triple(1.0, 0.0, 0.0)


def test_pinney_on_toy_profile(toy_profile):
    pair = fundamental_pair(toy_profile, math.pi / 4, tol=1e-12)
    ps = pinney_sigma(pair)
    assert ps.constraint_error < 1e-10
    assert max(abs(ps.residual(t)) for t in np.linspace(0.5, 1.05, 201)) < 1e-7


def test_phase_of_unit_sigma():
    ps = pinney_sigma(FundamentalPair.harmonic(1.0, 0.0), 1.0, 0.0, 1.0)
    ph = phase(ps, 0.3)
    assert ph.closed_form is not None
    for th in (-1.0, 0.3, 1.7):
        assert ph(th) == th - 0.3


def test_phase_of_sigma_two():
    # omega^2 = 1/16 admits the constant Pinney solution sigma = 2
    pair = FundamentalPair.harmonic(1.0 / 16.0, 0.0, (-2.0, 2.0))
    ps = PinneySolution(pair, 4.0, 0.0, 0.25)
    assert ps.sigma(1.3) == pytest.approx(2.0, rel=1e-15)
    ph = phase(ps, 0.3)
    for th in (-1.0, 0.3, 1.7):
        assert ph(th) == pytest.approx((th - 0.3) / 4, abs=1e-12)


def test_phase_quarter_period_against_riemann_oracle():
    pair = FundamentalPair.from_functions(
        math.cos, lambda t: -math.sin(t), lambda t: 0.5 * math.sin(t), lambda t: 0.5 * math.cos(t), ConstantProfile(1.0), (0.0, math.pi / 2), 0.0
    )
    ps = PinneySolution(pair, 4.0, 0.0, 1.0)
    n = 10**6
    s = (np.arange(n) + 0.5) * (math.pi / 2) / n
    oracle = float(np.sum(1 / (4 * np.cos(s) ** 2 + 0.25 * np.sin(s) ** 2)) * (math.pi / 2) / n)
    assert oracle == pytest.approx(math.pi / 2, abs=1e-9)
    ph = Phase(ps, 0.0)
    assert ph(math.pi / 2) == pytest.approx(oracle, abs=1e-9)
    a, da, dda = ph.derivatives(0.3)
    assert da == pytest.approx(1 / ps.sigma_squared(0.3), rel=1e-14)


@pytest.mark.parametrize("u, du, s, ds, expected", [(0.0, 0.0, 1.3, 0.2, 0.0), (math.sin(0.4), math.cos(0.4), 1.0, 0.0, 0.5)])
def test_reduced_invariant_values(u, du, s, ds, expected):
    assert ermakov_lewis_reduced(u, du, s, ds) == pytest.approx(expected, abs=1e-15)


def test_reduced_invariant_conserved_on_toy(toy_profile):
    pair = fundamental_pair(toy_profile, math.pi / 4, tol=1e-12)
    ps = pinney_sigma(pair)
    sol = integrate_reduced(toy_profile, ReducedState(0.6, 0.9, -0.4, 4.0), (0.5, 1.05), 1e-12)
    I = [ermakov_lewis_reduced(*sol(t)[:2], ps.sigma(t), ps.dsigma(t)) for t in np.linspace(0.5, 1.05, 201)]
    assert max(I) - min(I) < 1e-8


def test_original_invariant_forms():
    # r = 2, r' = 0, sigma = 1, sigma_t = 0: the two forms give 0 and 1/8
    inv = ermakov_lewis_original(PolarState(0.0, 2.0, 0.5, 0.0, 0.25), 1.0, 0.0, 1.0)
    assert inv.pullback == pytest.approx(0.125, abs=1e-16)
    assert inv.printed == pytest.approx(0.125, abs=1e-16)
    # a state with radial motion separates the two forms
    inv = ermakov_lewis_original(PolarState(0.0, 2.0, 0.5, 1.0, 0.25), 1.0, 0.0, 1.0)
    assert inv.printed == pytest.approx(-0.375, abs=1e-16)
    assert inv.pullback == pytest.approx(0.625, abs=1e-16)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-2, 2), st.floats(0.5, 2.0), st.floats(-1, 1), st.floats(0.3, 3.0))
def test_pullback_equals_reduced_invariant(r, rdot, s, ds_theta, L):
    st_ = PolarState(0.0, r, 0.7, rdot, L / r**2)
    sigma_t = st_.thetadot * ds_theta
    inv = ermakov_lewis_original(st_, s, sigma_t, L)
    assert inv.pullback == pytest.approx(ermakov_lewis_reduced(1 / r, -rdot / L, s, ds_theta), rel=1e-12, abs=1e-14)
