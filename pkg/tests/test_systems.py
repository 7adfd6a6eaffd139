import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ermakov.expr import parse
from ermakov.systems import (
    CartesianState,
    ErmakovSystem,
    PolarState,
    PoleError,
    PreconditionError,
    cartesian_rhs,
    check_pole,
    from_polar,
    polar_image_of_cartesian,
    polar_rhs,
    to_polar,
)

TOY = ErmakovSystem("toy")


@pytest.mark.parametrize("x, y, expected", [(1.0, 1.0, (1.0, 1.0)), (2.0, 1.0, (0.125, 1.0))])
def test_toy_accelerations(x, y, expected):
    assert cartesian_rhs(TOY, CartesianState(0.0, x, y, 0.0, 0.0)) == pytest.approx(expected, rel=1e-15)


def test_pure_oscillator_term():
    s = ErmakovSystem("generalized", w=parse("1"))
    assert cartesian_rhs(s, CartesianState(0.0, 1.0, 1.0, 0.0, 0.0)) == (-1.0, -1.0)


def test_toy_ignores_f_and_g():
    s = ErmakovSystem("toy", f=parse("x^2"), g=parse("5"))
    st_ = CartesianState(0.0, 0.7, 1.3, 0.0, 0.0)
    assert cartesian_rhs(s, st_) == cartesian_rhs(TOY, st_)


def test_pole_on_axis():
    with pytest.raises(PoleError):
        cartesian_rhs(TOY, CartesianState(0.0, 1.0, 0.0, 0.0, 0.0))


def test_toy_forces_are_odd():
    a = cartesian_rhs(TOY, CartesianState(0.0, 0.8, 1.7, 0.0, 0.0))
    b = cartesian_rhs(TOY, CartesianState(0.0, -0.8, -1.7, 0.0, 0.0))
    assert b == (-a[0], -a[1])


def test_toy_polar_values():
    F_r, F_t = polar_rhs(TOY, PolarState(0.0, 1.0, math.pi / 4, 0.0, 0.0))
    assert F_r == pytest.approx(4.0, rel=1e-14)
    assert F_t == pytest.approx(0.0, abs=1e-14)


def test_generalized_polar_value():
    s = ErmakovSystem("generalized", f=parse("1"), g=parse("1"))
    F_r, _ = polar_rhs(s, PolarState(0.0, 1.0, math.pi / 4, 0.0, 0.0))
    assert F_r == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize(
    "system",
    [
        TOY,
        ErmakovSystem("generalized", f=parse("1 + x^2"), g=parse("sin(x)")),
        ErmakovSystem("kepler_ermakov", f=parse("2"), g=parse("1/(1+x^2)"), h=parse("0.3*x")),
    ],
    ids=["toy", "generalized", "kepler"],
)
def test_polar_profiles_equal_projected_force(system):
    rng = np.random.default_rng(7)
    for _ in range(200):
        st_ = PolarState(0.0, rng.uniform(0.3, 3), rng.uniform(0.05, math.pi / 2 - 0.05), rng.uniform(-1, 1), rng.uniform(-1, 1))
        np.testing.assert_allclose(polar_rhs(system, st_), polar_image_of_cartesian(system, st_), rtol=1e-11, atol=1e-12)


def test_polar_requires_w_zero():
    s = ErmakovSystem("toy", w=parse("1"))
    with pytest.raises(PreconditionError, match="w ≠ 0"):
        polar_rhs(s, PolarState(0.0, 1.0, 0.5, 0.0, 0.0))


def test_pole_guard():
    check_pole(0.5)
    with pytest.raises(PoleError):
        check_pole(math.pi / 2 + 1e-8)


def test_to_polar_values():
    p = to_polar(CartesianState(0.0, 1.0, 1.0, 0.0, 0.0))
    assert (p.r, p.theta, p.rdot, p.thetadot) == pytest.approx((math.sqrt(2), math.pi / 4, 0.0, 0.0))
    c = from_polar(PolarState(0.0, 2.0, math.pi / 6, 0.0, 0.0))
    assert (c.x, c.y) == pytest.approx((math.sqrt(3), 1.0), rel=1e-15)


def test_angular_momentum():
    p = to_polar(CartesianState(0.0, 1.0, 1.0, 0.1, -0.1))
    assert p.angular_momentum == pytest.approx(1 * -0.1 - 1 * 0.1)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.1, 10),
    st.floats(-3.0, 3.0).filter(lambda t: abs(t) > 1e-3),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
def test_polar_round_trip(r, theta, rdot, thetadot):
    p = PolarState(0.0, r, theta, rdot, thetadot)
    back = to_polar(from_polar(p))
    scale = 1 + abs(rdot) + r * abs(thetadot)
    assert back.r == pytest.approx(r, rel=1e-12)
    assert abs(back.theta - theta) < 1e-12
    assert abs(back.rdot - rdot) < 1e-12 * scale
    assert abs(back.thetadot - thetadot) < 1e-12 * scale / r


def test_cartesian_round_trip_many():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        c = CartesianState(0.0, *rng.uniform(-3, 3, 2), *rng.uniform(-2, 2, 2))
        d = from_polar(to_polar(c))
        np.testing.assert_allclose([d.x, d.y, d.vx, d.vy], [c.x, c.y, c.vx, c.vy], atol=1e-12 * (1 + abs(c.vx) + abs(c.vy)))


def test_system_file_round_trip(tmp_path):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps({"class": "generalized", "f": "x^2", "g": "1"}))
    s = ErmakovSystem.load(p)
    assert s.kind == "generalized"
    assert s.h(3.0) == 0.0 and s.w(1.0) == 0.0
    again = ErmakovSystem.from_dict(s.to_dict())
    assert again.f(1.7) == s.f(1.7)


@pytest.mark.parametrize("data", [{"class": "bogus"}, {"f": "1"}, {"class": "toy", "q": "1"}])
def test_system_file_errors(data):
    with pytest.raises(ValueError):
        ErmakovSystem.from_dict(data)


def test_kepler_needs_zero_C_in_polar():
    s = ErmakovSystem("kepler_ermakov", f=parse("1"), g=parse("1"), C=2.0)
    with pytest.raises(PreconditionError):
        s.require_polar()
