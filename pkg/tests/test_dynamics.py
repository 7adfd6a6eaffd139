import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ermakov.dynamics import (
    CumulativeIntegral,
    IntegrationError,
    QuadratureError,
    Trajectory,
    adaptive_simpson,
    integrate,
    integrate_two_sided,
    rk4,
)
from ermakov.systems import ErmakovSystem, cartesian_vector_field


def harmonic(t, y):
    return np.array([y[1], -y[0]])


def test_harmonic_period():
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 2 * math.pi), 1e-10)
    assert abs(tr.y[-1][0]) < 1e-8
    assert tr.t[-1] == 2 * math.pi


def test_exponential():
    tr = integrate(lambda t, y: y, [1.0], (0.0, 1.0), 1e-10)
    assert tr.y[-1][0] == pytest.approx(math.e, abs=1e-8)


def test_dense_output_matches_nodes_exactly():
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 3.0), 1e-9)
    np.testing.assert_array_equal(tr(tr.t), tr.y)
    for k in (0, len(tr.t) // 2, len(tr.t) - 1):
        np.testing.assert_array_equal(tr(tr.t[k]), tr.y[k])


def test_dense_output_accuracy_between_nodes():
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 6.0), 1e-10)
    ts = np.linspace(0.0, 6.0, 997)
    np.testing.assert_allclose(tr(ts)[:, 0], np.sin(ts), atol=1e-8)


def test_dense_output_continuous_at_nodes():
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 4.0), 1e-8)
    t = tr.t[3]
    left, right = tr(np.nextafter(t, -np.inf)), tr(np.nextafter(t, np.inf))
    np.testing.assert_allclose(left, right, atol=1e-12)


def test_forward_then_backward_returns():
    tol = 1e-10
    y0 = np.array([0.3, -0.8])
    fwd = integrate(harmonic, y0, (0.0, 5.0), tol)
    back = integrate(lambda s, y: -harmonic(-s, y), fwd.y[-1], (-5.0, 0.0), tol)
    assert np.max(np.abs(back.y[-1] - y0)) < 10 * tol * (1 + np.max(np.abs(y0)))


def test_adaptive_error_scales_with_tol():
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = integrate(harmonic, [0.0, 1.0], (0.0, 10.0), tol)
        errs.append(abs(tr.y[-1][0] - math.sin(10.0)))
    assert errs[0] > errs[1] > errs[2]


def test_toy_error_drops_when_tol_tightens():
    field = cartesian_vector_field(ErmakovSystem("toy"))
    ref = integrate(field, [1, 1, 0.1, -0.1], (0, 2), 1e-13).y[-1]
    e1 = np.max(np.abs(integrate(field, [1, 1, 0.1, -0.1], (0, 2), 1e-6).y[-1] - ref))
    e2 = np.max(np.abs(integrate(field, [1, 1, 0.1, -0.1], (0, 2), 1e-6 / 16).y[-1] - ref))
    assert e1 / e2 >= 8  # a 5th-order local error control: roughly tol^(5/5)


def test_rk4_order():
    exact = math.sin(2.0)
    errs = [abs(rk4(harmonic, [0.0, 1.0], (0.0, 2.0), n)[-1][0] - exact) for n in (20, 40, 80)]
    assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14


def test_rk4_returns_every_step():
    out = rk4(harmonic, [1.0, 0.0], (0.0, 1.0), 10)
    assert out.shape == (11, 2)


def test_two_sided_integration():
    tr = integrate_two_sided(harmonic, [math.cos(1.0), -math.sin(1.0)], 1.0, (-2.0, 3.0), 1e-11)
    ts = np.linspace(-2.0, 3.0, 301)
    np.testing.assert_allclose(tr(ts)[:, 0], np.cos(ts), atol=1e-9)
    assert tr.span == (-2.0, 3.0)


def test_rhs_failure_reports_location():
    def bad(t, y):
        if t > 0.5:
            raise ZeroDivisionError("pole")
        return np.array([1.0])

    with pytest.raises(IntegrationError) as info:
        integrate(bad, [0.0], (0.0, 1.0))
    assert info.value.t > 0.5


@pytest.mark.parametrize("span, tol", [((1.0, 1.0), 1e-8), ((0.0, 1.0), 0.0)])
def test_bad_arguments(span, tol):
    with pytest.raises(ValueError):
        integrate(harmonic, [0.0, 1.0], span, tol)


def test_trajectory_rejects_unsorted_samples():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)), np.zeros((1, 1, 4)))


def test_outside_span():
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        tr(1.5)


def test_csv_export(tmp_path):
    tr = integrate(harmonic, [0.0, 1.0], (0.0, 1.0), names=("u", "du"))
    p = tmp_path / "tr.csv"
    tr.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,u,du"
    row = [float(v) for v in lines[-1].split(",")]
    assert row[0] == 1.0
    assert row[1] == tr.y[-1][0]  # 17 significant digits round-trip exactly


@pytest.mark.parametrize(
    "f, a, b, expected",
    [
        (math.sin, 0.0, math.pi, 2.0),
        (lambda x: x * x, 0.0, 1.0, 1.0 / 3.0),
        (lambda s: 1 / math.sin(s) ** 2 / math.tan(s) - math.tan(s) / math.cos(s) ** 2, math.pi / 4, math.pi / 3, -2.0 / 3.0),
    ],
)
def test_simpson(f, a, b, expected):
    assert adaptive_simpson(f, a, b, 1e-10) == pytest.approx(expected, abs=1e-9)


def test_simpson_oracle_riemann():
    # midpoint-sum oracle with 10^6 points for the transversal integrand
    f = lambda s: 1 / math.sin(s) ** 2 / math.tan(s) - math.tan(s) / math.cos(s) ** 2  # noqa: E731
    a, b, n = math.pi / 4, math.pi / 3, 10**6
    s = a + (np.arange(n) + 0.5) * (b - a) / n
    oracle = float(np.sum(1 / np.sin(s) ** 2 / np.tan(s) - np.tan(s) / np.cos(s) ** 2) * (b - a) / n)
    assert oracle == pytest.approx(-2.0 / 3.0, abs=1e-10)
    assert adaptive_simpson(f, a, b, 1e-12) == pytest.approx(oracle, abs=1e-10)


def test_simpson_reversed_interval():
    assert adaptive_simpson(math.cos, 1.0, 0.0, 1e-12) == pytest.approx(-math.sin(1.0), abs=1e-12)


def test_simpson_depth_limit():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: 1 / math.sqrt(x) if x > 0 else 0.0, 0.0, 1.0, 1e-15, max_depth=5)


def test_cumulative_integral():
    F = CumulativeIntegral(math.cos, 0.5, 0.0, 2.0)
    for s in (0.0, 0.5, 0.77, 2.0):
        assert F(s) == pytest.approx(math.sin(s) - math.sin(0.5), abs=1e-12)
    with pytest.raises(ValueError):
        F(2.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 4.0))
def test_harmonic_energy_is_kept(u0, v0, T):
    tr = integrate(harmonic, [u0, v0], (0.0, T), 1e-10)
    energy = tr.y[:, 0] ** 2 + tr.y[:, 1] ** 2
    assert np.max(np.abs(energy - energy[0])) < 1e-8
