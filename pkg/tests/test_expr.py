import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from ermakov.expr import (
    UNARY_FUNCTIONS,
    Binary,
    Const,
    ExprDomainError,
    ExprNameError,
    ExprSyntaxError,
    Unary,
    Var,
    differentiate,
    evaluate,
    parse,
    parse_number,
    substitute,
)


def test_power_then_division_tree():
    e = parse("1/x^3")
    assert e == Binary("/", Const(1.0), Binary("^", Var(), Const(3.0)))


def test_sum_of_unary_nodes():
    e = parse("sin(x)+cos(x)")
    assert isinstance(e, Binary) and e.op == "+"
    assert (e.left.op, e.right.op) == ("sin", "cos")


def test_toy_profile_value():
    assert evaluate(parse("(tan(x)+cot(x))^2"), math.pi / 4) == pytest.approx(4.0, abs=1e-14)


@pytest.mark.parametrize(
    "source, x, expected",
    [
        ("x^2", 3.0, 9.0),
        ("cot(x)", math.pi / 4, 1.0),
        ("-x^2", 3.0, -9.0),
        ("2^3^2", 0.0, 512.0),
        ("-2^2", 0.0, -4.0),
        ("8/4/2", 0.0, 1.0),
        ("1 - 2 - 3", 0.0, -4.0),
        ("abs(x - 5)", 2.0, 3.0),
        ("sqrt(x) * ln(exp(2))", 16.0, 8.0),
        ("sec(x)^2 - tan(x)^2", 0.4, 1.0),
        ("csc(x)^2 - cot(x)^2", 0.4, 1.0),
        ("1.5e-1 * x", 2.0, 0.3),
    ],
)
def test_evaluate(source, x, expected):
    assert evaluate(parse(source), x) == pytest.approx(expected, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("source, x", [("1/x", 0.0), ("ln(x)", -1.0), ("sqrt(x)", -0.5), ("cot(x)", 0.0), ("x^-1", 0.0)])
def test_domain_errors_name_the_node(source, x):
    with pytest.raises(ExprDomainError) as info:
        evaluate(parse(source), x)
    assert info.value.argument == x


@pytest.mark.parametrize(
    "source, offset",
    [("", 0), ("2x", 1), ("sin x", 4), ("(x + 1", 6), ("x +", 3), ("x ** 2", 3)],
)
def test_syntax_errors_carry_offset(source, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(source)
    assert info.value.offset == offset


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x +")
    assert info.value.expected


def test_unknown_identifier():
    with pytest.raises(ExprNameError) as info:
        parse("1 + pi")
    assert info.value.name == "pi"


def test_derivative_of_cube():
    d = differentiate(parse("x^3"))
    for x in (-1.3, 0.0, 0.5, 2.0):
        assert evaluate(d, x) == pytest.approx(3 * x * x, abs=1e-14)


def test_derivative_tan_minus_cot():
    d = differentiate(parse("tan(x) - cot(x)"))
    ref = parse("sec(x)^2 + csc(x)^2")
    for x in np.linspace(0.1, 1.4, 9):
        assert evaluate(d, x) == pytest.approx(evaluate(ref, x), rel=1e-13)


def test_derivative_against_central_difference():
    e = parse("sin(x) * cos(x)")
    h = 1e-6
    fd = (evaluate(e, 0.7 + h) - evaluate(e, 0.7 - h)) / (2 * h)
    assert abs(evaluate(differentiate(e), 0.7) - fd) < 1e-8


def test_abs_derivative_at_zero_is_zero():
    assert evaluate(differentiate(parse("abs(x)")), 0.0) == 0.0
    assert evaluate(differentiate(parse("abs(x)")), -2.0) == -1.0


def test_constant_folding():
    assert differentiate(parse("3")) == Const(0.0)
    assert differentiate(parse("x")) == Const(1.0)


def test_substitute_composes():
    e = substitute(parse("x^2 + 1"), parse("tan(x)"))
    assert evaluate(e, 0.3) == pytest.approx(math.tan(0.3) ** 2 + 1, rel=1e-15)


@pytest.mark.parametrize("source, value", [("-0.1", -0.1), ("1e-10", 1e-10), ("2^-3", 0.125), (" 3 ", 3.0)])
def test_parse_number(source, value):
    assert parse_number(source) == value


def test_parse_number_rejects_variable():
    with pytest.raises(ExprSyntaxError):
        parse_number("2*x")


# ---------------------------------------------------------------------------
# property tests over random trees

_FUNCS = sorted(UNARY_FUNCTIONS)
_constants = st.floats(min_value=-5, max_value=5, allow_nan=False).map(lambda v: Const(round(v, 3)))
_leaves = st.one_of(st.just(Var()), _constants)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(_FUNCS + ["neg"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(lambda b, n: Binary("^", b, Const(float(n))), children, st.integers(0, 3)),
    )


trees = st.recursive(_leaves, _extend, max_leaves=12)


def _depth(e):
    if isinstance(e, Unary):
        return 1 + _depth(e.arg)
    if isinstance(e, Binary):
        return 1 + max(_depth(e.left), _depth(e.right))
    return 0


def _safe(e, x):
    try:
        v = evaluate(e, x)
    except (ExprDomainError, OverflowError):
        return None
    return v if math.isfinite(v) and abs(v) < 1e6 else None


@settings(max_examples=300, deadline=None)
@given(trees, st.floats(min_value=-3, max_value=3))
def test_print_parse_round_trip(e, x):
    assume(_depth(e) <= 8)
    v = _safe(e, x)
    assume(v is not None)
    again = parse(str(e))
    assert evaluate(again, x) == pytest.approx(v, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(trees, st.floats(min_value=-3, max_value=3))
def test_derivative_matches_central_difference(e, x):
    assume(_depth(e) <= 8)
    h = 1e-6
    vals = [_safe(e, x + k * h) for k in (-2, -1, 0, 1, 2)]
    assume(all(v is not None for v in vals))
    d = _safe(differentiate(e), x)
    assume(d is not None)
    # keep to points where the function is tame on the stencil (no kink or
    # near-pole), so the central difference itself is a valid oracle
    second = abs(vals[3] - 2 * vals[2] + vals[1]) / h**2
    fd_wide = (vals[4] - vals[0]) / (4 * h)
    fd = (vals[3] - vals[1]) / (2 * h)
    assume(second < 1e3 and abs(fd - fd_wide) < 1e-7 * (1 + abs(fd)))
    assert abs(d - fd) <= 1e-6 * (1 + abs(vals[2]))
