"""The three Ermakov classes and their Cartesian / polar equations of motion.

Conventions
-----------
* ``f`` and ``g`` take the ratio ``rho = y/x = tan(theta)``.
* ``h`` takes ``cot(theta)`` (Kepler-Ermakov class only).
* ``w`` is the angular frequency as a function of time.

In polar form every class reads::

    r'' - r theta'^2   = P(theta) / r^3
    r theta'' + 2 r' theta' = T(theta) / r^3

with a radial profile ``P`` and a transversal profile ``T``; both are built
here as expressions in ``x = theta`` so they can be differentiated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import expr as ex
from .expr import Expression, as_expression, parse, substitute

__all__ = [
    "CLASSES",
    "POLE_GUARD",
    "ErmakovSystem",
    "CartesianState",
    "PolarState",
    "PoleError",
    "PreconditionError",
    "cartesian_rhs",
    "polar_rhs",
    "to_polar",
    "from_polar",
    "pole_distance",
    "check_pole",
    "cartesian_vector_field",
    "polar_image_of_cartesian",
]

CLASSES = ("toy", "generalized", "kepler_ermakov")
POLE_GUARD = 1e-6


class PoleError(ValueError):
    """State lies on (or within the guard band of) a coordinate axis."""


class PreconditionError(ValueError):
    """A pipeline precondition (e.g. ``w == 0``) is not met."""


@dataclass(frozen=True)
class CartesianState:
    t: float
    x: float
    y: float
    vx: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])


@dataclass(frozen=True)
class PolarState:
    t: float
    r: float
    theta: float
    rdot: float
    thetadot: float

    @property
    def angular_momentum(self) -> float:
        return self.r**2 * self.thetadot


def _is_zero(e: Expression) -> bool:
    return isinstance(e, ex.Const) and e.value == 0.0


@dataclass(frozen=True)
class ErmakovSystem:
    """An Ermakov system of one of the three classes.

    ``kind`` is one of ``"toy"``, ``"generalized"``, ``"kepler_ermakov"``.
    Unused functions are kept but ignored by the class equations.
    """

    kind: str
    f: Expression = ex.ZERO
    g: Expression = ex.ZERO
    h: Expression = ex.ZERO
    w: Expression = ex.ZERO
    C: float = 0.0

    def __post_init__(self):
        if self.kind not in CLASSES:
            raise ValueError(f"unknown system class {self.kind!r}; expected one of {CLASSES}")
        for name in "fghw":
            object.__setattr__(self, name, as_expression(getattr(self, name)))
        object.__setattr__(self, "C", float(self.C))

    @classmethod
    def from_dict(cls, data: dict) -> "ErmakovSystem":
        unknown = set(data) - {"class", "f", "g", "h", "w", "C"}
        if unknown:
            raise ValueError(f"unknown system fields: {sorted(unknown)}")
        if "class" not in data:
            raise ValueError("system definition needs a 'class' field")
        return cls(
            kind=data["class"],
            f=parse(str(data.get("f", "0"))),
            g=parse(str(data.get("g", "0"))),
            h=parse(str(data.get("h", "0"))),
            w=parse(str(data.get("w", "0"))),
            C=float(data.get("C", 0.0)),
        )

    @classmethod
    def load(cls, path) -> "ErmakovSystem":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "class": self.kind,
            "f": str(self.f),
            "g": str(self.g),
            "h": str(self.h),
            "w": str(self.w),
            "C": self.C,
        }

    @property
    def is_autonomous(self) -> bool:
        return _is_zero(self.w)

    def require_polar(self) -> None:
        """Polar/reduction pipelines only exist for ``w == 0`` (and ``C == 0``)."""
        if not self.is_autonomous:
            raise PreconditionError("precondition: w ≠ 0 (polar equations carry no w² r term)")
        if self.kind == "kepler_ermakov" and self.C != 0.0:
            raise PreconditionError("precondition: C ≠ 0 (the C r³/4 part of H has no polar counterpart)")

    # -- effective profiles F(rho), G(rho) entering  x'' = F/x^3, y'' = G/y^3
    @cached_property
    def effective_fg(self) -> tuple[Expression, Expression]:
        if self.kind == "toy":
            return ex.ONE, ex.ONE
        if self.kind == "kepler_ermakov":
            return self.f, self.g
        # f/(y x^2) = (f(rho)/rho)/x^3 ;  g/(x y^2) = (rho g(rho))/y^3
        return ex.Binary("/", self.f, ex.X), ex.Binary("*", ex.X, self.g)

    @cached_property
    def radial_profile(self) -> Expression:
        """``P(theta)`` with ``r'' - r theta'^2 = P / r^3``."""
        if self.kind == "toy":
            return parse("(tan(x)+cot(x))^2")
        F, G = self.effective_fg
        tan, sec2, csc2 = parse("tan(x)"), parse("sec(x)^2"), parse("csc(x)^2")
        P = ex.Binary(
            "+",
            ex.Binary("*", sec2, substitute(F, tan)),
            ex.Binary("*", csc2, substitute(G, tan)),
        )
        if self.kind == "kepler_ermakov":
            P = ex.Binary("+", ex.Binary("*", parse("sec(x)"), substitute(self.h, parse("cot(x)"))), P)
        return P

    @cached_property
    def transversal_profile(self) -> Expression:
        """``T(theta)`` with ``r theta'' + 2 r' theta' = T / r^3``."""
        F, G = self.effective_fg
        tan = parse("tan(x)")
        return ex.Binary(
            "-",
            ex.Binary("*", parse("csc(x)^2 * cot(x)"), substitute(G, tan)),
            ex.Binary("*", parse("sec(x)^2 * tan(x)"), substitute(F, tan)),
        )

    @cached_property
    def printed_transversal_profile(self) -> Expression:
        """Transversal profile in the printed form of the source.

        For the toy class this is ``-(1/2) d/dtheta (tan - cot)``, which is not
        the polar image of the toy equations; kept for report-only audits.
        """
        if self.kind == "toy":
            return ex.Binary("*", ex.Const(-0.5), ex.differentiate(parse("tan(x)-cot(x)")))
        tan = parse("tan(x)")
        return ex.Binary(
            "-",
            ex.Binary("*", parse("csc(x)^2 * cot(x)"), substitute(self.g, tan)),
            ex.Binary("*", parse("sec(x)^2 * tan(x)"), substitute(self.f, tan)),
        )

    def printed_omega_squared(self, theta: float, L2: float) -> float:
        """Frequency exactly as printed for the class (raw ``f``, ``g``)."""
        if self.kind == "toy":
            return 1.0 + ex.evaluate(parse("(tan(x)+cot(x))^2"), theta) / L2
        t = math.tan(theta)
        core = (self.f(t) / math.cos(theta) ** 2 + self.g(t) / math.sin(theta) ** 2) / L2
        if self.kind == "kepler_ermakov":
            return 1.0 + self.h(1.0 / t) / math.sin(theta) + core
        return 1.0 + core


def pole_distance(theta):
    """Distance from ``theta`` to the nearest multiple of pi/2."""
    q = math.pi / 2
    return np.abs(theta - np.round(theta / q) * q)


def check_pole(theta: float, guard: float = POLE_GUARD) -> None:
    if pole_distance(theta) < guard:
        raise PoleError(f"theta = {theta!r} is within {guard:g} rad of a coordinate axis")


def cartesian_rhs(s: ErmakovSystem, st: CartesianState) -> tuple[float, float]:
    """Accelerations ``(x'', y'')`` of the class equations, ``w^2`` term included."""
    x, y = st.x, st.y
    if x == 0.0 or y == 0.0:
        raise PoleError(f"pole: state on a coordinate axis (x = {x!r}, y = {y!r})")
    w2 = s.w(st.t) ** 2
    rho = y / x
    if s.kind == "toy":
        ax, ay = 1.0 / x**3, 1.0 / y**3
    elif s.kind == "generalized":
        ax = s.f(rho) / (y * x * x)
        ay = s.g(rho) / (x * y * y)
    else:
        r = math.hypot(x, y)
        # H = C r^3 / 4 - h(cot theta) / (r cos theta), with r cos theta = x
        H = 0.25 * s.C * r**3 - s.h(x / y) / x
        ax = -x * H / r**3 + s.f(rho) / x**3
        ay = -y * H / r**3 + s.g(rho) / y**3
    return ax - w2 * x, ay - w2 * y


def cartesian_vector_field(s: ErmakovSystem):
    """First-order field ``(t, [x, y, vx, vy]) -> derivative`` for :func:`integrate`."""

    def field(t, z):
        ax, ay = cartesian_rhs(s, CartesianState(t, z[0], z[1], z[2], z[3]))
        return np.array([z[2], z[3], ax, ay])

    return field


def polar_rhs(s: ErmakovSystem, st: PolarState, guard: float = POLE_GUARD) -> tuple[float, float]:
    """Right-hand sides ``(F_r, F_theta)`` of the radial and transversal equations."""
    s.require_polar()
    check_pole(st.theta, guard)
    r3 = st.r**3
    return s.radial_profile(st.theta) / r3, s.transversal_profile(st.theta) / r3


def polar_image_of_cartesian(s: ErmakovSystem, st: PolarState) -> tuple[float, float]:
    """Project the Cartesian force onto the radial / transversal directions."""
    c, sn = math.cos(st.theta), math.sin(st.theta)
    cart = from_polar(st)
    ax, ay = cartesian_rhs(s, cart)
    return c * ax + sn * ay, -sn * ax + c * ay


def to_polar(st: CartesianState) -> PolarState:
    x, y = st.x, st.y
    if x == 0.0 and y == 0.0:
        raise ValueError("polar coordinates undefined at the origin")
    r2 = x * x + y * y
    r = math.sqrt(r2)
    return PolarState(
        st.t,
        r,
        math.atan2(y, x),
        (x * st.vx + y * st.vy) / r,
        (x * st.vy - y * st.vx) / r2,
    )


def from_polar(st: PolarState) -> CartesianState:
    if not st.r > 0:
        raise ValueError("radius must be positive")
    c, sn = math.cos(st.theta), math.sin(st.theta)
    rtd = st.r * st.thetadot
    return CartesianState(
        st.t,
        st.r * c,
        st.r * sn,
        st.rdot * c - rtd * sn,
        st.rdot * sn + rtd * c,
    )
