"""Reduction to a theta-dependent oscillator plus a conservation law.

With ``u = 1/r`` and ``theta`` as independent variable the polar equations
become ``u'' + (L'/L) u' + omega^2(theta) u = 0`` where ``L = r^2 theta'``
obeys ``L^2 = L0 + mu(theta)``.  The published reduced equation drops the
``(L'/L) u'`` term; :func:`audit_reduction` measures both forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .dynamics import DEFAULT_TOL, CumulativeIntegral, adaptive_simpson, Trajectory, integrate, integrate_two_sided
from .expr import differentiate
from .systems import (
    POLE_GUARD,
    CartesianState,
    ErmakovSystem,
    PolarState,
    cartesian_vector_field,
    check_pole,
    polar_rhs,
    pole_distance,
    to_polar,
)
from .verdicts import REPORT_ONLY, ClaimVerdict, judge, norms

__all__ = [
    "DEFAULT_THETA0",
    "FOLD_FRACTION",
    "GRID_POINTS",
    "MomentumLawError",
    "MomentumInconsistency",
    "MomentumLaw",
    "momentum_law",
    "FrequencyProfile",
    "ConstantProfile",
    "ReducedState",
    "reduce_state",
    "lift_state",
    "integrate_reduced",
    "Pushforward",
    "pushforward",
    "reduction_residuals",
    "audit_reduction",
]

DEFAULT_THETA0 = math.pi / 4
GRID_POINTS = 201
# audit grid keeps |L| >= max|L| / 2 (L^2 >= FOLD_FRACTION * max L^2)
FOLD_FRACTION = 0.25


class MomentumLawError(ValueError):
    pass


class MomentumInconsistency(ValueError):
    pass


def _quadrant(theta: float) -> int:
    return math.floor(theta / (math.pi / 2))


def mu_function(system: ErmakovSystem, theta0: float, lo: float, hi: float) -> Callable[[float], float]:
    """``mu(theta) = 2 * integral_{theta0}^{theta} T`` on ``[lo, hi]`` (closed form for the toy class)."""
    if system.kind == "toy":
        c0 = math.tan(theta0) ** 2 + 1 / math.tan(theta0) ** 2
        return lambda th: c0 - math.tan(th) ** 2 - 1 / math.tan(th) ** 2
    T = system.transversal_profile
    return CumulativeIntegral(lambda s: 2.0 * T(s), theta0, min(lo, theta0), max(hi, theta0))


class MomentumLaw:
    """``L^2(theta) = L0 + mu(theta)`` with ``mu(theta0) = 0``.

    ``mu(theta) = 2 * integral_{theta0}^{theta} T(s) ds`` where ``T`` is the
    transversal force profile.  The toy class uses the closed form
    ``mu = tan^2 theta0 + cot^2 theta0 - tan^2 theta - cot^2 theta``.
    ``orientation`` carries the sign of ``L`` (the law only fixes ``L^2``).
    """

    def __init__(
        self,
        system: ErmakovSystem,
        theta0: float,
        L0: float,
        interval: tuple[float, float],
        orientation: float = 1.0,
    ):
        system.require_polar()
        lo, hi = map(float, interval)
        if not hi > lo:
            raise ValueError(f"empty working interval {interval!r}")
        dom_lo, dom_hi = min(lo, theta0), max(hi, theta0)
        if _quadrant(dom_lo + POLE_GUARD) != _quadrant(dom_hi - POLE_GUARD):
            raise MomentumLawError(f"interval [{dom_lo!r}, {dom_hi!r}] is not inside one pole-free quadrant")
        if min(pole_distance(dom_lo), pole_distance(dom_hi)) < POLE_GUARD:
            raise MomentumLawError("interval reaches into a pole guard band")
        self.system = system
        self.theta0 = float(theta0)
        self.L0 = float(L0)
        self.interval = (lo, hi)
        self.orientation = 1.0 if orientation >= 0 else -1.0
        self._T = system.transversal_profile
        self._mu = mu_function(system, theta0, dom_lo, dom_hi)
        self._check_positive()

    def _check_positive(self) -> None:
        lo, hi = self.interval
        th = np.linspace(lo, hi, 2001)
        vals = np.array([self.L2(t) for t in th])
        bad = np.nonzero(vals <= 0)[0]
        if bad.size:
            k = bad[0]
            where = th[k]
            if k > 0:
                where = brentq(self.L2, th[k - 1], th[k])
            raise MomentumLawError(f"L^2 = L0 + mu(theta) reaches zero at theta = {where!r}")

    def mu(self, theta: float) -> float:
        return float(self._mu(theta))

    def mu_prime(self, theta: float) -> float:
        return 2.0 * self._T(theta)

    def L2(self, theta: float) -> float:
        return self.L0 + self.mu(theta)

    def L(self, theta: float) -> float:
        return self.orientation * math.sqrt(self.L2(theta))


def momentum_law(system, theta0=DEFAULT_THETA0, L0squared=1.0, interval=None, orientation=1.0) -> MomentumLaw:
    if interval is None:
        interval = (theta0 - 0.1, theta0 + 0.1)
    return MomentumLaw(system, theta0, L0squared, interval, orientation)


class FrequencyProfile:
    """``omega^2(theta) = 1 + P(theta) / L^2(theta)`` for a system and momentum law."""

    def __init__(self, system: ErmakovSystem, law: MomentumLaw):
        self.system = system
        self.law = law
        self.interval = law.interval
        self._P = system.radial_profile
        self._dP = differentiate(system.radial_profile)

    def omega_squared(self, theta: float) -> float:
        check_pole(theta)
        L2 = self.law.L2(theta)
        if L2 <= 0:
            raise MomentumLawError(f"L^2 <= 0 at theta = {theta!r}")
        return 1.0 + self._P(theta) / L2

    def d_omega_squared(self, theta: float) -> float:
        L2 = self.law.L2(theta)
        return self._dP(theta) / L2 - self._P(theta) * self.law.mu_prime(theta) / L2**2

    def printed_omega_squared(self, theta: float) -> float:
        return self.system.printed_omega_squared(theta, self.law.L2(theta))


@dataclass(frozen=True)
class ConstantProfile:
    """Theta-independent frequency; the classical harmonic oscillator."""

    omega2: float = 1.0
    interval: tuple = (-math.inf, math.inf)

    def omega_squared(self, theta: float) -> float:
        return self.omega2

    def d_omega_squared(self, theta: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ReducedState:
    theta: float
    u1: float
    du1: float
    u2: float

    def __post_init__(self):
        if not self.u1 > 0:
            raise ValueError("u1 = 1/r must be positive")


def reduce_state(st: PolarState, law: MomentumLaw, rtol: float = 1e-6) -> ReducedState:
    """``u1 = 1/r``, ``u1' = -r'/L``, ``u2 = L0``."""
    L = st.angular_momentum
    L_law = law.L(st.theta)
    if not abs(L - L_law) <= rtol * abs(L_law):
        raise MomentumInconsistency(
            f"r^2 theta' = {L!r} disagrees with the momentum law L(theta) = {L_law!r}"
        )
    return ReducedState(st.theta, 1.0 / st.r, -st.rdot / L, law.L0)


def lift_state(rs: ReducedState, law: MomentumLaw, t: float = 0.0) -> PolarState:
    L = law.L(rs.theta)
    return PolarState(t, 1.0 / rs.u1, rs.theta, -L * rs.du1, L * rs.u1**2)


def integrate_reduced(profile, rs0: ReducedState, span, tol: float = DEFAULT_TOL) -> Trajectory:
    """Solve ``u1'' + omega^2 u1 = 0, u2' = 0`` over ``span``; columns ``u1, du1, u2``."""

    def rhs(theta, y):
        return np.array([y[1], -profile.omega_squared(theta) * y[0], 0.0])

    y0 = [rs0.u1, rs0.du1, rs0.u2]
    a, b = span
    names = ("u1", "du1", "u2")
    if a < rs0.theta < b:
        return integrate_two_sided(rhs, y0, rs0.theta, span, tol, names=names)
    if rs0.theta == a:
        return integrate(rhs, y0, span, tol, names=names)
    if rs0.theta == b:
        return integrate_two_sided(rhs, y0, b, span, tol, names=names)
    raise ValueError(f"initial angle {rs0.theta!r} outside span {span!r}")


# ---------------------------------------------------------------------------
# pushforward of a Cartesian trajectory into the reduced chart


@dataclass
class Pushforward:
    """A simulated Cartesian trajectory seen through the reduction.

    ``theta_grid`` spans the part of the theta-monotone segment where the
    reduction is well conditioned; ``states`` are the polar states there.
    """

    system: ErmakovSystem
    trajectory: Trajectory
    t_start: float
    t_end: float
    turned: bool
    law: MomentumLaw
    profile: FrequencyProfile
    theta_range: tuple[float, float]
    interval: tuple[float, float]
    theta_grid: np.ndarray
    times: np.ndarray
    states: list = field(repr=False)

    @property
    def grid_descriptor(self) -> dict:
        return {
            "theta_min": float(self.theta_grid[0]),
            "theta_max": float(self.theta_grid[-1]),
            "n": int(len(self.theta_grid)),
        }

    def polar(self, t: float) -> PolarState:
        return to_polar(CartesianState(t, *self.trajectory(t)))


def _sign_change_time(f, ts) -> Optional[float]:
    vals = np.array([f(t) for t in ts])
    s0 = np.sign(vals[0])
    for k in range(1, len(ts)):
        if np.sign(vals[k]) != s0:
            return brentq(f, ts[k - 1], ts[k], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return None


def pushforward(
    system: ErmakovSystem,
    ic,
    tspan,
    tol: float = DEFAULT_TOL,
    theta0: float = DEFAULT_THETA0,
    n: int = GRID_POINTS,
    fold_fraction: float = FOLD_FRACTION,
) -> Pushforward:
    """Integrate the Cartesian system and build the theta-grid used by the audits."""
    system.require_polar()
    x, y, vx, vy = map(float, ic)
    if x == 0.0 or y == 0.0:
        raise ValueError(f"pole: initial condition on a coordinate axis (x = {x!r}, y = {y!r})")
    a, b = map(float, tspan)
    tr = integrate(cartesian_vector_field(system), [x, y, vx, vy], (a, b), tol, names=("x", "y", "vx", "vy"))

    def polar(t):
        return to_polar(CartesianState(t, *tr(t)))

    def L_of(t):
        return polar(t).angular_momentum

    if L_of(a) == 0.0:
        raise ValueError("zero angular momentum at the initial condition: theta is not a valid independent variable")
    probe = np.unique(np.concatenate([tr.t, np.linspace(a, b, 2001)]))
    t_turn = _sign_change_time(L_of, probe)
    t_end = b if t_turn is None else t_turn
    ts = probe[probe <= t_end]
    thetas = np.array([polar(t).theta for t in ts])
    if _quadrant(thetas.min() + POLE_GUARD) != _quadrant(thetas.max() - POLE_GUARD):
        raise ValueError("trajectory leaves its initial quadrant")
    th_s = polar(a).theta
    th_e = polar(t_end).theta
    rng = (min(th_s, th_e), max(th_s, th_e))
    st0 = polar(a)
    L2_start = st0.angular_momentum**2

    if not rng[1] > rng[0]:
        raise ValueError("trajectory does not advance in theta")
    # mu on the traversed range gives L0; then apply the fold guard
    mu = mu_function(system, theta0, rng[0], rng[1])
    L0 = L2_start - mu(th_s)
    L2 = lambda th: L0 + mu(th)  # noqa: E731
    th_probe = np.linspace(rng[0], rng[1], 2001)
    L2_vals = np.array([L2(t) for t in th_probe])
    thresh = fold_fraction * L2_vals.max()
    ok = L2_vals >= thresh
    k_star = int(np.argmax(L2_vals))
    i, j = k_star, k_star
    while i > 0 and ok[i - 1]:
        i -= 1
    while j < len(ok) - 1 and ok[j + 1]:
        j += 1
    lo = th_probe[i] if i == 0 else brentq(lambda t: L2(t) - thresh, th_probe[i - 1], th_probe[i])
    hi = th_probe[j] if j == len(ok) - 1 else brentq(lambda t: L2(t) - thresh, th_probe[j], th_probe[j + 1])
    lo = max(lo, rng[0])
    hi = min(hi, rng[1])
    orientation = 1.0 if st0.angular_momentum > 0 else -1.0
    law = MomentumLaw(system, theta0, L0, (lo, hi), orientation)
    profile = FrequencyProfile(system, law)

    grid = np.linspace(lo, hi, n)
    # theta(t) is monotone on [a, t_end]; invert it on the grid.  atan2 is
    # continuous inside one open quadrant, so no unwrapping is needed.
    times = np.empty(n)
    for k, th in enumerate(grid):
        g = lambda t: polar(t).theta - th  # noqa: E731
        ga, gb = g(a), g(t_end)
        if ga == 0:
            times[k] = a
        elif gb == 0:
            times[k] = t_end
        else:
            times[k] = brentq(g, a, t_end, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    states = [polar(t) for t in times]
    return Pushforward(
        system, tr, a, t_end, t_turn is not None, law, profile, rng, (lo, hi), grid, times, states
    )


@dataclass
class ReductionResiduals:
    momentum: np.ndarray  # |r^4 theta'^2 - L0 - mu(theta)|
    full: np.ndarray  # u'' + (L'/L) u' + omega^2 u
    paper: np.ndarray  # u'' + omega^2 u
    dropped: np.ndarray  # (L'/L) u'
    printed_momentum: np.ndarray  # momentum law with the printed transversal profile


def reduction_residuals(pf: Pushforward) -> ReductionResiduals:
    """Residuals of the reduced equations along the pushforward.

    Derivatives in theta come from the polar equations via the chain rule:
    ``u' = -r'/L``, ``u'' = (r^2/L)(-r''/L + r' L_t / L^2)``,
    ``L' = L_t / theta'`` with ``L_t = r F_theta``.
    """
    law, system = pf.law, pf.system
    T_printed = system.printed_transversal_profile
    th0 = law.theta0
    L0_printed = pf.states[0].angular_momentum ** 2 - 2.0 * _integral(T_printed, th0, pf.states[0].theta)
    mom, full, paper, dropped, printed = [], [], [], [], []
    for st in pf.states:
        F_r, F_t = polar_rhs(system, st)
        L = st.angular_momentum
        L2_law = law.L2(st.theta)
        rdd = st.r * st.thetadot**2 + F_r
        Ldot = st.r * F_t
        du = -st.rdot / L
        ddu = (st.r**2 / L) * (-rdd / L + st.rdot * Ldot / L**2)
        drop = (Ldot / st.thetadot) / L * du
        u = 1.0 / st.r
        w2 = pf.profile.omega_squared(st.theta)
        mom.append(abs(L * L - L2_law))
        full.append(ddu + drop + w2 * u)
        paper.append(ddu + w2 * u)
        dropped.append(drop)
        mu_printed = 2.0 * _integral(T_printed, th0, st.theta)
        printed.append(abs(L * L - L0_printed - mu_printed))
    return ReductionResiduals(*(np.array(v) for v in (mom, full, paper, dropped, printed)))


def _integral(f, a, b):
    return adaptive_simpson(f, a, b, 1e-13)


STATEMENTS = {
    "eq2.3": "r^4 theta'^2 = L0 + mu(theta) along the trajectory",
    "reduced_full": "u'' + (L'/L) u' + omega^2(theta) u = 0 along the trajectory",
    "reduced_paper": "u'' + omega^2(theta) u = 0 along the trajectory (dropped-term form)",
    "eq2.10_printed": "momentum law rebuilt from the printed transversal force",
}


def audit_reduction(system, ic, tspan, tol=DEFAULT_TOL, theta0=DEFAULT_THETA0, pf: Pushforward | None = None,
                    tolerances=None, modes=None) -> list[ClaimVerdict]:
    """Momentum law, full reduced residual and dropped-term residual on the audit grid."""
    tolerances = {"eq2.3": 1e-7, "reduced_full": 1e-6, "reduced_paper": 1e-6, **(tolerances or {})}
    modes = {"eq2.3": "assert", "reduced_full": "assert", "reduced_paper": "report", **(modes or {})}
    if pf is None:
        pf = pushforward(system, ic, tspan, tol, theta0)
    res = reduction_residuals(pf)
    grid = pf.grid_descriptor
    out = [
        judge("eq2.3", STATEMENTS["eq2.3"], res.momentum, tolerances["eq2.3"], modes["eq2.3"], grid),
        judge("reduced_full", STATEMENTS["reduced_full"], res.full, tolerances["reduced_full"], modes["reduced_full"], grid),
    ]
    gap = np.abs(np.abs(res.paper) - np.abs(res.dropped))
    paper = judge(
        "reduced_paper", STATEMENTS["reduced_paper"], res.paper, tolerances["reduced_paper"], modes["reduced_paper"], grid
    )
    paper.details = {
        "dropped_term_max": norms(res.dropped)[0],
        "max_gap_to_dropped_term": float(gap.max()),
        "matches_dropped_term": bool(gap.max() <= tolerances["reduced_paper"]),
    }
    out.append(paper)
    return out
