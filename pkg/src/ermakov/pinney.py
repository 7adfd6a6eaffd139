"""Pinney solutions, their phase, and the Ermakov-Lewis invariant.

Given two solutions ``nu``, ``v`` of ``u'' + omega^2(theta) u = 0`` with
Wronskian ``W = nu v' - nu' v``, every

    sigma^2 = A nu^2 + 2 B nu v + C v^2,   A C - B^2 = W^-2

solves ``sigma'' + omega^2 sigma = sigma^-3``.  All derivatives of ``sigma``
are formed analytically from ``nu, nu', v, v'`` and the oscillator itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .dynamics import DEFAULT_TOL, CumulativeIntegral, Trajectory, integrate_two_sided
from .systems import PolarState

__all__ = [
    "PinneyError",
    "FundamentalPair",
    "fundamental_pair",
    "PinneySolution",
    "pinney_sigma",
    "auto_triple",
    "Phase",
    "phase",
    "ermakov_lewis_reduced",
    "ermakov_lewis_original",
    "OriginalInvariant",
]


class PinneyError(ValueError):
    pass


class FundamentalPair:
    """Two oscillator solutions evaluable with their first derivatives.

    ``evaluator(theta)`` returns ``(nu, nu', v, v')``; the profile supplies
    ``omega^2`` (and its derivative) for higher derivatives.
    """

    exact = False

    def __init__(self, evaluator: Callable, profile, interval, theta0: float, nu=None, v=None):
        self._eval = evaluator
        self.profile = profile
        self.interval = tuple(map(float, interval))
        self.theta0 = float(theta0)
        self.nu = nu
        self.v = v
        self.W = self.wronskian(theta0)

    def __call__(self, theta: float):
        return self._eval(theta)

    def wronskian(self, theta: float) -> float:
        n, dn, v, dv = self._eval(theta)
        return n * dv - dn * v

    def __iter__(self):
        # allows ``nu, v, W = fundamental_pair(...)``
        return iter((self.nu, self.v, self.W))

    @classmethod
    def harmonic(cls, omega2: float = 1.0, theta0: float = 0.0, interval=(-math.inf, math.inf)):
        """Closed-form pair for constant ``omega^2``: ``cos(k s)`` and ``sin(k s)/k``."""
        from .reduction import ConstantProfile

        k = math.sqrt(omega2)

        def ev(theta):
            s = theta - theta0
            c, sn = math.cos(k * s), math.sin(k * s)
            return c, -k * sn, sn / k, c

        pair = cls(ev, ConstantProfile(omega2, interval), interval, theta0)
        pair.exact = True
        pair.nu = lambda th: ev(th)[0]
        pair.v = lambda th: ev(th)[2]
        return pair

    @classmethod
    def from_functions(cls, nu, dnu, v, dv, profile, interval, theta0=None):
        """Pair from user-supplied callables (need not be normalised)."""
        if theta0 is None:
            theta0 = interval[0] if math.isfinite(interval[0]) else 0.0
        pair = cls(lambda th: (nu(th), dnu(th), v(th), dv(th)), profile, interval, theta0)
        pair.nu, pair.v = nu, v
        return pair


def fundamental_pair(profile, theta0: float, interval=None, tol: float = DEFAULT_TOL) -> FundamentalPair:
    """Integrate ``nu`` from ``(1, 0)`` and ``v`` from ``(0, 1)`` at ``theta0``; ``W = 1``."""
    interval = profile.interval if interval is None else interval
    lo, hi = map(float, interval)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("fundamental_pair needs a finite working interval")
    if not lo <= theta0 <= hi:
        raise ValueError(f"theta0 = {theta0!r} outside working interval {interval!r}")

    def rhs(theta, y):
        w2 = profile.omega_squared(theta)
        return np.array([y[1], -w2 * y[0], y[3], -w2 * y[2]])

    tr = integrate_two_sided(rhs, [1.0, 0.0, 0.0, 1.0], theta0, (lo, hi), tol, names=("nu", "dnu", "v", "dv"))

    def ev(theta):
        n, dn, v, dv = tr(theta)
        return n, dn, v, dv

    pair = FundamentalPair(ev, profile, (lo, hi), theta0)
    pair.trajectory = tr
    pair.nu = _column(tr, 0)
    pair.v = _column(tr, 2)
    return pair


def _column(tr: Trajectory, k: int) -> Callable[[float], float]:
    return lambda theta: float(tr(theta)[k])


def auto_triple(W: float, A: float = 1.0, B: float = 0.0) -> tuple[float, float, float]:
    """Complete ``(A, B, C)`` with ``C = (W^-2 + B^2) / A``."""
    if A == 0:
        raise PinneyError("A must be non-zero to solve for C")
    return A, B, (W**-2 + B * B) / A


class PinneySolution:
    """``sigma^2 = A nu^2 + 2 B nu v + C v^2`` on the pair's interval."""

    CONSTRAINT_RTOL = 1e-10

    def __init__(self, pair: FundamentalPair, A: float, B: float, C: float, check_samples: int = 401):
        self.pair = pair
        self.A, self.B, self.C = float(A), float(B), float(C)
        self.W = pair.W
        self.profile = pair.profile
        self.interval = pair.interval
        self.constraint_error = abs((self.A * self.C - self.B**2) * self.W**2 - 1.0)
        if not self.constraint_error <= self.CONSTRAINT_RTOL:
            raise PinneyError(
                f"A C - B^2 = {self.A * self.C - self.B ** 2!r} does not equal W^-2 = {self.W ** -2!r}"
            )
        lo, hi = self.interval
        if math.isfinite(lo) and math.isfinite(hi):
            for th in np.linspace(lo, hi, check_samples):
                if not self.sigma_squared(th) > 0:
                    raise PinneyError(f"sigma^2 touches zero at theta = {th!r}")

    def _parts(self, theta):
        n, dn, v, dv = self.pair(theta)
        A, B, C = self.A, self.B, self.C
        S = A * n * n + 2 * B * n * v + C * v * v
        P1 = A * n * dn + B * (dn * v + n * dv) + C * v * dv  # S' / 2
        Q = A * dn * dn + 2 * B * dn * dv + C * dv * dv
        return S, P1, Q

    def sigma_squared(self, theta: float) -> float:
        return self._parts(theta)[0]

    def sigma(self, theta: float) -> float:
        return math.sqrt(self.sigma_squared(theta))

    def dsigma(self, theta: float) -> float:
        S, P1, _ = self._parts(theta)
        return P1 / math.sqrt(S)

    def derivatives(self, theta: float) -> tuple[float, float, float, float]:
        """``(sigma, sigma', sigma'', sigma''')`` at ``theta``.

        Uses ``S'' = 2Q - 2 w S`` and ``S''' = -8 w S'/2 - 2 w' S`` with
        ``w = omega^2``; no Pinney identity is assumed.
        """
        S, P1, Q = self._parts(theta)
        w = self.profile.omega_squared(theta)
        dw = self.profile.d_omega_squared(theta)
        s = math.sqrt(S)
        ds = P1 / s
        S2 = 2 * Q - 2 * w * S
        S3 = -8 * w * P1 - 2 * dw * S
        dds = (S2 / 2 - ds * ds) / s
        ddds = (S3 / 2 - 3 * ds * dds) / s
        return s, ds, dds, ddds

    def residual(self, theta: float) -> float:
        """``sigma'' + omega^2 sigma - sigma^-3``."""
        s, _, dds, _ = self.derivatives(theta)
        return dds + self.profile.omega_squared(theta) * s - s**-3


def pinney_sigma(pair: FundamentalPair, A=1.0, B=0.0, C=None) -> PinneySolution:
    """Build sigma from a pair; ``C=None`` (or ``"auto"``) solves the constraint for C."""
    if C is None or C == "auto":
        A, B, C = auto_triple(pair.W, A, B)
    return PinneySolution(pair, A, B, C)


class Phase:
    """``alpha(theta) = integral_{theta0}^{theta} ds / sigma^2``."""

    def __init__(self, ps: PinneySolution, theta0: float, interval=None):
        self.ps = ps
        self.theta0 = float(theta0)
        lo, hi = ps.interval if interval is None else interval
        self.closed_form = None
        if ps.pair.exact and _is_unit_sigma(ps):
            self.closed_form = lambda th: th - self.theta0
        elif not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("phase needs a finite interval")
        else:
            self._F = CumulativeIntegral(lambda s: 1.0 / ps.sigma_squared(s), theta0, min(lo, theta0), max(hi, theta0))

    def __call__(self, theta: float) -> float:
        if self.closed_form is not None:
            return self.closed_form(theta)
        return self._F(theta)

    def derivatives(self, theta: float) -> tuple[float, float, float]:
        """``(alpha, alpha', alpha'')`` with ``alpha' = sigma^-2``, ``alpha'' = -2 sigma' sigma^-3``."""
        s, ds, _, _ = self.ps.derivatives(theta)
        return self(theta), s**-2, -2 * ds * s**-3


def _is_unit_sigma(ps: PinneySolution) -> bool:
    return all(abs(ps.sigma_squared(t) - 1.0) < 1e-14 for t in (-1.0, 0.0, 0.3, 1.0, 2.0))


def phase(ps: PinneySolution, theta0: float) -> Phase:
    return Phase(ps, theta0)


def ermakov_lewis_reduced(u, du, sigma, dsigma):
    """``I* = (u^2 / sigma^2 + (sigma u' - sigma' u)^2) / 2``."""
    return 0.5 * (u * u / (sigma * sigma) + (sigma * du - dsigma * u) ** 2)


class OriginalInvariant(NamedTuple):
    printed: float  # (sigma^-2 r^-2 - (sigma r'/L + sigma_t / r)^2) / 2
    pullback: float  # reduced invariant through u = 1/r, u' = -r'/L


def ermakov_lewis_original(st: PolarState, sigma: float, sigma_t: float, L: float) -> OriginalInvariant:
    """Invariant in the ``(t, r)`` chart, as printed and as pulled back.

    ``sigma_t`` is the time derivative of ``sigma(theta(t))``; the pullback
    converts it back to ``d sigma / d theta = sigma_t / theta'``.
    """
    if not sigma > 0:
        raise PinneyError("sigma must be positive")
    r = st.r
    printed = 0.5 * (1.0 / (sigma * sigma * r * r) - (sigma * st.rdot / L + sigma_t / r) ** 2)
    dsigma_theta = sigma_t * r * r / L
    u, du = 1.0 / r, -st.rdot / L
    return OriginalInvariant(printed, ermakov_lewis_reduced(u, du, sigma, dsigma_theta))
