"""Initial-value integration with dense output, and 1-D quadrature.

The adaptive integrator is the Dormand-Prince 5(4) pair with its free
4th-order continuous extension.  A classical fixed-step RK4 is kept as a
reference for convergence-order checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "IntegrationError",
    "StepSizeUnderflow",
    "QuadratureError",
    "Trajectory",
    "integrate",
    "integrate_two_sided",
    "rk4",
    "adaptive_simpson",
    "CumulativeIntegral",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10
MAX_STEPS = 10**6


class IntegrationError(RuntimeError):
    """The right-hand side could not be evaluated along the solution."""

    def __init__(self, message: str, t: float, y=None):
        self.t = t
        self.y = y
        super().__init__(f"{message} (at t = {t!r})")


class StepSizeUnderflow(IntegrationError):
    pass


class QuadratureError(RuntimeError):
    pass


# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)  # 5th minus 4th order weights
# continuous extension: y(t0 + s h) = y0 + h * K^T P [s, s^2, s^3, s^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@dataclass(frozen=True)
class Trajectory:
    """Dense-output solution of an IVP in one independent variable.

    ``t`` is strictly increasing, ``y[i]`` is the state at ``t[i]`` and
    ``coeffs[i]`` holds the polynomial coefficients of the interpolant on
    ``[t[i], t[i+1]]`` (shape ``(n_intervals, dim, degree)``).
    """

    t: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)
    names: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory samples must be strictly increasing")
        for arr in (self.t, self.y, self.coeffs):
            arr.setflags(write=False)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    def __call__(self, t):
        """Evaluate the dense output at scalar or array ``t``."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.span
        if np.any(ts < lo) or np.any(ts > hi):
            bad = ts[(ts < lo) | (ts > hi)][0]
            raise ValueError(f"t = {bad!r} outside trajectory span [{lo!r}, {hi!r}]")
        idx = np.searchsorted(self.t, ts, side="right") - 1
        idx = np.clip(idx, 0, len(self.t) - 1)
        out = np.empty((len(ts), self.dim))
        at_node = ts == self.t[idx]
        out[at_node] = self.y[idx[at_node]]
        rest = ~at_node
        if np.any(rest):
            i = idx[rest]
            h = self.t[i + 1] - self.t[i]
            s = (ts[rest] - self.t[i]) / h
            deg = self.coeffs.shape[2]
            powers = np.cumprod(np.repeat(s[:, None], deg, axis=1), axis=1)
            out[rest] = self.y[i] + h[:, None] * np.einsum("kdj,kj->kd", self.coeffs[i], powers)
        return out[0] if scalar else out

    def to_csv(self, path, ts=None, columns: Sequence[str] | None = None) -> None:
        """Write samples (or dense output at ``ts``) as CSV with 17 significant digits."""
        ts = self.t if ts is None else np.asarray(ts, dtype=float)
        ys = self.y if ts is self.t else self(ts)
        names = list(columns or self.names or [f"y{k}" for k in range(self.dim)])
        write_csv(path, ["t"] + names, np.column_stack([ts, ys]))


def write_csv(path, header: Sequence[str], rows) -> None:
    """CSV with a header row; numbers get 17 significant digits, text is kept."""
    if isinstance(rows, np.ndarray):
        rows = np.atleast_2d(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else format(float(v), ".17g") for v in row])


def _max_norm(x):
    return float(np.max(np.abs(x)))


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: tuple[float, float],
    tol: float = DEFAULT_TOL,
    max_steps: int = MAX_STEPS,
    names: Sequence[str] = (),
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``span = (a, b)`` with ``b > a``.

    The local error estimate per step is kept below
    ``tol * (1 + max|y|)`` componentwise.  Errors raised by ``rhs`` (domain
    errors, poles) stop the integration and are reported with the location.
    """
    a, b = map(float, span)
    if not b > a:
        raise ValueError(f"need b > a, got span {span!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=float)
    dim = y.size

    def f(t, y):
        try:
            out = np.asarray(rhs(t, y), dtype=float)
        except (ArithmeticError, ValueError) as exc:
            raise IntegrationError(f"right-hand side failed: {exc}", t, y) from exc
        if not np.all(np.isfinite(out)):
            raise IntegrationError("right-hand side is not finite", t, y)
        return out

    ts = [a]
    ys = [y.copy()]
    cs = []
    K = np.empty((7, dim))
    K[0] = f(a, y)
    t = a
    # initial step (Hairer, Norsett & Wanner II.4)
    scale = tol * (1 + np.abs(y))
    d0 = _max_norm(y / scale)
    d1 = _max_norm(K[0] / scale)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, b - a)
    y1 = y + h * K[0]
    d2 = _max_norm((f(a + h, y1) - K[0]) / scale) / h
    h1 = max(1e-6, h * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h, h1, b - a)

    n_rejected = 0
    n_steps = 0
    while t < b:
        if n_steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps", t, y)
        hmin = 16 * np.spacing(t if t != 0 else 1.0)
        if h < hmin:
            raise StepSizeUnderflow("step size underflow", t, y)
        last = t + h >= b
        if last:
            h = b - t
        for s in range(1, 7):
            K[s] = f(t + _C[s] * h, y + h * (np.dot(_A[s], K[:s])))
        y_new = y + h * (_B @ K)
        err = h * (_E @ K)
        sc = tol * (1 + np.maximum(np.abs(y), np.abs(y_new)))
        err_norm = _max_norm(err / sc)
        if err_norm <= 1.0:
            t_new = b if last else t + h
            cs.append(K.T @ _P)
            ts.append(t_new)
            ys.append(y_new)
            t, y = t_new, y_new
            K[0] = K[6]  # FSAL
            n_steps += 1
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm**-0.2)
        else:
            n_rejected += 1
            factor = max(0.2, 0.9 * err_norm**-0.2)
        h *= factor

    meta = {
        "method": "dopri5",
        "order": 5,
        "dense_order": 4,
        "tol": tol,
        "steps": n_steps,
        "rejected": n_rejected,
    }
    return Trajectory(np.array(ts), np.array(ys), np.array(cs), meta, tuple(names))


def integrate_two_sided(rhs, y0, t0: float, span, tol: float = DEFAULT_TOL, names=()) -> Trajectory:
    """Integrate from an interior point ``t0`` out to both ends of ``span``."""
    a, b = map(float, span)
    if not a <= t0 <= b or a == b:
        raise ValueError(f"t0 = {t0!r} not inside span {span!r}")
    y0 = np.asarray(y0, dtype=float)
    pieces = []
    if t0 > a:
        rev = integrate(lambda s, y: -np.asarray(rhs(-s, y)), y0, (-t0, -a), tol, names=names)
        # time-reversed piece: mirror samples and re-express the interpolants
        t_back = -rev.t[::-1]
        y_back = rev.y[::-1]
        c_back = _reverse_coeffs(rev)
        pieces.append((t_back, y_back, c_back, rev.meta))
    if b > t0:
        fwd = integrate(rhs, y0, (t0, b), tol, names=names)
        pieces.append((fwd.t, fwd.y, fwd.coeffs, fwd.meta))
    if len(pieces) == 1:
        t, y, c, meta = pieces[0]
        return Trajectory(t, y, c, dict(meta), tuple(names))
    (t1, y1, c1, m1), (t2, y2, c2, m2) = pieces
    meta = dict(m2)
    meta["steps"] = m1["steps"] + m2["steps"]
    meta["rejected"] = m1["rejected"] + m2["rejected"]
    return Trajectory(
        np.concatenate([t1, t2[1:]]),
        np.concatenate([y1, y2[1:]]),
        np.concatenate([c1, c2]),
        meta,
        tuple(names),
    )


def _reverse_coeffs(tr: Trajectory) -> np.ndarray:
    """Rewrite interpolants of a trajectory in s = -t over reversed intervals.

    On the forward interval ``[s_i, s_{i+1}]`` the interpolant is
    ``y_i + h q(w)`` with ``q(w) = sum_j c_j w^j``.  In the mirrored variable
    the interval starts at ``s_{i+1}`` with local coordinate ``w' = 1 - w``
    and base value ``y_{i+1} = y_i + h q(1)``; so the new polynomial is
    ``q(1 - w') - q(1)``.
    """
    c = tr.coeffs  # (n, dim, deg), polynomial sum_{j=1..deg} c_{j} w^j
    n, dim, deg = c.shape
    full = np.concatenate([np.zeros((n, dim, 1)), c], axis=2)  # index = power
    out = np.zeros_like(full)
    # expand (1 - w')^j
    for j in range(deg + 1):
        for k in range(j + 1):
            out[:, :, k] += full[:, :, j] * math.comb(j, k) * (-1) ** k
    out[:, :, 0] -= full.sum(axis=2)
    return out[::-1, :, 1:]


def rk4(rhs, y0, span, n_steps: int) -> np.ndarray:
    """Classical fixed-step RK4; returns the state at every step (``n_steps + 1`` rows)."""
    a, b = map(float, span)
    h = (b - a) / n_steps
    y = np.array(y0, dtype=float)
    out = [y.copy()]
    for i in range(n_steps):
        t = a + i * h
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + h / 2, y + h / 2 * k1))
        k3 = np.asarray(rhs(t + h / 2, y + h / 2 * k2))
        k4 = np.asarray(rhs(t + h, y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


# ---------------------------------------------------------------------------
# quadrature


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12, max_depth: int = 40) -> float:
    """Adaptive Simpson estimate of the integral of ``f`` over ``[a, b]``.

    Uses the Richardson-corrected estimate with the classical ``15 * tol``
    acceptance test.  Raises :class:`QuadratureError` when a subinterval
    fails to converge within ``max_depth`` bisections.
    """
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)

    # explicit stack instead of recursion
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a_, b_, fa_, fm_, fb_, whole_, tol_, depth = stack.pop()
        m_ = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m_), 0.5 * (m_ + b_)
        flm, frm = f(lm), f(rm)
        left = (m_ - a_) / 6 * (fa_ + 4 * flm + fm_)
        right = (b_ - m_) / 6 * (fm_ + 4 * frm + fb_)
        delta = left + right - whole_
        if abs(delta) <= 15 * tol_ or abs(m_ - a_) <= 4 * np.spacing(abs(m_) + 1.0):
            total += left + right + delta / 15
        elif depth >= max_depth:
            raise QuadratureError(
                f"no convergence on [{a_!r}, {b_!r}] after {max_depth} bisections (|delta| = {abs(delta):.3g})"
            )
        else:
            stack.append((a_, m_, fa_, flm, fm_, left, tol_ / 2, depth + 1))
            stack.append((m_, b_, fm_, frm, fb_, right, tol_ / 2, depth + 1))
    return float(total)


class CumulativeIntegral:
    """``F(s) = integral_{s0}^{s} f`` on ``[lo, hi]`` with cached node values.

    Node values are accumulated once with adaptive Simpson; evaluation adds a
    short adaptive-Simpson piece from the nearest node.
    """

    def __init__(self, f, s0: float, lo: float, hi: float, n_nodes: int = 64, tol: float = 1e-13):
        if not lo <= s0 <= hi:
            raise ValueError(f"reference point {s0!r} outside [{lo!r}, {hi!r}]")
        self.f = f
        self.s0 = float(s0)
        self.lo = float(lo)
        self.hi = float(hi)
        self.tol = tol
        nodes = np.unique(np.concatenate([np.linspace(lo, hi, n_nodes), [s0]]))
        k0 = int(np.searchsorted(nodes, s0))
        values = np.zeros(len(nodes))
        piece_tol = tol / max(len(nodes), 1)
        for k in range(k0 + 1, len(nodes)):
            values[k] = values[k - 1] + adaptive_simpson(f, nodes[k - 1], nodes[k], piece_tol)
        for k in range(k0 - 1, -1, -1):
            values[k] = values[k + 1] - adaptive_simpson(f, nodes[k], nodes[k + 1], piece_tol)
        self.nodes = nodes
        self.values = values
        self._piece_tol = piece_tol

    def __call__(self, s: float) -> float:
        s = float(s)
        if not self.lo - 1e-12 <= s <= self.hi + 1e-12:
            raise ValueError(f"{s!r} outside [{self.lo!r}, {self.hi!r}]")
        k = int(np.argmin(np.abs(self.nodes - s)))
        node = self.nodes[k]
        if s == node:
            return float(self.values[k])
        return float(self.values[k] + adaptive_simpson(self.f, node, s, self._piece_tol))
