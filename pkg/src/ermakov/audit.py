"""End-to-end claim audits.

A run goes simulate -> push forward to ``(theta, u)`` -> frequency profile
-> Pinney ``sigma`` and phase -> every registered claim.  Stages are built
once, in order; claims then run concurrently and read frozen stage outputs.
A failing stage turns each claim that depends on it into a FAIL verdict
with the stage's reason instead of aborting the run.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .dynamics import DEFAULT_TOL, write_csv
from .pinney import FundamentalPair, Phase, PinneySolution, ermakov_lewis_original, ermakov_lewis_reduced, fundamental_pair
from .reduction import (
    DEFAULT_THETA0,
    ConstantProfile,
    ReducedState,
    audit_reduction,
    integrate_reduced,
    pushforward,
    reduce_state,
    reduction_residuals,
)
from .systems import (
    ErmakovSystem,
    PoleError,
    PolarState,
    PreconditionError,
    polar_image_of_cartesian,
    polar_rhs,
)
from .symmetry import (
    SigmaBasis,
    back_transformed_generators,
    closure_check,
    flow_symmetry_test,
    point_generators,
    substitution_audit,
)
from .verdicts import FAIL, PASS, REPORT_ONLY, ClaimVerdict, failed, judge

__all__ = [
    "AuditConfig",
    "AuditReport",
    "Claim",
    "load_registry",
    "default_registry",
    "run_audit",
    "format_table",
    "UnknownClaim",
    "TIMING_FIELDS",
]

DEFAULT_SEED = 42
POLAR_SAMPLES = 1000
CLOSURE_POINTS = 5
# integrations in the reduced chart (fundamental pair, direct oscillator
# solution) are cheap, so they run tighter than the Cartesian simulation
REDUCED_TOL = 1e-12
TIMING_FIELDS = ("generated_at", "timing")


class UnknownClaim(KeyError):
    pass


@dataclass(frozen=True)
class Claim:
    id: str
    description: str
    tolerance: float | None
    mode: str

    def __post_init__(self):
        if self.mode not in ("assert", "report"):
            raise ValueError(f"claim {self.id!r}: mode must be 'assert' or 'report', got {self.mode!r}")


def load_registry(path=None) -> list[Claim]:
    """Claims from a JSON list of ``{id, description, tolerance, mode}``."""
    if path is None:
        text = resources.files("ermakov").joinpath("data/claims.json").read_text()
    else:
        text = Path(path).read_text()
    claims = [Claim(d["id"], d.get("description", ""), d.get("tolerance"), d.get("mode", "assert")) for d in json.loads(text)]
    ids = [c.id for c in claims]
    if len(set(ids)) != len(ids):
        raise ValueError("claim registry contains duplicate ids")
    unknown = [i for i in ids if i not in _CLAIMS]
    if unknown:
        raise UnknownClaim(f"registry lists claims with no implementation: {unknown}")
    return claims


def default_registry() -> list[Claim]:
    return load_registry()


def select_claims(registry: list[Claim], selection) -> list[Claim]:
    """``"all"``, a comma-separated string or an iterable of ids; unknown ids raise."""
    if selection is None or selection == "all":
        return list(registry)
    ids = [s.strip() for s in selection.split(",")] if isinstance(selection, str) else list(selection)
    by_id = {c.id: c for c in registry}
    unknown = [i for i in ids if i not in by_id]
    if unknown:
        raise UnknownClaim(f"unknown claim ids: {', '.join(unknown)}")
    return [by_id[i] for i in ids]


@dataclass
class AuditConfig:
    system: ErmakovSystem
    ic: tuple
    tspan: tuple
    tol: float = DEFAULT_TOL
    reduced_tol: float = REDUCED_TOL
    theta0: float = DEFAULT_THETA0
    pinney: object = "auto"  # "auto" or (A, B, C)
    claims: object = "all"
    seed: int = DEFAULT_SEED
    registry: str | None = None
    out: str | None = None
    csv: str | None = None

    def __post_init__(self):
        self.ic = tuple(float(v) for v in self.ic)
        self.tspan = tuple(float(v) for v in self.tspan)
        if len(self.ic) != 4:
            raise ValueError("initial condition needs x, y, vx, vy")
        if len(self.tspan) != 2 or not self.tspan[1] > self.tspan[0]:
            raise ValueError("time span needs a < b")
        if not (self.tol > 0 and self.reduced_tol > 0):
            raise ValueError("tolerance must be positive")
        x, y = self.ic[:2]
        if x == 0.0 or y == 0.0:
            raise PoleError(f"pole: initial condition on a coordinate axis (x = {x!r}, y = {y!r})")
        if self.pinney != "auto":
            self.pinney = tuple(float(v) for v in self.pinney)
            if len(self.pinney) != 3:
                raise ValueError("Pinney triple needs A, B, C")
        if self.registry is not None and not Path(self.registry).exists():
            raise FileNotFoundError(f"claim registry {self.registry!r} not found")

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "ic": list(self.ic),
            "tspan": list(self.tspan),
            "tol": self.tol,
            "reduced_tol": self.reduced_tol,
            "theta0": self.theta0,
            "pinney": self.pinney if self.pinney == "auto" else list(self.pinney),
            "claims": self.claims if isinstance(self.claims, str) else list(self.claims),
            "seed": self.seed,
        }


@dataclass
class AuditReport:
    config: dict
    version: str
    verdicts: list[ClaimVerdict]
    stages: dict
    modes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    generated_at: str = ""
    wall_time_s: float = 0.0

    @property
    def assert_failures(self) -> list[ClaimVerdict]:
        return [v for v in self.verdicts if v.verdict == FAIL and self.modes.get(v.claim, "assert") == "assert"]

    def summary(self) -> dict:
        return {k: sum(v.verdict == k for v in self.verdicts) for k in (PASS, FAIL, REPORT_ONLY)}

    def to_dict(self) -> dict:
        return {
            "artifact": "ermakov",
            "version": self.version,
            "config": self.config,
            "stages": self.stages,
            "summary": self.summary(),
            "claims": [{**v.to_dict(), "mode": self.modes.get(v.claim, "assert")} for v in self.verdicts],
            "generated_at": self.generated_at,
            "timing": {"wall_time_s": self.wall_time_s, "claims": self.timings},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())


# ---------------------------------------------------------------------------
# stages


class StageFailure(RuntimeError):
    def __init__(self, stage: str, reason: str):
        super().__init__(reason)
        self.stage = stage
        self.reason = reason


class Stages:
    """Lazily built, memoised pipeline products; errors are memoised too."""

    ORDER = ("constant", "pushforward", "profile_solution", "pinney", "generators")

    def __init__(self, cfg: AuditConfig):
        self.cfg = cfg
        self._values: dict = {}
        self._errors: dict = {}

    def get(self, name: str):
        if name in self._errors:
            raise self._errors[name]
        if name not in self._values:
            try:
                self._values[name] = getattr(self, "_build_" + name)()
            except StageFailure as exc:
                self._errors[name] = exc
                raise
            except Exception as exc:  # stage errors become verdicts downstream
                reason = str(exc) if isinstance(exc, PreconditionError) else f"upstream failure ({name}): {exc}"
                self._errors[name] = StageFailure(name, reason)
                raise self._errors[name] from exc
        return self._values[name]

    def status(self) -> dict:
        out = {}
        for name in self.ORDER:
            if name in self._values:
                out[name] = "ok"
            elif name in self._errors:
                out[name] = self._errors[name].reason
        return out

    def build_all(self) -> None:
        for name in self.ORDER:
            try:
                self.get(name)
            except StageFailure:
                pass

    def _build_constant(self):
        pair = FundamentalPair.harmonic(1.0, 0.0)
        ps = PinneySolution(pair, 1.0, 0.0, 1.0)
        ph = Phase(ps, 0.0)
        gens = point_generators(ps, ph)
        prof = ConstantProfile(1.0)
        base = integrate_reduced(prof, ReducedState(0.0, 0.7, 0.3, 0.0), (0.0, 3.0), self.cfg.reduced_tol)
        return {"profile": prof, "generators": gens, "base": base}

    def _build_pushforward(self):
        cfg = self.cfg
        return pushforward(cfg.system, cfg.ic, cfg.tspan, cfg.tol, cfg.theta0)

    def _build_profile_solution(self):
        # a direct solution of the published-form oscillator, started from the
        # first audit-grid state of the trajectory
        pf = self.get("pushforward")
        rs0 = reduce_state(pf.states[0], pf.law)
        return integrate_reduced(pf.profile, rs0, pf.interval, self.cfg.reduced_tol)

    def _build_pinney(self):
        pf = self.get("pushforward")
        lo, hi = pf.interval
        th0 = self.cfg.theta0 if lo <= self.cfg.theta0 <= hi else lo
        pair = fundamental_pair(pf.profile, th0, pf.interval, self.cfg.reduced_tol)
        if self.cfg.pinney == "auto":
            A, B, C = 1.0, 0.0, pair.W**-2
        else:
            A, B, C = self.cfg.pinney
        ps = PinneySolution(pair, A, B, C)
        ph = Phase(ps, th0)
        return {"pair": pair, "sigma": ps, "phase": ph, "theta0": th0, "basis": SigmaBasis(ps, ph)}

    def _build_generators(self):
        pf = self.get("pushforward")
        p = self.get("pinney")
        return {
            "point": point_generators(p["basis"], None),
            "original": back_transformed_generators(p["basis"], None, pf.law),
        }


# ---------------------------------------------------------------------------
# claims: id -> function(stages, claim, cfg) -> ClaimVerdict


def _reduction_claims(stages, claim, cfg):
    pf = stages.get("pushforward")
    verdicts = audit_reduction(
        cfg.system, cfg.ic, cfg.tspan, cfg.tol, cfg.theta0, pf=pf,
        tolerances={claim.id: claim.tolerance}, modes={claim.id: claim.mode},
    )
    return next(v for v in verdicts if v.claim == claim.id)


def _eq2_10_printed(stages, claim, cfg):
    pf = stages.get("pushforward")
    res = reduction_residuals(pf)
    v = judge(claim.id, claim.description, res.printed_momentum, claim.tolerance, claim.mode, pf.grid_descriptor)
    v.details = {"consistent_form_max": float(np.max(res.momentum))}
    return v


def _omega_printed(stages, claim, cfg):
    pf = stages.get("pushforward")
    diffs = [pf.profile.printed_omega_squared(t) - pf.profile.omega_squared(t) for t in pf.theta_grid]
    return judge(claim.id, claim.description, diffs, claim.tolerance, claim.mode, pf.grid_descriptor)


def _polar_identity(stages, claim, cfg):
    cfg.system.require_polar()
    rng = np.random.default_rng(cfg.seed)
    x, y = cfg.ic[:2]
    base = math.atan2(y, x)
    q_lo = math.floor(base / (math.pi / 2)) * (math.pi / 2)
    margin = 0.05
    res = []
    for _ in range(POLAR_SAMPLES):
        st = PolarState(
            0.0,
            rng.uniform(0.2, 5.0),
            rng.uniform(q_lo + margin, q_lo + math.pi / 2 - margin),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
        )
        Fr, Ft = polar_rhs(cfg.system, st)
        Cr, Ct = polar_image_of_cartesian(cfg.system, st)
        scale = 1.0 + max(abs(Cr), abs(Ct))
        res.append(max(abs(Fr - Cr), abs(Ft - Ct)) / scale)
    v = judge(claim.id, claim.description, res, claim.tolerance, claim.mode, {"random_states": POLAR_SAMPLES, "seed": cfg.seed})
    v.details = {"normalisation": "max component error / (1 + max |Cartesian projection|)"}
    return v


def _pinney_constraint(stages, claim, cfg):
    ps = stages.get("pinney")["sigma"]
    v = judge(claim.id, claim.description, [ps.constraint_error], claim.tolerance, claim.mode, None)
    v.details = {"A": ps.A, "B": ps.B, "C": ps.C, "W": ps.W}
    return v


def _wronskian(stages, claim, cfg):
    pf = stages.get("pushforward")
    pair = stages.get("pinney")["pair"]
    W = pair.W
    res = [(pair.wronskian(t) - W) / W for t in pf.theta_grid]
    return judge(claim.id, claim.description, res, claim.tolerance, claim.mode, pf.grid_descriptor)


def _pinney_residual(stages, claim, cfg):
    pf = stages.get("pushforward")
    ps = stages.get("pinney")["sigma"]
    return judge(claim.id, claim.description, [ps.residual(t) for t in pf.theta_grid], claim.tolerance, claim.mode, pf.grid_descriptor)


def _eli_reduced(stages, claim, cfg):
    pf = stages.get("pushforward")
    ps = stages.get("pinney")["sigma"]
    sol = stages.get("profile_solution")
    vals = []
    for t in pf.theta_grid:
        u, du = sol(t)[:2]
        vals.append(ermakov_lewis_reduced(u, du, ps.sigma(t), ps.dsigma(t)))
    vals = np.array(vals)
    v = judge(claim.id, claim.description, vals - vals[0], claim.tolerance, claim.mode, pf.grid_descriptor)
    v.details = {"invariant_value": float(vals[0])}
    return v


def _eli_original(stages, claim, cfg):
    pf = stages.get("pushforward")
    ps = stages.get("pinney")["sigma"]
    printed, pullback = [], []
    for st in pf.states:
        L = st.angular_momentum
        inv = ermakov_lewis_original(st, ps.sigma(st.theta), st.thetadot * ps.dsigma(st.theta), L)
        printed.append(inv.printed)
        pullback.append(inv.pullback)
    printed, pullback = np.array(printed), np.array(pullback)
    v = judge(claim.id, claim.description, printed - printed[0], claim.tolerance, claim.mode, pf.grid_descriptor)
    v.details = {
        "printed_initial": float(printed[0]),
        "pullback_drift_max": float(np.max(np.abs(pullback - pullback[0]))),
        "printed_minus_pullback_max": float(np.max(np.abs(printed - pullback))),
        "note": "the trajectory solves the full reduced equation, so neither form need be constant",
    }
    return v


def _gamma(index: int, where: str):
    def run(stages, claim, cfg):
        if where == "const":
            c = stages.get("constant")
            gen, prof, base = c["generators"][index - 1], c["profile"], c["base"]
        else:
            pf = stages.get("pushforward")
            gen = stages.get("generators")["point"][index - 1]
            prof, base = pf.profile, stages.get("profile_solution")
        v = flow_symmetry_test(gen, prof, base, claim=claim.id, mode=claim.mode)
        v.statement = claim.description or v.statement
        return v

    return run


def _closure(stages, claim, cfg):
    gens = stages.get("constant")["generators"]
    pts = np.random.default_rng(cfg.seed).uniform([0.0, -1.0], [3.0, 1.0], (CLOSURE_POINTS, 2))
    v = closure_check([gens[1], gens[2], gens[5]], pts, claim=claim.id, tolerance=claim.tolerance, mode=claim.mode)
    v.grid = {"points": CLOSURE_POINTS, "seed": cfg.seed}
    return v


def _substitution(index: int):
    def run(stages, claim, cfg):
        pf = stages.get("pushforward")
        g = stages.get("generators")
        G = g["point"][index - 1] if index <= 9 else None
        v = substitution_audit(G, g["original"][index - 1], pf.states, pf.law, claim=claim.id)
        v.grid = pf.grid_descriptor if G is not None else None
        return v

    return run


_CLAIMS: dict[str, tuple[Callable, tuple]] = {
    "eq2.3": (_reduction_claims, ("pushforward",)),
    "reduced_full": (_reduction_claims, ("pushforward",)),
    "reduced_paper": (_reduction_claims, ("pushforward",)),
    "eq2.10_printed": (_eq2_10_printed, ("pushforward",)),
    "omega_printed": (_omega_printed, ("pushforward",)),
    "polar_identity": (_polar_identity, ()),
    "pinney_constraint": (_pinney_constraint, ("pinney",)),
    "wronskian_abel": (_wronskian, ("pinney",)),
    "pinney_residual": (_pinney_residual, ("pinney",)),
    "ELI_reduced": (_eli_reduced, ("pinney", "profile_solution")),
    "ELI_original_printed": (_eli_original, ("pinney",)),
    "closure_sl2": (_closure, ("constant",)),
}
for _i in range(1, 10):
    _CLAIMS[f"gamma_{_i}_const"] = (_gamma(_i, "const"), ("constant",))
    _CLAIMS[f"gamma_{_i}_profile"] = (_gamma(_i, "profile"), ("generators", "profile_solution"))
for _i in range(1, 11):
    _CLAIMS[f"substitution_V{_i}"] = (_substitution(_i), ("generators",))


def _evaluate(stages: Stages, claim: Claim, cfg: AuditConfig) -> tuple[ClaimVerdict, float]:
    start = time.perf_counter()
    fn, _ = _CLAIMS[claim.id]
    try:
        v = fn(stages, claim, cfg)
    except StageFailure as exc:
        v = failed(claim.id, claim.description, exc.reason, claim.tolerance)
    except PreconditionError as exc:
        v = failed(claim.id, claim.description, str(exc), claim.tolerance)
    except Exception as exc:  # a broken claim is a FAIL, never a crash
        v = failed(claim.id, claim.description, f"{type(exc).__name__}: {exc}", claim.tolerance)
    return v, time.perf_counter() - start


def _threads() -> int:
    env = os.environ.get("ERMAKOV_AUDIT_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("ERMAKOV_AUDIT_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def run_audit(cfg: AuditConfig) -> AuditReport:
    """Run every selected claim; verdicts follow registry order."""
    t_start = time.perf_counter()
    claims = select_claims(load_registry(cfg.registry), cfg.claims)
    stages = Stages(cfg)
    needed = {s for c in claims for s in _CLAIMS[c.id][1]}
    needed |= {d for s in needed for d in _STAGE_DEPS[s]}
    # stages are frozen before any claim reads them
    for name in Stages.ORDER:
        if name in needed:
            try:
                stages.get(name)
            except StageFailure:
                pass
    with ThreadPoolExecutor(max_workers=min(_threads(), max(len(claims), 1))) as pool:
        results = list(pool.map(lambda c: _evaluate(stages, c, cfg), claims))
    report = AuditReport(
        config=cfg.to_dict(),
        version=__version__,
        verdicts=[v for v, _ in results],
        modes={c.id: c.mode for c in claims},
        stages=stages.status(),
        timings={c.id: dt for c, (_, dt) in zip(claims, results)},
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    report.wall_time_s = time.perf_counter() - t_start
    if cfg.csv:
        export_csv(stages, report, cfg.csv)
    if cfg.out:
        report.write(cfg.out)
    return report


_STAGE_DEPS = {
    "constant": (),
    "pushforward": (),
    "profile_solution": ("pushforward",),
    "pinney": ("pushforward",),
    "generators": ("pushforward", "pinney"),
}


def export_csv(stages: Stages, report: AuditReport, directory) -> list[Path]:
    """Plot-ready CSV files (17 significant digits) for whatever stages exist."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        pf = stages.get("pushforward")
    except StageFailure:
        pf = None
    if pf is not None:
        p = d / "trajectory.csv"
        pf.trajectory.to_csv(p)
        written.append(p)
        res = reduction_residuals(pf)
        p = d / "reduction_residuals.csv"
        write_csv(
            p,
            ("theta", "t", "momentum", "reduced_full", "reduced_paper", "dropped_term"),
            zip(pf.theta_grid, pf.times, res.momentum, res.full, res.paper, res.dropped),
        )
        written.append(p)
        try:
            ps = stages.get("pinney")["sigma"]
        except StageFailure:
            ps = None
        if ps is not None:
            rows = []
            for t in pf.theta_grid:
                s, ds, dds, _ = ps.derivatives(t)
                rows.append((t, s, ds, dds, ps.residual(t)))
            p = d / "pinney.csv"
            write_csv(p, ("theta", "sigma", "dsigma", "ddsigma", "residual"), rows)
            written.append(p)
    p = d / "verdicts.csv"
    write_csv(
        p,
        ("claim", "verdict", "residual_max", "residual_l2", "tolerance", "order"),
        [
            (v.claim, v.verdict, _num(v.residual_max), _num(v.residual_l2), _num(v.tolerance), _num(v.order))
            for v in report.verdicts
        ],
    )
    written.append(p)
    return written


def _num(v):
    return "" if v is None else v


def format_table(report: AuditReport) -> str:
    """Human-readable summary, one line per claim."""
    lines = [f"{'claim':<22} {'verdict':<12} {'residual_max':>13} {'tolerance':>11}  note"]
    for v in report.verdicts:
        rm = "-" if v.residual_max is None else f"{v.residual_max:.3e}"
        tol = "-" if v.tolerance is None else f"{v.tolerance:.1e}"
        note = v.reason or ""
        if v.order is not None:
            note = f"p = {v.order:.3g}" + (f"; {note}" if note else "")
        lines.append(f"{v.claim:<22} {v.verdict:<12} {rm:>13} {tol:>11}  {note}")
    s = report.summary()
    lines.append(f"{s[PASS]} PASS, {s[FAIL]} FAIL, {s[REPORT_ONLY]} REPORT_ONLY")
    return "\n".join(lines)
