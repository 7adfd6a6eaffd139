"""Command-line front end: ``ermakov <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or pole error, 2 when an assert-mode claim
fails, 3 on an internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import AuditConfig, UnknownClaim, format_table, load_registry, run_audit
from .dynamics import IntegrationError, integrate
from .expr import ExprError, parse_number
from .systems import CartesianState, ErmakovSystem, PoleError, cartesian_vector_field, to_polar

EXIT_OK, EXIT_USAGE, EXIT_ASSERT, EXIT_INTERNAL = 0, 1, 2, 3

SUBCOMMAND_CLAIMS = {
    "reduce": ("eq2.3", "reduced_full", "reduced_paper", "eq2.10_printed", "omega_printed", "polar_identity"),
    "pinney": ("pinney_constraint", "wronskian_abel", "pinney_residual", "ELI_reduced", "ELI_original_printed"),
    "symmetries": tuple(f"gamma_{i}_{w}" for w in ("const", "profile") for i in range(1, 10))
    + ("closure_sl2",)
    + tuple(f"substitution_V{i}" for i in range(1, 11)),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _numbers(text: str, n: int, what: str) -> tuple:
    parts = [p for p in str(text).split(",")]
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(parse_number(p) for p in parts)
    except ExprError as exc:
        raise UsageError(f"{what}: {exc}") from None


def _number(text, what: str) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return parse_number(str(text))
    except ExprError as exc:
        raise UsageError(f"{what}: {exc}") from None


def _pinney(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    if text == "auto":
        return "auto"
    p = Path(text)
    if p.suffix == ".json" or p.exists():
        if not p.exists():
            raise UsageError(f"--pinney file {text!r} not found")
        d = json.loads(p.read_text())
        if d == "auto" or d.get("triple") == "auto":
            return "auto"
        return tuple(float(d[k]) for k in ("A", "B", "C"))
    return _numbers(text, 3, "--pinney")


def _system(value, base: Path | None = None) -> ErmakovSystem:
    if isinstance(value, dict):
        return ErmakovSystem.from_dict(value)
    p = Path(value)
    if base is not None and not p.is_absolute() and not p.exists():
        p = base / p
    if not p.exists():
        raise UsageError(f"system file {str(value)!r} not found")
    try:
        return ErmakovSystem.load(p)
    except (ValueError, ExprError, json.JSONDecodeError) as exc:
        raise UsageError(f"system file {str(value)!r}: {exc}") from None


def _common(p: argparse.ArgumentParser, audit_flags: bool) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON file with default values for any of these flags")
    p.add_argument("--system", metavar="PATH", help="system definition JSON ({class, f, g, h, w, C})")
    p.add_argument("--ic", metavar="X,Y,VX,VY", help="Cartesian initial condition")
    p.add_argument("--tspan", metavar="A,B", help="time span")
    p.add_argument("--tol", metavar="REAL", help="integrator tolerance (default 1e-10)")
    p.add_argument("--out", metavar="PATH", help="write the JSON result here")
    p.add_argument("--csv", metavar="DIR", help="export plot-ready CSV files into this directory")
    if audit_flags:
        p.add_argument("--theta0", metavar="REAL", help="reference angle for mu and the Pinney pair (default pi/4)")
        p.add_argument("--pinney", metavar="A,B,C|auto|PATH", help="Pinney triple, 'auto', or a JSON file with A, B, C")
        p.add_argument("--seed", metavar="INT", help="seed for random sample points (default 42)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ermakov", description="Simulate and audit Ermakov systems.")
    sub = parser.add_subparsers(dest="command", metavar="{simulate,reduce,pinney,symmetries,audit,claims}", parser_class=_Parser)
    sub.required = True
    p = sub.add_parser("simulate", help="integrate the Cartesian equations")
    _common(p, audit_flags=False)
    for name, helptext in (
        ("reduce", "momentum law and reduced-equation residuals"),
        ("pinney", "Pinney sigma, Wronskian and invariant claims"),
        ("symmetries", "flow tests, closure and substitution audit"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p, audit_flags=True)
    p = sub.add_parser("audit", help="run every registered claim")
    _common(p, audit_flags=True)
    p.add_argument("--claims", metavar="IDS|all", help="comma-separated claim ids (default all)")
    p.add_argument("--registry", metavar="PATH", help="claim registry JSON (default: the bundled registry)")
    p = sub.add_parser("claims", help="inspect the claim registry")
    p.add_argument("--list", action="store_true", help="print registry ids and modes")
    p.add_argument("--registry", metavar="PATH", help="claim registry JSON (default: the bundled registry)")
    return parser


def _settings(args) -> dict:
    """Config-file values overlaid with explicit flags."""
    cfg: dict = {}
    base = None
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {args.config!r} not found")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config!r}: {exc}") from None
        unknown = set(cfg) - {"system", "ic", "tspan", "tol", "theta0", "pinney", "claims", "seed", "out", "csv", "registry"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        base = path.parent
    for key, value in vars(args).items():
        if key not in ("command", "config", "list") and value is not None:
            cfg[key] = value
    for key in ("system", "ic", "tspan"):
        if key not in cfg:
            raise UsageError(f"--{key} is required (flag or config file)")
    out = {"system": _system(cfg["system"], base)}
    out["ic"] = _numbers(cfg["ic"], 4, "--ic") if isinstance(cfg["ic"], str) else tuple(map(float, cfg["ic"]))
    out["tspan"] = _numbers(cfg["tspan"], 2, "--tspan") if isinstance(cfg["tspan"], str) else tuple(map(float, cfg["tspan"]))
    if "tol" in cfg:
        out["tol"] = _number(cfg["tol"], "--tol")
    if "theta0" in cfg:
        out["theta0"] = _number(cfg["theta0"], "--theta0")
    if "pinney" in cfg:
        out["pinney"] = _pinney(cfg["pinney"])
    if "seed" in cfg:
        try:
            out["seed"] = int(cfg["seed"])
        except ValueError:
            raise UsageError(f"--seed must be an integer, got {cfg['seed']!r}") from None
    for key in ("claims", "out", "csv", "registry"):
        if key in cfg:
            out[key] = cfg[key]
    return out


def _simulate(s: dict) -> int:
    x, y, vx, vy = s["ic"]
    if x == 0.0 or y == 0.0:
        raise PoleError(f"pole: initial condition on a coordinate axis (x = {x!r}, y = {y!r})")
    tr = integrate(cartesian_vector_field(s["system"]), s["ic"], s["tspan"], s.get("tol", 1e-10), names=("x", "y", "vx", "vy"))
    end = CartesianState(tr.t[-1], *tr.y[-1])
    pol = to_polar(end)
    result = {
        "system": s["system"].to_dict(),
        "ic": list(s["ic"]),
        "tspan": list(s["tspan"]),
        "steps": len(tr.t) - 1,
        "final_state": {"t": end.t, "x": end.x, "y": end.y, "vx": end.vx, "vy": end.vy},
        "final_polar": {"r": pol.r, "theta": pol.theta, "L": pol.angular_momentum},
    }
    print(f"integrated {result['steps']} steps to t = {end.t:.6g}")
    print(f"final state x = {end.x:.12g}, y = {end.y:.12g}, vx = {end.vx:.12g}, vy = {end.vy:.12g}")
    if s.get("out"):
        Path(s["out"]).write_text(json.dumps(result, indent=2) + "\n")
    if s.get("csv"):
        d = Path(s["csv"])
        d.mkdir(parents=True, exist_ok=True)
        tr.to_csv(d / "trajectory.csv")
    return EXIT_OK


def _audit(s: dict, claims) -> int:
    if claims is not None:
        s["claims"] = ",".join(claims)
    report = run_audit(AuditConfig(**s))
    print(format_table(report))
    if s.get("out"):
        print(f"report written to {s['out']}")
    return EXIT_ASSERT if report.assert_failures else EXIT_OK


def _claims(args) -> int:
    if not args.list:
        raise UsageError("claims: nothing to do (use --list)")
    for c in load_registry(args.registry):
        print(f"{c.id:<22} {c.mode:<7} {c.description}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "claims":
            return _claims(args)
        s = _settings(args)
        if args.command == "simulate":
            for key in ("theta0", "pinney", "seed", "claims", "registry"):
                s.pop(key, None)
            return _simulate(s)
        return _audit(s, SUBCOMMAND_CLAIMS.get(args.command))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, UnknownClaim, FileNotFoundError) as exc:
        print(f"error: {_message(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except PoleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        if isinstance(exc.__cause__, PoleError) or "pole" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _message(exc) -> str:
    # KeyError subclasses quote their message
    return exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
