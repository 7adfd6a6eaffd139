"""Claim verdicts shared by every audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
REPORT_ONLY = "REPORT_ONLY"


@dataclass
class ClaimVerdict:
    claim: str
    statement: str
    verdict: str
    residual_max: Optional[float] = None
    residual_l2: Optional[float] = None
    tolerance: Optional[float] = None
    grid: Optional[dict] = None
    order: Optional[float] = None
    reason: Optional[str] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict == PASS and self.tolerance is not None:
            if self.residual_max is None or not self.residual_max <= self.tolerance:
                raise ValueError(f"{self.claim}: PASS with residual {self.residual_max} > {self.tolerance}")

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        out = {
            "claim": self.claim,
            "statement": self.statement,
            "grid": self.grid,
            "residual_max": _json_float(self.residual_max),
            "residual_l2": _json_float(self.residual_l2),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }
        if self.order is not None:
            out["order"] = _json_float(self.order)
        if self.reason:
            out["reason"] = self.reason
        if self.details:
            out["details"] = _jsonable(self.details)
        return out


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    return obj


def norms(residuals) -> tuple[float, float]:
    """Max-norm and root-mean-square of a residual sample."""
    r = np.abs(np.asarray(residuals, dtype=float))
    if r.size == 0:
        return math.nan, math.nan
    return float(r.max()), float(np.sqrt(np.mean(r**2)))


def judge(claim, statement, residuals, tolerance, mode="assert", grid=None, **kw) -> ClaimVerdict:
    """Verdict from a residual sample: PASS/FAIL when asserted, REPORT_ONLY otherwise."""
    rmax, rl2 = norms(residuals)
    if mode == "report":
        verdict = REPORT_ONLY
    else:
        verdict = PASS if rmax <= tolerance else FAIL
    return ClaimVerdict(claim, statement, verdict, rmax, rl2, tolerance, grid, **kw)


def failed(claim, statement, reason, tolerance=None) -> ClaimVerdict:
    return ClaimVerdict(claim, statement, FAIL, tolerance=tolerance, reason=reason)
