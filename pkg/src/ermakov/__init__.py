"""Numerical audits of Ermakov systems, their reduction and symmetries."""

__version__ = "0.1.0"

from .expr import differentiate, evaluate, parse  # noqa: E402
from .systems import CartesianState, ErmakovSystem, PolarState  # noqa: E402
from .dynamics import Trajectory, integrate, rk4  # noqa: E402
from .reduction import FrequencyProfile, MomentumLaw, momentum_law, pushforward  # noqa: E402
from .pinney import Phase, PinneySolution, fundamental_pair, phase, pinney_sigma  # noqa: E402
from .symmetry import VectorField, back_transformed_generators, point_generators  # noqa: E402
from .verdicts import FAIL, PASS, REPORT_ONLY, ClaimVerdict  # noqa: E402

__all__ = [
    "__version__",
    "parse",
    "evaluate",
    "differentiate",
    "ErmakovSystem",
    "CartesianState",
    "PolarState",
    "Trajectory",
    "integrate",
    "rk4",
    "MomentumLaw",
    "momentum_law",
    "FrequencyProfile",
    "pushforward",
    "PinneySolution",
    "pinney_sigma",
    "fundamental_pair",
    "Phase",
    "phase",
    "VectorField",
    "point_generators",
    "back_transformed_generators",
    "ClaimVerdict",
    "PASS",
    "FAIL",
    "REPORT_ONLY",
]
