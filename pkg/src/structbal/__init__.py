"""Gradient-flow models of structural balance on signed appraisal networks."""

__version__ = "0.1.0"

from ._kernel import BACKEND
from .core import (
    AppraisalMatrix,
    EtaZState,
    SignPattern,
    SphereAppraisal,
    frobenius_inner,
    normalize_to_sphere,
    sign_pattern,
    tangent_project,
)
from .dissonance import balance_threshold, dissonance, dissonance_asym, grad_ambient, grad_sphere
from .dynamics import IntegratorOptions, ModelKind, Trajectory, integrate, rhs

__all__ = [
    "BACKEND",
    "AppraisalMatrix",
    "EtaZState",
    "IntegratorOptions",
    "ModelKind",
    "SignPattern",
    "SphereAppraisal",
    "Trajectory",
    "balance_threshold",
    "dissonance",
    "dissonance_asym",
    "frobenius_inner",
    "grad_ambient",
    "grad_sphere",
    "integrate",
    "normalize_to_sphere",
    "rhs",
    "sign_pattern",
    "tangent_project",
]
