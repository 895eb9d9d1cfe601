"""Explicit finite-difference simulation of radial curvature flows on the sphere."""

from .errors import AdmissibilityError, ConeViolation, DomainError
from .flow import FlowConfig, FlowReport, FlowState, check_initial, evolve, stable_dt, velocity
from .grid import SphereGrid, build_grid
from .prescribed import PrescribedSpec, admissibility
from .shape import ShapeState, shape_state
from .symfunc import CurvatureSpec, InvSigmaK, PowerScaled, SigmaK, check_structure, eval_F

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConeViolation",
    "CurvatureSpec",
    "DomainError",
    "FlowConfig",
    "FlowReport",
    "FlowState",
    "InvSigmaK",
    "PowerScaled",
    "PrescribedSpec",
    "ShapeState",
    "SigmaK",
    "SphereGrid",
    "admissibility",
    "build_grid",
    "check_initial",
    "check_structure",
    "eval_F",
    "evolve",
    "shape_state",
    "stable_dt",
    "velocity",
]
