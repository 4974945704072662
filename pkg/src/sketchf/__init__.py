"""Sketched F-test for the global null in high-dimensional linear regression."""

from __future__ import annotations

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInput,
    DimensionError,
    DimensionMismatch,
    DomainError,
    InfeasibleConstraint,
    SingularDesign,
    SingularSketch,
    SketchFError,
)
from .ftest import TestReport, classical_f, least_squares, projected_f, sketched_f
from .intrinsic import IntrinsicDimReport, intrinsic_conditions, min_intrinsic_dim, recommend_k
from .models import (
    CovFactor,
    EntryDistribution,
    SketchMatrix,
    SpectrumModel,
    build_spectrum,
    draw_coefficients,
    draw_design,
    draw_response,
    draw_sketch,
    random_orthobasis,
    rescale_pair,
)
from .power import are, delta_k_sq, power_classical, power_sketched, power_zc

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateInput",
    "DimensionError",
    "DimensionMismatch",
    "DomainError",
    "InfeasibleConstraint",
    "SingularDesign",
    "SingularSketch",
    "SketchFError",
    "TestReport",
    "classical_f",
    "least_squares",
    "projected_f",
    "sketched_f",
    "IntrinsicDimReport",
    "intrinsic_conditions",
    "min_intrinsic_dim",
    "recommend_k",
    "CovFactor",
    "EntryDistribution",
    "SketchMatrix",
    "SpectrumModel",
    "build_spectrum",
    "draw_coefficients",
    "draw_design",
    "draw_response",
    "draw_sketch",
    "random_orthobasis",
    "rescale_pair",
    "are",
    "delta_k_sq",
    "power_classical",
    "power_sketched",
    "power_zc",
]
