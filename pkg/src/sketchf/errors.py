"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SketchFError(Exception):
    """Base class for all package errors."""


class DomainError(SketchFError, ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(SketchFError, ArithmeticError):
    """An iterative routine failed to converge or to bracket a root."""


class ConfigError(SketchFError, ValueError):
    """Invalid model, distribution, or experiment configuration."""


class DegenerateInput(SketchFError, ValueError):
    """Input is degenerate for the requested quantity (e.g. zero signal)."""


class DimensionMismatch(SketchFError, ValueError):
    """Array shapes do not agree."""


class DimensionError(SketchFError, ValueError):
    """Problem dimensions make the test inapplicable (e.g. n <= p)."""


class SingularDesign(SketchFError, ArithmeticError):
    """Design matrix is numerically rank deficient."""


class SingularSketch(SingularDesign):
    """Sketched Gram matrix is numerically singular."""


class InfeasibleConstraint(SketchFError, ArithmeticError):
    """A linear constraint system has no solution."""
