#!/usr/bin/env python3
"""
errors.py

Exception hierarchy shared by every vorwave module. Each error knows the process
exit code the CLI should return and can serialize itself into the machine-readable
error JSON written next to the run artifacts.
"""

from typing import Any, Dict, Optional


class VorwaveError(Exception):
    """Base class for all errors raised by the package."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        for key, value in self.details.items():
            # numpy scalars and similar get stringified rather than breaking json.dumps
            payload[key] = value if isinstance(value, (int, float, str, bool, type(None))) else str(value)
        return payload


# -----------------------------------------------------------------------------
# Usage / input errors (exit 2)
# -----------------------------------------------------------------------------

class UsageError(VorwaveError):
    """Invalid configuration or command-line usage."""

    exit_code = 2


class DomainError(UsageError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


# -----------------------------------------------------------------------------
# Model errors (exit 3): the physics has no answer for the given input
# -----------------------------------------------------------------------------

class ModelError(VorwaveError):
    exit_code = 3


class NoLaminarFlowError(ModelError):
    """No unidirectional laminar background flow exists for the vorticity."""

    def __init__(self, message: str = "no admissible laminar flow", **details: Any):
        super().__init__(message, **details)


class DegeneracyError(ModelError):
    """A quantity the reduction divides by vanishes (phi0(1)=0, M0=0)."""


# -----------------------------------------------------------------------------
# Numeric errors (exit 4): the method failed, the model may still be fine
# -----------------------------------------------------------------------------

class NumericError(VorwaveError):
    exit_code = 4


class QuadratureError(NumericError):
    pass


class LinearSolveError(NumericError):
    pass


class NonConvergenceError(NumericError):
    """Iteration budget exhausted before the residual dropped below tolerance."""

    def __init__(self, message: str, last_residual: float, iterations: int, **details: Any):
        super().__init__(message, last_residual=float(last_residual), iterations=iterations, **details)
        self.last_residual = float(last_residual)
        self.iterations = iterations


class AdmissibilityError(NumericError):
    """Iterate left the admissible set (sigma <= 0) and step halving could not recover."""


class ConformalityError(NumericError):
    """|grad eta| degenerates, the conformal map is no longer a diffeomorphism."""


class ContinuationStallError(NumericError):
    """Corrector failed with the step already at its minimum."""

    def __init__(self, message: str, branch: Optional[Any] = None, **details: Any):
        super().__init__(message, **details)
        self.branch = branch
