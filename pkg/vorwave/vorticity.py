#!/usr/bin/env python3
"""
vorticity.py

The vorticity function gamma(s) relating vorticity to the stream function, together with
its first two derivatives and the antiderivative G(s) = int_0^s gamma(t) dt.

Supported kinds:
  - constant(value)             gamma(s) = value
  - affine(slope)               gamma(s) = slope * s
  - polynomial(coefficients)    gamma(s) = sum c_k s^k  (increasing powers)
  - tabulated(samples)          clamped cubic spline through (s, gamma(s)) pairs, end slopes
                                from the cubic through the four outermost samples

Note the sign convention: constant(value=-c) is the constant-vorticity flow whose laminar
profile is psi = c/2 y^2 + (1 - c/2) y.
"""

import json
import logging
import warnings
from typing import Literal, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator
from scipy import integrate
from scipy.interpolate import CubicSpline

from vorwave.errors import DomainError, QuadratureError, UsageError

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

REQUIRED_PARAMETER = {"constant": "value", "affine": "slope", "polynomial": "coefficients", "tabulated": "samples"}

# -----------------------------------------------------------------------------
# Pydantic model
# -----------------------------------------------------------------------------

class VorticitySpec(BaseModel):
    """Immutable description of gamma(s); evaluation helpers are built once on construction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant", "affine", "polynomial", "tabulated"]
    value: Optional[float] = None
    slope: Optional[float] = None
    coefficients: Optional[Tuple[float, ...]] = None
    samples: Optional[Tuple[Tuple[float, float], ...]] = None
    margin: float = 0.5

    _poly: Optional[Polynomial] = PrivateAttr(default=None)
    _spline: Optional[CubicSpline] = PrivateAttr(default=None)

    @field_validator("coefficients", mode="before")
    @classmethod
    def coefficients_to_tuple(cls, value):
        if isinstance(value, str):
            value = [float(part) for part in value.split(",") if part.strip()]
        if value is not None:
            return tuple(value)
        return value

    @field_validator("samples", mode="before")
    @classmethod
    def samples_to_tuple(cls, value):
        if value is not None:
            return tuple(tuple(pair) for pair in value)
        return value

    @field_validator("margin")
    @classmethod
    def margin_non_negative(cls, value):
        if value < 0:
            raise ValueError("margin must be non-negative")
        return value

    @model_validator(mode="after")
    def check_parameters(self):
        problem = self._parameter_problem()
        if problem is not None:
            raise ValueError(problem)
        return self

    def _parameter_problem(self) -> Optional[str]:
        field = REQUIRED_PARAMETER[self.kind]
        if getattr(self, field) is None:
            return f"vorticity kind '{self.kind}' requires the '{field}' parameter"
        if self.kind == "polynomial" and len(self.coefficients) == 0:
            return "polynomial vorticity needs at least one coefficient"
        if self.kind == "tabulated":
            abscissae = np.array([pair[0] for pair in self.samples], dtype=float)
            if abscissae.size < 4:
                return "tabulated vorticity needs at least 4 samples"
            if np.any(np.diff(abscissae) <= 0):
                return "tabulated vorticity abscissae must be strictly increasing"
            if abscissae[0] > 0.0 or abscissae[-1] < 1.0:
                return "tabulated vorticity must cover the stream-function range [0, 1]"
        return None

    def model_post_init(self, __context) -> None:
        # runs ahead of check_parameters: leave incomplete input for the validator to reject
        if self._parameter_problem() is not None:
            return
        if self.kind == "tabulated":
            table = np.array(self.samples, dtype=float)
            # clamped at slopes of the cubic through the four samples nearest each end
            left = Polynomial.fit(table[:4, 0], table[:4, 1], 3).deriv()(table[0, 0])
            right = Polynomial.fit(table[-4:, 0], table[-4:, 1], 3).deriv()(table[-1, 0])
            self._spline = CubicSpline(table[:, 0], table[:, 1], bc_type=((1, left), (1, right)))
            logger.warning(
                "Tabulated vorticity is only piecewise smooth; results beyond the local "
                "small-amplitude theory assume analyticity"
            )
        else:
            self._poly = Polynomial(self._coefficients())

    def _coefficients(self) -> Tuple[float, ...]:
        if self.kind == "constant":
            return (float(self.value),)
        if self.kind == "affine":
            return (0.0, float(self.slope))
        return tuple(float(c) for c in self.coefficients)

    # -------------------------------------------------------------------------

    def describe(self) -> str:
        """Short label used in logs and file headers."""
        if self.kind == "constant":
            return f"constant:{self.value:g}"
        if self.kind == "affine":
            return f"affine:{self.slope:g}"
        if self.kind == "polynomial":
            return "polynomial:" + ",".join(f"{c:g}" for c in self.coefficients)
        return f"tabulated[{len(self.samples)}]"

    @property
    def evaluable_range(self) -> Tuple[float, float]:
        """Tabulated kinds extrapolate the end cubics by ``margin`` beyond the samples."""
        if self.kind == "tabulated":
            return float(self.samples[0][0]) - self.margin, float(self.samples[-1][0]) + self.margin
        return -np.inf, np.inf

    def _check_range(self, s: np.ndarray) -> None:
        low, high = self.evaluable_range
        if np.any(s < low) or np.any(s > high):
            raise DomainError(
                f"vorticity argument outside tabulated range [{low}, {high}]",
                s_min=float(np.min(s)),
                s_max=float(np.max(s)),
            )


# -----------------------------------------------------------------------------
# Evaluation
# -----------------------------------------------------------------------------

def evaluate(spec: VorticitySpec, s: ArrayLike, order: int = 0) -> ArrayLike:
    """
    Evaluate gamma or one of its first two derivatives.

    Args:
        spec (VorticitySpec): The vorticity function.
        s (float | ndarray): Stream-function value(s).
        order (int): 0 for gamma, 1 for gamma', 2 for gamma''.

    Returns:
        float | ndarray: Same shape as ``s``.

    Raises:
        DomainError: For an unsupported order or ``s`` outside a tabulated range.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"derivative order must be 0, 1 or 2, got {order}")
    values = np.asarray(s, dtype=float)
    if spec.kind == "tabulated":
        spec._check_range(values)
        result = spec._spline(values, order)
    else:
        poly = spec._poly if order == 0 else spec._poly.deriv(order)
        result = poly(values)
    if np.ndim(s) == 0:
        return float(result)
    return np.asarray(result, dtype=float)


def evaluate_G(spec: VorticitySpec, s: ArrayLike) -> ArrayLike:
    """
    Antiderivative G(s) = int_0^s gamma(t) dt with G(0) = 0.

    Closed form for polynomial kinds; adaptive quadrature (abs tol 1e-12) of the spline
    for tabulated vorticity.

    Raises:
        QuadratureError: If the adaptive quadrature reports non-convergence.
    """
    values = np.asarray(s, dtype=float)
    if spec.kind != "tabulated":
        result = spec._poly.integ(lbnd=0.0)(values)
        return float(result) if np.ndim(s) == 0 else np.asarray(result, dtype=float)

    spec._check_range(values)
    if spec.evaluable_range[0] > 0.0 or spec.evaluable_range[1] < 0.0:
        raise DomainError("tabulated vorticity must cover s = 0 to define G")
    flat = np.atleast_1d(values).ravel()
    out = np.empty_like(flat)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for index, upper in enumerate(flat):
            try:
                out[index], _ = integrate.quad(spec._spline, 0.0, upper, epsabs=1e-12, epsrel=1e-12, limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"quadrature of tabulated vorticity failed at s={upper}: {exc}") from exc
    if np.ndim(s) == 0:
        return float(out[0])
    return out.reshape(values.shape)


# -----------------------------------------------------------------------------
# Parsing helpers for config files and the CLI
# -----------------------------------------------------------------------------

def parse_vorticity(text: Union[str, dict, VorticitySpec]) -> VorticitySpec:
    """
    Build a VorticitySpec from CLI shorthand (``constant:-1``, ``affine:1``,
    ``polynomial:0,0,3``), a JSON object string, or a plain dictionary.

    Raises:
        UsageError: If the text cannot be interpreted.
    """
    if isinstance(text, VorticitySpec):
        return text
    if isinstance(text, dict):
        return VorticitySpec.model_validate(text)
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            return VorticitySpec.model_validate(json.loads(stripped))
        except json.JSONDecodeError as exc:
            raise UsageError(f"vorticity JSON could not be parsed: {exc}") from exc
    kind, _, argument = stripped.partition(":")
    kind = kind.strip().lower()
    if not argument:
        raise UsageError(f"vorticity shorthand '{text}' needs a parameter, e.g. constant:-1")
    try:
        if kind == "constant":
            return VorticitySpec(kind="constant", value=float(argument))
        if kind == "affine":
            return VorticitySpec(kind="affine", slope=float(argument))
        if kind == "polynomial":
            return VorticitySpec(kind="polynomial", coefficients=argument)
    except ValueError as exc:
        raise UsageError(f"invalid vorticity parameter in '{text}': {exc}") from exc
    raise UsageError(f"unknown vorticity kind '{kind}'")
