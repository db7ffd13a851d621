#!/usr/bin/env python3
"""
laminar.py

Laminar (x-independent, flat-surface) background flows:

    psi'' = -gamma(psi)   on (0, 1),   psi(0) = 0,   psi(1) = 1,

solved by shooting on the bed shear psi'(0). The resulting profile provides the Bernoulli
constant mu = psi'(1)^2 and the critical gravity parameter alpha_cr at which solitary waves
bifurcate from the laminar family.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from vorwave.errors import DomainError, ModelError, NoLaminarFlowError, NonConvergenceError
from vorwave.vorticity import VorticitySpec, evaluate

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

SLOPE_BRACKET = (1e-6, 50.0)
MIN_PSI_Y = 1e-8
_SCAN_POINTS = 64


@dataclass(frozen=True)
class LaminarFlow:
    """Sampled laminar profile and the scalars derived from it."""

    y_grid: np.ndarray
    psi: np.ndarray
    psi_y: np.ndarray
    psi_yy: np.ndarray
    mu: float
    alpha_cr: float
    alpha_tilde_cr: float
    min_psi_y: float
    gamma_top: float
    depth: float = 1.0

    @property
    def psi_y_top(self) -> float:
        return float(self.psi_y[-1])

    @cached_property
    def _psi_spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.y_grid, self.psi, self.psi_y)

    @cached_property
    def _psi_y_spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.y_grid, self.psi_y, self.psi_yy)

    def evaluate(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return (psi, psi_y) at arbitrary heights in [0, 1] (4th-order Hermite interpolation)."""
        y = np.asarray(y, dtype=float)
        if np.any(y < -1e-12) or np.any(y > 1.0 + 1e-12):
            raise DomainError("laminar profile is only defined on 0 <= y <= 1")
        return self._psi_spline(y), self._psi_y_spline(y)

    def summary(self) -> dict:
        f_cr = froude(self, self.alpha_cr)[0]
        return {
            "mu": self.mu,
            "alpha_cr": self.alpha_cr,
            "alpha_tilde_cr": self.alpha_tilde_cr,
            "F_cr": f_cr,
            "psi_y_bed": float(self.psi_y[0]),
            "psi_y_top": self.psi_y_top,
            "min_psi_y": self.min_psi_y,
            "depth": self.depth,
        }


# -----------------------------------------------------------------------------
# Shooting
# -----------------------------------------------------------------------------

def _rhs(spec: VorticitySpec, depth_sq: float):
    def rhs(_y, state):
        return [state[1], -depth_sq * evaluate(spec, state[0])]

    return rhs


def _integrate(spec: VorticitySpec, slope: float, depth_sq: float, t_eval: Optional[np.ndarray] = None):
    return integrate.solve_ivp(
        _rhs(spec, depth_sq),
        (0.0, 1.0),
        [0.0, slope],
        method="DOP853",
        t_eval=t_eval,
        rtol=1e-12,
        atol=1e-13,
    )


def _shooting_miss(spec: VorticitySpec, slope: float, depth_sq: float) -> float:
    """psi(1) - 1 for the initial slope, nan when the trajectory cannot be integrated."""
    try:
        sol = _integrate(spec, slope, depth_sq)
    except (DomainError, FloatingPointError, OverflowError):
        return np.nan
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        return np.nan
    return float(sol.y[0, -1] - 1.0)


def solve_laminar(spec: VorticitySpec, ny: int = 1025, tol: float = 1e-10, depth: float = 1.0) -> LaminarFlow:
    """
    Solve the laminar boundary value problem by shooting on psi'(0).

    The bracket ``SLOPE_BRACKET`` is scanned on a geometric grid; each sign change of the
    shooting miss is refined with Brent's method and the first root whose profile keeps
    psi' > MIN_PSI_Y (unidirectional flow) is taken.

    Args:
        spec (VorticitySpec): Vorticity function.
        ny (int): Number of output nodes on [0, 1]; odd counts keep Simpson's rule exact-order.
        tol (float): Accepted |psi(1) - 1|.
        depth (float): Layer depth d; the equation becomes psi'' = -d^2 gamma(psi).

    Returns:
        LaminarFlow: The background flow with mu, alpha_cr and alpha_tilde_cr filled in.

    Raises:
        NoLaminarFlowError: No admissible (unidirectional) solution in the bracket.
        NonConvergenceError: The refined root misses psi(1)=1 by more than ``tol``.
    """
    if ny < 33:
        raise DomainError(f"laminar grid needs at least 33 nodes, got {ny}")
    if tol <= 0:
        raise DomainError("laminar tolerance must be positive")
    if depth <= 0:
        raise DomainError("depth must be positive")

    depth_sq = depth * depth
    slopes = np.geomspace(*SLOPE_BRACKET, _SCAN_POINTS)
    misses = np.array([_shooting_miss(spec, s, depth_sq) for s in slopes])
    logger.debug(f"Shooting scan misses: {misses}")

    y_grid = np.linspace(0.0, 1.0, ny)
    rejected = []
    for left in range(len(slopes) - 1):
        m_left, m_right = misses[left], misses[left + 1]
        if not (np.isfinite(m_left) and np.isfinite(m_right)):
            continue
        if m_left == 0.0:
            slope = slopes[left]
        elif m_left * m_right > 0:
            continue
        else:
            slope = optimize.brentq(
                lambda s: _shooting_miss(spec, s, depth_sq),
                slopes[left],
                slopes[left + 1],
                xtol=1e-15,
                rtol=4 * np.finfo(float).eps,
            )
        sol = _integrate(spec, slope, depth_sq, t_eval=y_grid)
        psi, psi_y = sol.y[0], sol.y[1]
        if np.min(psi_y) <= MIN_PSI_Y:
            rejected.append(slope)
            logger.info(f"Rejecting laminar root psi_y(0)={slope:.6g}: flow is not unidirectional")
            continue
        if abs(psi[-1] - 1.0) > tol:
            raise NonConvergenceError(
                "laminar shooting did not meet the top boundary condition",
                last_residual=abs(psi[-1] - 1.0),
                iterations=0,
            )
        flow = _assemble(spec, y_grid, psi, psi_y, depth)
        logger.info(
            f"Laminar flow for {spec.describe()}: psi_y(0)={psi_y[0]:.10g}, mu={flow.mu:.10g}, "
            f"alpha_cr={flow.alpha_cr:.10g}"
        )
        return flow

    raise NoLaminarFlowError(vorticity=spec.describe(), rejected_roots=len(rejected))


def _assemble(spec: VorticitySpec, y_grid, psi, psi_y, depth: float) -> LaminarFlow:
    psi_yy = -(depth * depth) * evaluate(spec, psi)
    gamma_top = (depth * depth) * evaluate(spec, 1.0)
    partial = LaminarFlow(
        y_grid=y_grid,
        psi=psi,
        psi_y=psi_y,
        psi_yy=psi_yy,
        mu=float(psi_y[-1] ** 2),
        alpha_cr=np.nan,
        alpha_tilde_cr=np.nan,
        min_psi_y=float(np.min(psi_y)),
        gamma_top=float(gamma_top),
        depth=depth,
    )
    alpha_cr, alpha_tilde_cr = critical_alpha(partial)
    return LaminarFlow(
        y_grid=y_grid,
        psi=psi,
        psi_y=psi_y,
        psi_yy=psi_yy,
        mu=partial.mu,
        alpha_cr=alpha_cr,
        alpha_tilde_cr=alpha_tilde_cr,
        min_psi_y=partial.min_psi_y,
        gamma_top=partial.gamma_top,
        depth=depth,
    )


# -----------------------------------------------------------------------------
# Critical values and Froude number
# -----------------------------------------------------------------------------

def critical_alpha(flow: LaminarFlow) -> Tuple[float, float]:
    """
    Critical gravity parameter and the matching Robin coefficient.

        alpha_cr       = 1 / int_0^1 dy / psi_y^2
        alpha_tilde_cr = -gamma(1)/psi_y(1) + alpha_cr / psi_y(1)^2

    The integral uses composite Simpson on the laminar output grid.

    Raises:
        ModelError: psi_y too small for the integral to be meaningful.
    """
    if flow.min_psi_y <= MIN_PSI_Y:
        raise ModelError("critical value undefined: laminar flow is not unidirectional", min_psi_y=flow.min_psi_y)
    inverse_sq = integrate.simpson(1.0 / flow.psi_y**2, x=flow.y_grid)
    alpha_cr = 1.0 / inverse_sq
    top = flow.psi_y_top
    alpha_tilde_cr = -flow.gamma_top / top + alpha_cr / top**2
    return float(alpha_cr), float(alpha_tilde_cr)


def froude(flow: LaminarFlow, alpha: float) -> Tuple[float, float]:
    """Return (F, F_cr) from mu = F^2 alpha."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return float(np.sqrt(flow.mu / alpha)), float(np.sqrt(flow.mu / flow.alpha_cr))


def profile_table(flow: LaminarFlow) -> np.ndarray:
    """Columns (y, psi, psi_y) for CSV output."""
    return np.column_stack([flow.y_grid, flow.psi, flow.psi_y])
