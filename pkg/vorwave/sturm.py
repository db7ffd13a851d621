#!/usr/bin/env python3
"""
sturm.py

Principal eigenpair of the self-adjoint Sturm-Liouville problem

    -v'' - gamma'(psi_triv) v = nu v   on (0, 1),   v(0) = 0,   v'(1) = alpha_tilde v(1),

discretized with second-order differences and a ghost-node Robin closure. The ghost-node
matrix is symmetrized by a diagonal similarity (last unknown scaled by 1/sqrt(2)) so the
spectrum comes from a symmetric tridiagonal eigensolver. The discrete energy with
forward differences and trapezoid weights is exactly the Rayleigh quotient of that matrix.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import integrate, linalg
from scipy.interpolate import CubicHermiteSpline

from vorwave.errors import DegeneracyError, DomainError, ModelError, NumericError
from vorwave.laminar import MIN_PSI_Y, LaminarFlow
from vorwave.vorticity import VorticitySpec, evaluate

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

DEFAULT_EIGEN_NY = 2049


@dataclass(frozen=True)
class EigenSolution:
    nu0: float
    phi0: np.ndarray
    y_grid: np.ndarray
    alpha_tilde: float
    norm_l2_sq: float
    weights: np.ndarray

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Discrete L2 inner product matching the eigen discretization."""
        return float(np.dot(self.weights, f * g))


def uniform_grid(ny: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, ny)


def trapezoid_weights(y: np.ndarray) -> np.ndarray:
    h = y[1] - y[0]
    weights = np.full(y.size, h)
    weights[0] = weights[-1] = 0.5 * h
    return weights


def potential(flow: LaminarFlow, spec: VorticitySpec, y: np.ndarray) -> np.ndarray:
    """gamma'(psi_triv(y)), scaled by depth^2 for non-unit layers."""
    psi, _ = flow.evaluate(y)
    return flow.depth**2 * evaluate(spec, psi, order=1)


def _tridiagonal(q: np.ndarray, h: float, alpha_tilde: float):
    """Symmetrized ghost-node operator on the unknowns v_1..v_N (v_0 = 0 eliminated)."""
    diagonal = 2.0 / h**2 - q[1:]
    diagonal[-1] = (2.0 - 2.0 * h * alpha_tilde) / h**2 - q[-1]
    off = np.full(diagonal.size - 1, -1.0 / h**2)
    off[-1] = -np.sqrt(2.0) / h**2
    return diagonal, off


def principal_eigen(
    flow: LaminarFlow, spec: VorticitySpec, alpha_tilde: float, ny: int = DEFAULT_EIGEN_NY
) -> EigenSolution:
    """
    Smallest eigenvalue and its eigenfunction normalized to phi0(1) = 1.

    Args:
        flow (LaminarFlow): Background flow providing psi_triv.
        spec (VorticitySpec): Vorticity (its derivative is the potential).
        alpha_tilde (float): Robin coefficient at y = 1.
        ny (int): Number of grid nodes including both ends.

    Returns:
        EigenSolution

    Raises:
        DomainError: ny < 65.
        NumericError: The tridiagonal eigensolver failed.
        DegeneracyError: phi0(1) vanishes, so the surface normalization is impossible.
    """
    if ny < 65:
        raise DomainError(f"eigen grid needs at least 65 nodes, got {ny}")
    y = uniform_grid(ny)
    h = y[1] - y[0]
    q = potential(flow, spec, y)
    diagonal, off = _tridiagonal(q, h, alpha_tilde)
    try:
        values, vectors = linalg.eigh_tridiagonal(diagonal, off, select="i", select_range=(0, 0))
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"principal eigenvalue computation failed: {exc}") from exc

    u = vectors[:, 0]
    v = np.concatenate([[0.0], u])
    v[-1] *= np.sqrt(2.0)
    if abs(v[-1]) <= 1e-10 * np.max(np.abs(v)):
        raise DegeneracyError("principal eigenfunction vanishes at the surface; cannot normalize phi0(1)=1")
    phi0 = v / v[-1]

    weights = trapezoid_weights(y)
    solution = EigenSolution(
        nu0=float(values[0]),
        phi0=phi0,
        y_grid=y,
        alpha_tilde=float(alpha_tilde),
        norm_l2_sq=float(np.dot(weights, phi0**2)),
        weights=weights,
    )
    logger.debug(f"nu0({alpha_tilde:.8g}) = {solution.nu0:.3e} on {ny} nodes")
    return solution


def eigen_sweep(
    flow: LaminarFlow, spec: VorticitySpec, alpha_tildes: Iterable[float], ny: int = DEFAULT_EIGEN_NY
) -> np.ndarray:
    """Principal eigenvalue for each Robin coefficient in ``alpha_tildes``."""
    return np.array([principal_eigen(flow, spec, a, ny).nu0 for a in alpha_tildes])


# -----------------------------------------------------------------------------
# Closed-form zero mode and the variational characterization
# -----------------------------------------------------------------------------

def liouville_zero_mode(flow: LaminarFlow, y: Optional[np.ndarray] = None) -> np.ndarray:
    """
    The nu = 0 mode at alpha_tilde_cr, v(y) = psi_y(y) int_0^y dt / psi_y(t)^2, scaled to v(1) = 1.

    Evaluated on the laminar grid unless ``y`` is given, in which case the cumulative integral
    is interpolated with its exact derivative (cubic Hermite).
    """
    if flow.min_psi_y <= MIN_PSI_Y:
        raise ModelError("zero mode undefined: laminar flow is not unidirectional")
    integrand = 1.0 / flow.psi_y**2
    cumulative = integrate.cumulative_simpson(integrand, x=flow.y_grid, initial=0.0)
    if y is None:
        mode = flow.psi_y * cumulative
    else:
        spline = CubicHermiteSpline(flow.y_grid, cumulative, integrand)
        _, psi_y = flow.evaluate(y)
        mode = psi_y * spline(np.asarray(y, dtype=float))
    return mode / mode[-1]


def rayleigh(flow: LaminarFlow, spec: VorticitySpec, alpha_tilde: float, trial: np.ndarray) -> float:
    """
    Rayleigh quotient (int v_y^2 - gamma'(psi) v^2 dy - alpha_tilde v(1)^2) / int v^2 dy.

    ``trial`` holds values on a uniform grid over [0, 1]; forward differences and trapezoid
    weights make this the exact quotient of the discrete eigen operator on that grid.

    Raises:
        DomainError: trial(0) != 0 or trial identically zero.
    """
    v = np.asarray(trial, dtype=float)
    if v.size < 3:
        raise DomainError("trial function needs at least 3 samples")
    scale = np.max(np.abs(v))
    if scale == 0.0:
        raise DomainError("trial function is identically zero")
    if abs(v[0]) > 1e-12 * scale:
        raise DomainError("trial function must vanish at the bed, trial(0) = 0")
    y = uniform_grid(v.size)
    h = y[1] - y[0]
    weights = trapezoid_weights(y)
    q = potential(flow, spec, y)
    energy = np.sum(np.diff(v) ** 2) / h - np.dot(weights, q * v**2) - alpha_tilde * v[-1] ** 2
    return float(energy / np.dot(weights, v**2))
