#!/usr/bin/env python3
"""
cm_reduction.py

Small-amplitude theory near the critical gravity parameter: the coefficients of the reduced
ODE  q'' = eps f101 q + 1/2 f200 q^2  (plus higher order), the two correction problems that
fix B1 and B2 by solvability, the elevation/depression classification, and the sech^2 seed
that initializes Newton.

f101 and f200 are derivatives of the reduced vector field (f200 = d^2/dq^2), so the quadratic
Taylor term carries a factor 1/2. For gamma = 0 this gives the long-wave relation
crest = F^2 - 1 = eps + O(eps^2).

All integrals use the trapezoid weights of the eigen grid. With those weights the Fredholm
compatibility of the discrete correction problems holds exactly, not just to O(h^2).
"""

import logging
from dataclasses import dataclass, replace
from typing import Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from vorwave.errors import DegeneracyError, DomainError, LinearSolveError, ModelError
from vorwave.laminar import LaminarFlow, solve_laminar
from vorwave.strip_solver import Grid, StripSolver, WaveState, interpolate_profile
from vorwave.sturm import EigenSolution, potential, principal_eigen
from vorwave.vorticity import VorticitySpec, evaluate

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

M0_DEGENERACY = 1e-10
EPSILON_WARN_FACTOR = 0.1
EPSILON_CAP_FACTOR = 0.2


@dataclass(frozen=True)
class CMCoefficients:
    y_grid: np.ndarray
    theta: np.ndarray
    c0: float
    m0: float
    b1: float
    b2: float
    f101: float
    f200: float
    wave_type: Literal["elevation", "depression"]
    g_profile: Optional[np.ndarray] = None
    k_profile: Optional[np.ndarray] = None

    def summary(self) -> dict:
        return {
            "c0": self.c0,
            "m0": self.m0,
            "b1": self.b1,
            "b2": self.b2,
            "f101": self.f101,
            "f200": self.f200,
            "wave_type": self.wave_type,
        }


# -----------------------------------------------------------------------------
# Coefficients
# -----------------------------------------------------------------------------

def theta_profile(flow: LaminarFlow, eig: EigenSolution, spec: VorticitySpec) -> np.ndarray:
    """The forcing profile Theta(y) of the second-order correction problem."""
    y = eig.y_grid
    psi, psi_y = flow.evaluate(y)
    p = flow.psi_y_top
    phi, phi1 = eig.phi0, eig.phi0[-1]
    g0, g1, g2 = (evaluate(spec, psi, order=k) for k in (0, 1, 2))
    return (
        -g2 * (phi + psi_y / p**2 * phi1 * y) ** 2
        - 2.0 * g1 * (phi1 * phi * y / p + psi_y / p**3 * phi1**2 * y**2)
        - 2.0 * g0 * phi1**2 / p**2
    )


def compute_coefficients(flow: LaminarFlow, eig: EigenSolution, spec: VorticitySpec) -> CMCoefficients:
    """
    Reduced-ODE coefficients at the critical point.

    Args:
        flow (LaminarFlow): Background flow (unit depth).
        eig (EigenSolution): Principal eigenpair at alpha_tilde_cr (nu0 ~ 0, phi0(1) = 1).
        spec (VorticitySpec): Vorticity function.

    Returns:
        CMCoefficients: Including the correction profiles g and k.

    Raises:
        DomainError: The eigenpair is not critical or not surface-normalized.
        DegeneracyError: |M0| < 1e-10, the reduction does not decide the wave type.
    """
    if flow.depth != 1.0:
        raise DomainError("center-manifold coefficients are defined for the unit-depth background flow")
    if abs(eig.nu0) > 1e-6:
        raise DomainError(f"eigenpair is not critical: nu0 = {eig.nu0:.3e}")
    if abs(eig.phi0[-1] - 1.0) > 1e-12:
        raise DomainError("phi0 must be normalized to phi0(1) = 1")

    p = flow.psi_y_top
    phi1 = eig.phi0[-1]
    slope_top = eig.alpha_tilde * phi1
    theta = theta_profile(flow, eig, spec)
    c0 = -((slope_top - phi1 + flow.gamma_top / p) ** 2) + (p**2 - 4.0 * flow.alpha_cr) * phi1**2 / p**2
    m0 = c0 * phi1 / p - eig.inner(theta, eig.phi0)
    if abs(m0) < M0_DEGENERACY:
        raise DegeneracyError("quadratic coefficient vanishes; reduction inconclusive", m0=m0)

    b1 = phi1**2 / (p**2 * eig.norm_l2_sq)
    b2 = -m0 / eig.norm_l2_sq
    cm = CMCoefficients(
        y_grid=eig.y_grid,
        theta=theta,
        c0=float(c0),
        m0=float(m0),
        b1=float(b1),
        b2=float(b2),
        f101=float(b1 * phi1),
        f200=float(b2 * phi1),
        wave_type="elevation" if m0 < 0 else "depression",
    )
    g_profile, k_profile = solve_corrections(flow, eig, spec, cm)
    logger.info(f"Reduction coefficients: C0={cm.c0:.8g}, M0={cm.m0:.8g}, f101={cm.f101:.8g}, f200={cm.f200:.8g} ({cm.wave_type})")
    return replace(cm, g_profile=g_profile, k_profile=k_profile)


# -----------------------------------------------------------------------------
# Correction problems
# -----------------------------------------------------------------------------

def _robin_problem(
    eig: EigenSolution, q: np.ndarray, forcing: np.ndarray, robin_datum: float
) -> np.ndarray:
    """
    Solve -u'' - q u - nu0 u = forcing, u(0) = 0, u'(1) - alpha_tilde u(1) = robin_datum
    with the gauge int u phi0 = 0, via a bordered sparse system.
    """
    y = eig.y_grid
    h = y[1] - y[0]
    size = y.size - 1
    ones = np.ones(size - 1)
    diagonal = 2.0 / h**2 - q[1:] - eig.nu0
    diagonal[-1] = (2.0 - 2.0 * h * eig.alpha_tilde) / h**2 - q[-1] - eig.nu0
    lower = -ones / h**2
    lower[-1] = -2.0 / h**2
    operator = sp.diags([lower, diagonal, -ones / h**2], [-1, 0, 1], format="csr")

    gauge = (eig.weights * eig.phi0)[1:]
    bordered = sp.bmat(
        [[operator, sp.csr_matrix(gauge[:, None])], [sp.csr_matrix(gauge[None, :]), None]], format="csc"
    )
    rhs = np.concatenate([forcing[1:], [0.0]])
    rhs[size - 1] += 2.0 * robin_datum / h
    solution = spsolve(bordered, rhs)
    if not np.all(np.isfinite(solution)):
        raise LinearSolveError("correction problem is singular; refine the eigen grid")
    logger.debug(f"Correction multiplier {solution[-1]:.3e}")
    return np.concatenate([[0.0], solution[:-1]])


def solve_corrections(
    flow: LaminarFlow, eig: EigenSolution, spec: VorticitySpec, cm: CMCoefficients
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Profiles g and k of the first- and second-order correction problems.

        g'' + gamma'(psi) g = -B1 phi0,       g'(1) - alpha_tilde g(1) = -phi0(1)/psi_y(1)^2
        k'' + gamma'(psi) k = Theta - B2 phi0, k'(1) - alpha_tilde k(1) = C0/psi_y(1)

    both with u(0) = 0 and int u phi0 = 0.
    """
    q = potential(flow, spec, eig.y_grid)
    p = flow.psi_y_top
    phi1 = eig.phi0[-1]
    g = _robin_problem(eig, q, cm.b1 * eig.phi0, -phi1 / p**2)
    k = _robin_problem(eig, q, -(cm.theta - cm.b2 * eig.phi0), cm.c0 / p)
    return g, k


def compatibility_integrals(flow: LaminarFlow, eig: EigenSolution, cm: CMCoefficients) -> Tuple[float, float]:
    """Fredholm compatibility of both correction problems; zero when B1, B2 are consistent."""
    p = flow.psi_y_top
    phi1 = eig.phi0[-1]
    g_gap = cm.b1 * eig.norm_l2_sq - phi1**2 / p**2
    k_gap = eig.inner(cm.theta - cm.b2 * eig.phi0, eig.phi0) - phi1 * cm.c0 / p
    return float(g_gap), float(k_gap)


# -----------------------------------------------------------------------------
# Reduced dynamics and the seed
# -----------------------------------------------------------------------------

def reduced_ode(q: np.ndarray, q_x: np.ndarray, epsilon: float, cm: CMCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Truncated reduced vector field (q, q_x) -> (q_x, q_xx)."""
    return q_x, epsilon * cm.f101 * q + 0.5 * cm.f200 * q**2


def homoclinic_amplitude(epsilon: float, cm: CMCoefficients) -> float:
    """q(0) of the homoclinic orbit: -3 eps f101 / f200."""
    return -3.0 * epsilon * cm.f101 / cm.f200


def homoclinic(x: np.ndarray, epsilon: float, cm: CMCoefficients) -> np.ndarray:
    """Homoclinic orbit q(x) of the truncated reduced ODE."""
    return homoclinic_amplitude(epsilon, cm) / np.cosh(0.5 * np.sqrt(epsilon * cm.f101) * x) ** 2


def epsilon_cap(cm: CMCoefficients) -> float:
    return EPSILON_CAP_FACTOR * min(1.0, cm.f101 / abs(cm.f200))


def small_amplitude_seed(
    flow: LaminarFlow,
    eig: EigenSolution,
    cm: CMCoefficients,
    epsilon: float,
    grid: Grid,
    spec: VorticitySpec,
) -> WaveState:
    """
    Leading-order solitary wave at alpha = alpha_cr - epsilon.

    theta = q(x) phi0(y) with the sech^2 homoclinic q, mapped to (phi, w) by the
    good-unknown map so that w = -q phi0(1) / psi_y(1). Under the Dirichlet closure the
    tail value q(L) is subtracted, so the seed vanishes at the lateral boundary.

    Raises:
        DomainError: epsilon outside (0, cap].
    """
    cap = epsilon_cap(cm)
    if not 0.0 < epsilon <= cap:
        raise DomainError(f"epsilon must lie in (0, {cap:.4g}], got {epsilon}")
    if epsilon > EPSILON_WARN_FACTOR * min(1.0, cm.f101 / abs(cm.f200)):
        logger.warning(f"epsilon={epsilon} is beyond the comfortable small-amplitude range")

    solver = StripSolver(grid, spec, flow)
    phi0 = interpolate_profile(eig.y_grid, eig.phi0, grid.y)
    q = homoclinic(grid.x, epsilon, cm)
    tail = float(q[-1])
    if abs(tail) > 1e-4 * abs(q[grid.crest_index]):
        ratio = abs(tail / q[grid.crest_index])
        logger.warning(f"Seed has not decayed at x=L: |q(L)|/|q(0)|={ratio:.3e}; consider a longer strip")
    if grid.far_field == "dirichlet":
        q = q - tail
    theta = q[:, None] * phi0[None, :]
    phi, w = solver.t_map(theta)
    state = WaveState(grid=grid, phi=phi, w=w, alpha=flow.alpha_cr - epsilon)
    logger.info(f"Seed at epsilon={epsilon}: alpha={state.alpha:.8g}, crest={state.crest:.6g}")
    return state


# -----------------------------------------------------------------------------
# Depression search
# -----------------------------------------------------------------------------

def scan_m0(
    coefficient_sets: Iterable[Sequence[float]], laminar_ny: int = 513, eigen_ny: int = 1025
) -> List[dict]:
    """
    Evaluate M0 over a family of polynomial vorticities.

    Vorticities without an admissible laminar flow or with a degenerate reduction are
    reported with ``m0 = None`` and the reason. Entries with m0 > 0 are depression candidates.
    """
    results = []
    for coefficients in coefficient_sets:
        spec = VorticitySpec(kind="polynomial", coefficients=tuple(coefficients))
        entry = {"coefficients": list(coefficients), "m0": None, "wave_type": None, "reason": None}
        try:
            flow = solve_laminar(spec, ny=laminar_ny)
            eig = principal_eigen(flow, spec, flow.alpha_tilde_cr, ny=eigen_ny)
            cm = compute_coefficients(flow, eig, spec)
            entry.update(m0=cm.m0, wave_type=cm.wave_type)
        except (ModelError, DomainError) as exc:
            entry["reason"] = exc.message
        results.append(entry)
        logger.info(f"scan {spec.describe()}: {entry['m0'] if entry['m0'] is not None else entry['reason']}")
    return results
