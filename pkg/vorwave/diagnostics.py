#!/usr/bin/env python3
"""
diagnostics.py

Physical checks on computed strip states:

  - velocity field (u, v) recovered from psi and the conformal map,
  - the flow force S(x), which is independent of x for an exact solution,
  - the Bernoulli identity on the surface and the stagnation margin,
  - the nodal property (monotone surface on each side of the crest),
  - the free surface in the physical plane with overhang detection,
  - conjugate laminar depths and the flow-force gap that excludes bores,
  - conversion back to dimensional quantities.

Derivatives are second-order finite differences (np.gradient, one-sided at the edges).
On symmetric grids the x-derivatives at the crest column are set to zero by the even symmetry.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import integrate, optimize

from vorwave.errors import ConformalityError, DomainError
from vorwave.laminar import LaminarFlow, froude
from vorwave.strip_solver import WaveState, harmonic_extension
from vorwave.vorticity import VorticitySpec, evaluate, evaluate_G

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12
OVERHANG_THRESHOLD = 1e-10
MIN_GRAD_ETA_SQ = 1e-12
CONJUGATE_BRACKET = (1e-6, 10.0)


@dataclass(frozen=True)
class ConformalFields:
    """eta, psi and their first derivatives on the full (nx, ny) grid."""

    eta: np.ndarray
    eta_x: np.ndarray
    eta_y: np.ndarray
    psi: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray

    @property
    def grad_eta_sq(self) -> np.ndarray:
        return self.eta_x**2 + self.eta_y**2


@dataclass(frozen=True)
class NodalResult:
    ok: bool
    trivial: bool
    vertical_velocity_ok: bool
    checked: int
    violation: Optional[Dict[str, float]] = None


@dataclass(frozen=True)
class SurfaceCurve:
    xi: np.ndarray
    eta: np.ndarray
    overhang: bool
    min_slope: float

    def polyline(self) -> np.ndarray:
        return np.column_stack([self.xi, self.eta])


class DiagnosticsReport(BaseModel):
    alpha: float
    crest: float
    flow_force_x: List[float]
    flow_force_profile: List[float]
    flow_force_drift: float
    bernoulli_residual: float
    stagnation_margin: float
    velocity_equation_residual: float
    nodal_ok: bool
    nodal_trivial: bool
    nodal_violation: Optional[Dict[str, float]] = None
    vertical_velocity_ok: bool
    overhang: bool
    overhang_margin: float
    surface_curve: List[Tuple[float, float]]
    health_delta: float
    far_field_leakage: float
    conjugate: Optional[Dict[str, Any]] = None


# -----------------------------------------------------------------------------
# Fields and velocity
# -----------------------------------------------------------------------------

def conformal_fields(state: WaveState, flow: LaminarFlow) -> ConformalFields:
    grid = state.grid
    zeta = harmonic_extension(state.w, grid)
    y = grid.y
    eta = y[None, :] + zeta
    psi_triv, psi_triv_y = flow.evaluate(y)
    psi = psi_triv[None, :] + state.phi

    eta_x = np.gradient(zeta, grid.hx, axis=0, edge_order=2)
    eta_y = 1.0 + np.gradient(zeta, grid.hy, axis=1, edge_order=2)
    psi_x = np.gradient(state.phi, grid.hx, axis=0, edge_order=2)
    psi_y = psi_triv_y[None, :] + np.gradient(state.phi, grid.hy, axis=1, edge_order=2)
    if grid.symmetric:
        eta_x[0, :] = 0.0
        psi_x[0, :] = 0.0
    return ConformalFields(eta=eta, eta_x=eta_x, eta_y=eta_y, psi=psi, psi_x=psi_x, psi_y=psi_y)


def velocity_field(state: WaveState, flow: LaminarFlow) -> Tuple[np.ndarray, np.ndarray]:
    """
    Relative velocity (u, v) at every grid node.

        u = (psi_x eta_x + psi_y eta_y) / |grad eta|^2,   v = (psi_y eta_x - psi_x eta_y) / |grad eta|^2

    Raises:
        ConformalityError: |grad eta|^2 < 1e-12 somewhere.
    """
    f = conformal_fields(state, flow)
    return _velocity(f)


def _velocity(f: ConformalFields) -> Tuple[np.ndarray, np.ndarray]:
    grad_sq = f.grad_eta_sq
    if np.min(grad_sq) < MIN_GRAD_ETA_SQ:
        index = np.unravel_index(np.argmin(grad_sq), grad_sq.shape)
        raise ConformalityError("conformal map degenerates: |grad eta| vanishes", node=str(index))
    u = (f.psi_x * f.eta_x + f.psi_y * f.eta_y) / grad_sq
    v = (f.psi_y * f.eta_x - f.psi_x * f.eta_y) / grad_sq
    return u, v


# -----------------------------------------------------------------------------
# Flow force
# -----------------------------------------------------------------------------

def _flow_force_columns(
    state: WaveState, flow: LaminarFlow, spec: VorticitySpec, columns: np.ndarray
) -> np.ndarray:
    f = conformal_fields(state, flow)
    u, v = _velocity(f)
    y = state.grid.y
    g_top = evaluate_G(spec, 1.0)
    values = []
    for i in columns:
        pressure_like = (
            0.5 * (u[i] ** 2 - v[i] ** 2)
            - state.alpha * (f.eta[i] - 1.0)
            + (evaluate_G(spec, f.psi[i]) - g_top)
            + 0.5 * flow.mu
        )
        integrand = pressure_like * f.eta_y[i] + u[i] * v[i] * f.eta_x[i]
        values.append(integrate.simpson(integrand, x=y))
    return np.array(values)


def flow_force(state: WaveState, flow: LaminarFlow, spec: VorticitySpec, x_index: int) -> float:
    """
    Flow force through the column ``x_index``:

        S = int_0^1 [1/2 (u^2 - v^2) - alpha (eta - 1) + G(psi) - G(1) + mu/2] eta_y + u v eta_x dy

    For the laminar state with gamma = 0 this is 1 + alpha/2.
    """
    if not 0 <= x_index < state.grid.nx:
        raise DomainError(f"column index {x_index} outside 0..{state.grid.nx - 1}")
    return float(_flow_force_columns(state, flow, spec, np.array([x_index]))[0])


def flow_force_profile(
    state: WaveState, flow: LaminarFlow, spec: VorticitySpec, stride: int = 5
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    S sampled at every ``stride``-th column from the crest outwards.

    Returns:
        (x, S, drift) with drift = max |S(x) - S(0)| / |S(0)|.
    """
    if stride < 1:
        raise DomainError("flow-force stride must be at least 1")
    grid = state.grid
    columns = np.arange(grid.crest_index, grid.nx, stride)
    values = _flow_force_columns(state, flow, spec, columns)
    drift = float(np.max(np.abs(values - values[0])) / abs(values[0]))
    logger.debug(f"Flow force S(0)={values[0]:.12g}, drift={drift:.3e} over {columns.size} columns")
    return grid.x[columns], values, drift


# -----------------------------------------------------------------------------
# Bernoulli, vorticity identity and the a priori constant
# -----------------------------------------------------------------------------

def bernoulli_residual(state: WaveState, flow: LaminarFlow) -> Tuple[float, float]:
    """
    Surface Bernoulli residual sup |u^2 + v^2 - mu + 2 alpha (eta - 1)| and the stagnation
    margin min (u^2 + v^2), both over y = 1.
    """
    f = conformal_fields(state, flow)
    u, v = _velocity(f)
    speed_sq = u[:, -1] ** 2 + v[:, -1] ** 2
    residual = np.abs(speed_sq - flow.mu + 2.0 * state.alpha * (f.eta[:, -1] - 1.0))
    return float(np.max(residual)), float(np.min(speed_sq))


def velocity_equation_residual(state: WaveState, flow: LaminarFlow, spec: VorticitySpec) -> float:
    """sup over interior nodes of |psi_xx + psi_yy + gamma(psi) |grad eta|^2|."""
    grid = state.grid
    f = conformal_fields(state, flow)
    psi = f.psi
    hx, hy = grid.hx, grid.hy
    if grid.symmetric:
        padded = np.vstack([psi[1:2], psi])
    else:
        padded = psi
    psi_xx = (padded[2:, 1:-1] - 2.0 * padded[1:-1, 1:-1] + padded[:-2, 1:-1]) / hx**2
    psi_yy = (psi[:, 2:] - 2.0 * psi[:, 1:-1] + psi[:, :-2]) / hy**2
    rows = slice(0, grid.nx - 1) if grid.symmetric else slice(1, grid.nx - 1)
    source = evaluate(spec, psi[rows, 1:-1]) * f.grad_eta_sq[rows, 1:-1]
    residual = psi_xx + psi_yy[rows] + source
    return float(np.max(np.abs(residual)))


def health_delta(state: WaveState, flow: LaminarFlow) -> float:
    """min(inf |grad eta|, 1 / sup |grad eta|, inf (mu - 2 alpha (eta - 1))) over the closed strip."""
    f = conformal_fields(state, flow)
    grad = np.sqrt(f.grad_eta_sq)
    pressure = flow.mu - 2.0 * state.alpha * (f.eta - 1.0)
    return float(min(np.min(grad), 1.0 / np.max(grad), np.min(pressure)))


# -----------------------------------------------------------------------------
# Nodal property
# -----------------------------------------------------------------------------

def nodal_check(
    state: WaveState, flow: LaminarFlow, wave_type: Literal["elevation", "depression"] = "elevation"
) -> NodalResult:
    """
    Sign of eta_x on the half strip x > 0 (interior rows and the surface, lateral end excluded).

    Elevation waves need eta_x < 0, depression waves eta_x > 0; nodes with |eta_x| below the
    noise floor are skipped. The vertical velocity on the surface is checked to carry the
    opposite sign (v < 0 for elevation).
    """
    grid = state.grid
    f = conformal_fields(state, flow)
    _, v = _velocity(f)
    sign = -1.0 if wave_type == "elevation" else 1.0
    columns = np.flatnonzero(grid.x > 0.0)
    columns = columns[columns < grid.nx - 1]

    block = f.eta_x[columns, 1:]
    significant = np.abs(block) > NOISE_FLOOR
    checked = int(np.count_nonzero(significant))
    if checked == 0:
        return NodalResult(ok=True, trivial=True, vertical_velocity_ok=True, checked=0)

    bad = significant & (sign * block <= 0.0)
    violation = None
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        violation = {"x": float(grid.x[columns[i]]), "y": float(grid.y[j + 1]), "eta_x": float(block[i, j])}
        logger.info(f"Nodal property fails at x={violation['x']:.4g}, y={violation['y']:.4g}")

    v_top = v[columns, -1]
    v_significant = np.abs(v_top) > NOISE_FLOOR
    vertical_ok = bool(np.all(sign * v_top[v_significant] > 0.0))
    return NodalResult(
        ok=violation is None, trivial=False, vertical_velocity_ok=vertical_ok, checked=checked, violation=violation
    )


# -----------------------------------------------------------------------------
# Physical-plane surface
# -----------------------------------------------------------------------------

def reconstruct_surface_curve(x: np.ndarray, eta_top: np.ndarray, eta_y_top: np.ndarray, crest_index: int) -> SurfaceCurve:
    """
    Integrate xi_x = eta_y along the top from the crest (xi = 0 there) and flag overhangs,
    i.e. points where xi_x < -1e-10.
    """
    xi = integrate.cumulative_trapezoid(eta_y_top, x=x, initial=0.0)
    xi = xi - xi[crest_index]
    min_slope = float(np.min(eta_y_top))
    overhang = min_slope < -OVERHANG_THRESHOLD
    if overhang:
        logger.warning(f"Reconstructed surface is not a graph: min xi_x = {min_slope:.3e}")
    order = slice(crest_index, None)
    return SurfaceCurve(xi=xi[order], eta=np.asarray(eta_top)[order], overhang=overhang, min_slope=min_slope)


def surface_reconstruction(state: WaveState, flow: LaminarFlow) -> SurfaceCurve:
    """(xi(x, 1), eta(x, 1)) from the crest outwards."""
    f = conformal_fields(state, flow)
    grid = state.grid
    return reconstruct_surface_curve(grid.x, f.eta[:, -1], f.eta_y[:, -1], grid.crest_index)


# -----------------------------------------------------------------------------
# Conjugate flows
# -----------------------------------------------------------------------------

def conjugate_flow(flow: LaminarFlow, alpha: float) -> Dict[str, Any]:
    """
    Conjugate depth of the laminar flow and the flow-force gap.

    Q(d) = mu / d^2 + 2 alpha (d - 1) takes the value Q(1) = mu again at d*, the positive root
    of 2 alpha d^2 - mu d - mu. The gap S(d*) - S(1) = alpha/2 (d*^2 - 1) is nonzero unless
    d* = 1, which rules out bores. The gap is also integrated numerically as a cross-check.

    Raises:
        DomainError: alpha outside (0, alpha_cr).
    """
    if not 0.0 < alpha < flow.alpha_cr:
        raise DomainError(f"conjugate flows need 0 < alpha < alpha_cr = {flow.alpha_cr:.8g}, got {alpha}")
    mu = flow.mu
    low, high = CONJUGATE_BRACKET

    def reduced(d):
        return 2.0 * alpha * d * d - mu * d - mu

    d_cr = float((mu / alpha) ** (1.0 / 3.0))
    samples = np.linspace(0.1, high, 200)
    convexity_ok = bool(np.all(6.0 * mu / samples**4 > 0.0))
    if reduced(high) < 0.0:
        logger.warning("No conjugate depth in (0, 10]")
        return {"d_star": None, "S_gap": None, "S_gap_quadrature": None, "convexity_ok": convexity_ok, "d_cr": d_cr}

    d_star = optimize.brentq(reduced, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    gap = 0.5 * alpha * (d_star**2 - 1.0)
    gap_quad, _ = integrate.quad(
        lambda s: 0.5 * mu * (1.0 / s**2 + 1.0) - alpha * (s - 1.0), 1.0, d_star, epsabs=1e-13, epsrel=1e-13
    )
    logger.info(f"Conjugate depth d*={d_star:.12g}, flow-force gap {gap:.6g}")
    return {
        "d_star": float(d_star),
        "S_gap": float(gap),
        "S_gap_quadrature": float(gap_quad),
        "convexity_ok": convexity_ok,
        "d_cr": d_cr,
    }


# -----------------------------------------------------------------------------
# Dimensional output
# -----------------------------------------------------------------------------

def dimensional_restore(state: WaveState, flow: LaminarFlow, g: float, d: float) -> dict:
    """
    Physical quantities for gravity ``g`` [m/s^2] and depth ``d`` [m], using alpha = g d^3 / m^2.
    """
    if g <= 0 or d <= 0:
        raise DomainError("gravity and depth must be positive")
    fr, fr_cr = froude(flow, state.alpha)
    mass_flux = float(np.sqrt(g * d**3 / state.alpha))
    curve = surface_reconstruction(state, flow)
    return {
        "froude": fr,
        "froude_critical": fr_cr,
        "mass_flux": mass_flux,
        "speed_scale": mass_flux / d,
        "crest_height": d * state.crest,
        "surface": (d * curve.polyline()).tolist(),
    }


# -----------------------------------------------------------------------------
# Bundle
# -----------------------------------------------------------------------------

def diagnose(
    state: WaveState,
    flow: LaminarFlow,
    spec: VorticitySpec,
    wave_type: Literal["elevation", "depression"] = "elevation",
    stride: int = 5,
) -> DiagnosticsReport:
    x_samples, s_values, drift = flow_force_profile(state, flow, spec, stride=stride)
    residual, margin = bernoulli_residual(state, flow)
    nodal = nodal_check(state, flow, wave_type)
    curve = surface_reconstruction(state, flow)
    conjugate = conjugate_flow(flow, state.alpha) if 0.0 < state.alpha < flow.alpha_cr else None
    report = DiagnosticsReport(
        alpha=state.alpha,
        crest=state.crest,
        flow_force_x=x_samples.tolist(),
        flow_force_profile=s_values.tolist(),
        flow_force_drift=drift,
        bernoulli_residual=residual,
        stagnation_margin=margin,
        velocity_equation_residual=velocity_equation_residual(state, flow, spec),
        nodal_ok=nodal.ok,
        nodal_trivial=nodal.trivial,
        nodal_violation=nodal.violation,
        vertical_velocity_ok=nodal.vertical_velocity_ok,
        overhang=curve.overhang,
        overhang_margin=curve.min_slope,
        surface_curve=[tuple(p) for p in curve.polyline().tolist()],
        health_delta=health_delta(state, flow),
        far_field_leakage=float(abs(state.w[state.grid.active][-1])),
        conjugate=conjugate,
    )
    logger.info(f"Diagnostics: drift={drift:.3e}, bernoulli={residual:.3e}, nodal_ok={nodal.ok}")
    return report
