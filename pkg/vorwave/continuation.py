#!/usr/bin/env python3
"""
continuation.py

Pseudo-arclength continuation of the solitary-wave branch from a converged small-amplitude
wave towards large amplitude.

The branch is parameterized by arclength in the weighted (crest w(0), alpha) plane, so folds
in alpha are traversed without special handling. Each step is

  1. predictor: secant through the last two points (tangent solve for the first step),
  2. corrector: Newton on the sparse system bordered by the alpha column and the arclength row,
  3. monitors: checked on every accepted point; the first threshold crossed ends the branch.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from vorwave.config import ContinuationConfig
from vorwave.diagnostics import bernoulli_residual, health_delta, nodal_check
from vorwave.errors import (
    AdmissibilityError,
    ContinuationStallError,
    DomainError,
    LinearSolveError,
    NonConvergenceError,
    NumericError,
)
from vorwave.laminar import LaminarFlow
from vorwave.strip_solver import StripSolver, WaveState, _sparse_solve
from vorwave.vorticity import VorticitySpec

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

REASONS = {
    "sigma_surface": "stagnation approach",
    "grad_eta_min": "conformal degeneracy",
    "alpha": "froude blow-up",
    "alpha_gap": "critical froude approach",
    "grad_eta_max": "gradient blow-up",
}
MAX_STEPS_REASON = "max steps reached"


@dataclass(frozen=True)
class Monitors:
    sigma_surface: float
    grad_eta_min: float
    grad_eta_max: float
    alpha: float
    alpha_gap: float
    froude: float
    crest: float
    stagnation_margin: float
    health: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BranchPoint:
    state: WaveState
    s: float
    monitors: Monitors
    nodal_ok: bool
    iterations: int


@dataclass(frozen=True)
class TerminationReason:
    reason: str
    monitor: Optional[str] = None
    value: Optional[float] = None
    threshold: Optional[float] = None


@dataclass
class Branch:
    points: List[BranchPoint] = field(default_factory=list)
    termination: Optional[TerminationReason] = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def crests(self) -> np.ndarray:
        return np.array([p.monitors.crest for p in self.points])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.monitors.alpha for p in self.points])

    def table(self) -> List[dict]:
        """One row per point: arclength, iterations, nodal flag and every monitor."""
        rows = []
        for index, point in enumerate(self.points):
            row = {"index": index, "s": point.s, "iterations": point.iterations, "nodal_ok": point.nodal_ok}
            row.update(point.monitors.as_dict())
            rows.append(row)
        return rows


# -----------------------------------------------------------------------------
# Monitors
# -----------------------------------------------------------------------------

def compute_monitors(solver: StripSolver, state: WaveState) -> Monitors:
    flow = solver.flow
    phi_int, zeta_int, w_act = solver._unpack(state)
    bx, by = solver.surface_gradient(zeta_int, w_act)
    grad_sq = bx**2 + by**2
    _, margin = bernoulli_residual(state, flow)
    return Monitors(
        sigma_surface=float(np.min(flow.mu - 2.0 * state.alpha * w_act)),
        grad_eta_min=float(np.min(grad_sq)),
        grad_eta_max=float(np.max(grad_sq)),
        alpha=state.alpha,
        alpha_gap=flow.alpha_cr - state.alpha,
        froude=float(np.sqrt(flow.mu / state.alpha)),
        crest=state.crest,
        stagnation_margin=margin,
        health=health_delta(state, flow),
    )


def triggered(monitors: Monitors, config: ContinuationConfig) -> Optional[TerminationReason]:
    limits = config.thresholds
    below = [
        ("sigma_surface", monitors.sigma_surface, limits.sigma_surface),
        ("grad_eta_min", monitors.grad_eta_min, limits.grad_eta_min),
        ("alpha", monitors.alpha, limits.alpha),
        ("alpha_gap", monitors.alpha_gap, limits.alpha_gap),
    ]
    for name, value, threshold in below:
        if value < threshold:
            return TerminationReason(REASONS[name], monitor=name, value=value, threshold=threshold)
    if monitors.grad_eta_max > limits.grad_eta_max:
        return TerminationReason(
            REASONS["grad_eta_max"], monitor="grad_eta_max", value=monitors.grad_eta_max, threshold=limits.grad_eta_max
        )
    return None


# -----------------------------------------------------------------------------
# Predictor / corrector
# -----------------------------------------------------------------------------

class _Arclength:
    """Weighted (crest, alpha) geometry on the extended unknown vector [phi, zeta, w, alpha]."""

    def __init__(self, solver: StripSolver, config: ContinuationConfig):
        grid = solver.grid
        self.crest = 2 * grid.n_interior + (grid.crest_index - grid.active.start)
        self.weights = np.array([config.weight_crest, config.weight_alpha])

    def project(self, u: np.ndarray) -> np.ndarray:
        return np.array([u[self.crest], u[-1]])

    def norm(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(self.weights * self.project(u)))

    def row(self, tangent: np.ndarray) -> np.ndarray:
        """Gradient of the arclength constraint with respect to (crest, alpha)."""
        return self.weights**2 * self.project(tangent)


def _extended(solver: StripSolver, state: WaveState) -> np.ndarray:
    _, _, _, x0 = solver.assemble_system(state)
    return np.concatenate([x0, [state.alpha]])


def initial_tangent(solver: StripSolver, state: WaveState, geometry: _Arclength, direction: int) -> np.ndarray:
    """Solve J dx = -G_alpha d_alpha with d_alpha = direction and normalize in (crest, alpha)."""
    _, jac, d_alpha, _ = solver.assemble_system(state)
    dx = _sparse_solve(jac, -d_alpha * direction)
    tangent = np.concatenate([dx, [float(direction)]])
    return tangent / geometry.norm(tangent)


def _correct(
    solver: StripSolver,
    predicted: WaveState,
    anchor: np.ndarray,
    tangent: np.ndarray,
    ds: float,
    geometry: _Arclength,
    tol: float,
    max_iter: int,
) -> WaveState:
    """Newton on [G; N] where N = <tangent, u - anchor>_(crest, alpha) - ds."""
    if not solver.is_admissible(predicted):
        raise AdmissibilityError("predicted point is not admissible")
    row = geometry.row(tangent)
    state = predicted
    norm = solver.residual_norm(state)
    for iteration in range(max_iter + 1):
        u = _extended(solver, state)
        constraint = float(np.dot(row, geometry.project(u - anchor)) - ds)
        logger.debug(f"Corrector iteration {iteration}: ||F|| = {norm:.3e}, arclength defect {constraint:.3e}")
        if norm <= tol and abs(constraint) <= max(tol, 1e-12 * ds):
            return state.evolve(iterations=iteration, residual_norm=norm)
        if iteration == max_iter:
            break
        residual, jac, d_alpha, x0 = solver.assemble_system(state)
        size = x0.size
        border_row = sp.csr_matrix(([row[0]], ([0], [geometry.crest])), shape=(1, size))
        extended = sp.bmat(
            [[jac, sp.csr_matrix(d_alpha[:, None])], [border_row, sp.csr_matrix([[row[1]]])]], format="csc"
        )
        delta = _sparse_solve(extended, -np.concatenate([residual, [constraint]]))
        state, norm = solver._damped_step(
            state, x0, delta[:-1], norm, state.alpha, 1.0 / 64.0, 2.0, alpha_delta=float(delta[-1])
        )
    raise NonConvergenceError("arclength corrector did not converge", last_residual=norm, iterations=max_iter)


# -----------------------------------------------------------------------------
# Driver
# -----------------------------------------------------------------------------

def extend_branch(
    seed: WaveState,
    spec: VorticitySpec,
    flow: LaminarFlow,
    config: Optional[ContinuationConfig] = None,
    tol: float = 1e-10,
) -> Branch:
    """
    Trace the branch through ``seed`` until a monitor crosses its threshold.

    Args:
        seed (WaveState): Converged starting point.
        spec (VorticitySpec): Vorticity function.
        flow (LaminarFlow): Background flow.
        config (ContinuationConfig): Steps, weights, thresholds, direction in alpha.
        tol (float): Corrector tolerance on ||F||_inf.

    Returns:
        Branch: Accepted points (seed first) and the termination reason.

    Raises:
        DomainError: The seed is not converged.
        ContinuationStallError: The corrector fails with the step at its minimum; the
            partial branch is attached to the exception.
    """
    config = config or ContinuationConfig()
    solver = StripSolver(seed.grid, spec, flow)
    seed_norm = solver.residual_norm(seed)
    if seed_norm > tol:
        raise DomainError(f"continuation needs a converged seed, ||F|| = {seed_norm:.3e} > {tol:.1e}")

    wave_type = "elevation" if seed.crest >= 0.0 else "depression"
    geometry = _Arclength(solver, config)
    branch = Branch()

    def accept(state: WaveState, s: float) -> Optional[TerminationReason]:
        monitors = compute_monitors(solver, state)
        nodal_ok = nodal_check(state, flow, wave_type).ok if config.check_nodal else True
        if not nodal_ok:
            logger.warning(f"Nodal property violated at s={s:.5g} (alpha={state.alpha:.8g})")
        branch.points.append(BranchPoint(state=state, s=s, monitors=monitors, nodal_ok=nodal_ok, iterations=state.iterations))
        logger.info(
            f"Branch point {len(branch) - 1}: s={s:.5g}, alpha={state.alpha:.8g}, crest={state.crest:.6g}, "
            f"F={monitors.froude:.6g}"
        )
        return triggered(monitors, config)

    reason = accept(seed.evolve(residual_norm=seed_norm), 0.0)
    if reason is not None:
        branch.termination = reason
        logger.info(f"Seed already triggers '{reason.reason}'")
        return branch

    current = _extended(solver, seed)
    previous: Optional[np.ndarray] = None
    tangent = initial_tangent(solver, seed, geometry, config.direction)
    ds = config.step0
    s = 0.0

    while len(branch) <= config.max_steps:
        if previous is not None:
            secant = current - previous
            tangent = secant / geometry.norm(secant)
        guess = current + ds * tangent
        if guess[-1] <= 0.0:
            ds *= 0.5
            logger.debug(f"Predictor left alpha > 0, step reduced to {ds:.3e}")
            if ds < config.step_min:
                raise ContinuationStallError("step fell below its minimum near alpha = 0", branch=branch)
            continue
        predicted = solver.state_from_unknowns(guess[:-1], guess[-1], branch.points[-1].state)
        try:
            state = _correct(solver, predicted, current, tangent, ds, geometry, tol, config.corrector_max_iter)
        except (NonConvergenceError, AdmissibilityError, LinearSolveError, DomainError) as exc:
            ds *= 0.5
            logger.info(f"Corrector failed ({exc.message}); step halved to {ds:.3e}")
            if ds < config.step_min:
                raise ContinuationStallError(
                    "continuation stalled below the minimum step", branch=branch, last_s=s, points=len(branch)
                ) from exc
            continue

        s += ds
        previous, current = current, _extended(solver, state)
        try:
            reason = accept(state, s)
        except NumericError as exc:
            reason = TerminationReason(f"monitor evaluation failed: {exc.message}")
        if reason is not None:
            branch.termination = reason
            logger.info(f"Branch terminated after {len(branch)} points: {reason.reason}")
            return branch
        if state.iterations <= config.fast_iterations:
            ds = min(ds * config.growth, config.step_max)

    branch.termination = TerminationReason(MAX_STEPS_REASON)
    logger.info(f"Branch terminated after {len(branch)} points: {MAX_STEPS_REASON}")
    return branch
