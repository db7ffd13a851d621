#!/usr/bin/env python3
"""
strip_solver.py

Finite-difference solver for the conformal-strip formulation of a steady solitary wave.

Unknowns on the truncated strip (x, y) in [0, L] x [0, 1]:
  - phi(x, y): stream-function perturbation, zero on the bed and on the surface,
  - w(x):      surface elevation (top boundary data of zeta),
  - alpha:     gravity parameter.

zeta = zeta_[w] is the harmonic extension of w, eta = y + zeta, psi = psi_triv + phi.
The nonlinear operator is

    F1 = phi - A(phi, w, alpha),
    F2 = 1/2 (dA/dy + psi_triv,y)^2 - (mu/2 - alpha w) |(0,1) + grad zeta|^2      on y = 1,

where A solves  Lap A = -gamma(phi + psi_triv) |(0,1) + grad zeta|^2 + gamma(psi_triv)
with A = 0 on the top and bottom.

Newton does not iterate on F directly (every action of its Jacobian needs two Poisson
solves). It iterates on the equivalent sparse system G(phi, zeta, w) = 0,

    G1 = Lap phi + gamma(psi) |a|^2 - gamma(psi_triv),
    G2 = Lap zeta + (top coupling of w),
    G3 = 1/2 (d_y phi + psi_triv,y(1))^2 - (mu/2 - alpha w) |a|^2      on y = 1,

which has the same roots and an explicitly assembled Jacobian. Convergence is still
judged on ||F||_inf.

Layout: fields are (nx, ny) arrays indexed [i, j] with x_i, y_j. Unknown vectors hold the
"active" x nodes (all but Dirichlet ends) times the interior y nodes, x-major.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import LinearOperator, MatrixRankWarning, splu, spsolve

from vorwave.errors import AdmissibilityError, DomainError, LinearSolveError, NonConvergenceError
from vorwave.laminar import LaminarFlow
from vorwave.vorticity import VorticitySpec, evaluate

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

FAR_FIELD_TOL = 1e-6
COLLAPSE_RATIO = 0.1

# -----------------------------------------------------------------------------
# Grid and state
# -----------------------------------------------------------------------------

class Grid(BaseModel):
    """
    Uniform grid on the truncated strip.

    ``symmetric`` grids cover [0, L] with an even reflection at x = 0; otherwise [-L, L].
    ``far_field`` selects the lateral closure: "dirichlet" (phi = zeta = w = 0 at the end)
    or "free" (zero second x-derivative, used to expose the critical kernel).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    L: float = 40.0
    nx: int = 201
    ny: int = 41
    symmetric: bool = True
    far_field: Literal["dirichlet", "free"] = "dirichlet"

    @field_validator("L")
    @classmethod
    def long_enough(cls, value):
        if value < 10.0:
            raise ValueError("truncation length L must be at least 10")
        return value

    @field_validator("nx")
    @classmethod
    def enough_columns(cls, value):
        if value < 5:
            raise ValueError("nx must be at least 5")
        return value

    @field_validator("ny")
    @classmethod
    def enough_rows(cls, value):
        if value < 5:
            raise ValueError("ny must be at least 5")
        return value

    @property
    def x(self) -> np.ndarray:
        start = 0.0 if self.symmetric else -self.L
        return np.linspace(start, self.L, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny)

    @property
    def hx(self) -> float:
        return (self.L if self.symmetric else 2.0 * self.L) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def active(self) -> slice:
        """x nodes that carry unknowns."""
        dirichlet = self.far_field == "dirichlet"
        start = 1 if (dirichlet and not self.symmetric) else 0
        stop = self.nx - 1 if dirichlet else self.nx
        return slice(start, stop)

    @property
    def n_active(self) -> int:
        s = self.active
        return s.stop - s.start

    @property
    def n_interior(self) -> int:
        return self.n_active * (self.ny - 2)

    @property
    def crest_index(self) -> int:
        """Column index of x = 0."""
        return 0 if self.symmetric else (self.nx - 1) // 2

    def refined(self) -> "Grid":
        """Grid with both spacings halved."""
        return self.model_copy(update={"nx": 2 * self.nx - 1, "ny": 2 * self.ny - 1})


@dataclass(frozen=True)
class WaveState:
    """Discrete (phi, w, alpha) with Newton metadata."""

    grid: Grid
    phi: np.ndarray
    w: np.ndarray
    alpha: float
    iterations: int = 0
    residual_norm: float = float("nan")

    @classmethod
    def trivial(cls, grid: Grid, alpha: float) -> "WaveState":
        return cls(grid=grid, phi=np.zeros((grid.nx, grid.ny)), w=np.zeros(grid.nx), alpha=float(alpha))

    @property
    def crest(self) -> float:
        return float(self.w[self.grid.crest_index])

    def evolve(self, **changes) -> "WaveState":
        return replace(self, **changes)


@dataclass(frozen=True)
class StripFields:
    """Derived fields of a state on the full grid."""

    zeta: np.ndarray
    eta: np.ndarray
    psi: np.ndarray
    psi_triv: np.ndarray
    psi_triv_y: np.ndarray


# -----------------------------------------------------------------------------
# Sparse operators (depend on the grid only)
# -----------------------------------------------------------------------------

@dataclass
class _Operators:
    lap: sp.csc_matrix
    gx: sp.csr_matrix
    gy: sp.csr_matrix
    top_yy: sp.csr_matrix
    top_y: sp.csr_matrix
    etop: sp.csr_matrix
    dx: sp.csr_matrix
    hy: float
    lu: object = field(repr=False)


def _x_operators(grid: Grid) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """Second and first x-derivative matrices on the active nodes, closures included."""
    m, h = grid.n_active, grid.hx
    ones = np.ones(m - 1)
    d2 = sp.diags([ones, -2.0 * np.ones(m), ones], [-1, 0, 1], format="lil") / h**2
    d1 = sp.diags([-ones, ones], [-1, 1], format="lil") / (2.0 * h)
    d2, d1 = d2.tolil(), d1.tolil()

    if grid.symmetric:
        # even reflection u_{-1} = u_1
        d2[0, 1] = 2.0 / h**2
        d1[0, :] = 0.0
    elif grid.far_field == "free":
        d2[0, :] = 0.0
        d1[0, :] = 0.0
        d1[0, 0], d1[0, 1], d1[0, 2] = -3.0 / (2 * h), 4.0 / (2 * h), -1.0 / (2 * h)

    if grid.far_field == "free":
        d2[m - 1, :] = 0.0
        d1[m - 1, :] = 0.0
        d1[m - 1, m - 1], d1[m - 1, m - 2], d1[m - 1, m - 3] = 3.0 / (2 * h), -4.0 / (2 * h), 1.0 / (2 * h)
    return d2.tocsr(), d1.tocsr()


@lru_cache(maxsize=8)
def _operators(grid: Grid) -> _Operators:
    m, n, hy = grid.n_active, grid.ny - 2, grid.hy
    d2x, d1x = _x_operators(grid)
    ones = np.ones(n - 1)
    dyy = sp.diags([ones, -2.0 * np.ones(n), ones], [-1, 0, 1]) / hy**2
    dy = sp.diags([-ones, ones], [-1, 1]) / (2.0 * hy)
    eye_x, eye_y = sp.identity(m, format="csr"), sp.identity(n, format="csr")

    lap = (sp.kron(d2x, eye_y) + sp.kron(eye_x, dyy)).tocsc()
    gx = sp.kron(d1x, eye_y).tocsr()
    gy = sp.kron(eye_x, dy).tocsr()

    last = sp.csr_matrix(([1.0], ([n - 1], [0])), shape=(n, 1))
    top_yy = sp.kron(eye_x, last).tocsr() / hy**2
    top_y = sp.kron(eye_x, last).tocsr() / (2.0 * hy)

    # one-sided d/dy on y = 1 from interior values (the 3 w / 2hy part is added separately)
    row = np.zeros(n)
    row[n - 1] = -4.0 / (2.0 * hy)
    if n >= 2:
        row[n - 2] = 1.0 / (2.0 * hy)
    etop = sp.kron(eye_x, sp.csr_matrix(row)).tocsr()

    try:
        lu = splu(lap)
    except RuntimeError as exc:
        raise LinearSolveError(f"strip Laplacian factorization failed: {exc}") from exc
    logger.debug(f"Factorized strip Laplacian with {lap.shape[0]} unknowns")
    return _Operators(lap=lap, gx=gx, gy=gy, top_yy=top_yy, top_y=top_y, etop=etop, dx=d1x, hy=hy, lu=lu)


def _solve(ops: _Operators, rhs: np.ndarray) -> np.ndarray:
    out = ops.lu.solve(np.asarray(rhs, dtype=float))
    if not np.all(np.isfinite(out)):
        raise LinearSolveError("Poisson solve produced non-finite values")
    return out


# -----------------------------------------------------------------------------
# Solver bound to a (grid, vorticity, laminar flow) triple
# -----------------------------------------------------------------------------

class StripSolver:
    """Residual, Jacobian and Newton iteration for one grid and background flow."""

    def __init__(self, grid: Grid, spec: VorticitySpec, flow: LaminarFlow):
        self.grid = grid
        self.spec = spec
        self.flow = flow
        self.ops = _operators(grid)
        psi_col, psi_y_col = flow.evaluate(grid.y)
        self.psi_triv_col = psi_col
        self.psi_triv_y_col = psi_y_col
        self.p = flow.psi_y_top
        self.mu = flow.mu
        n_active = grid.n_active
        self.psi_int = np.tile(psi_col[1:-1], n_active)
        self.psi_y_int = np.tile(psi_y_col[1:-1], n_active)
        self.gamma_triv = evaluate(spec, self.psi_int)

    # ----- layout helpers -----------------------------------------------------

    def interior(self, field2d: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(field2d[self.grid.active, 1:-1]).ravel()

    def top(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w[self.grid.active], dtype=float)

    def full_field(self, vec: np.ndarray, top: Optional[np.ndarray] = None) -> np.ndarray:
        grid = self.grid
        out = np.zeros((grid.nx, grid.ny))
        out[grid.active, 1:-1] = vec.reshape(grid.n_active, grid.ny - 2)
        if top is not None:
            out[grid.active, -1] = top
        return out

    def full_top(self, top: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.nx)
        out[self.grid.active] = top
        return out

    # ----- building blocks ------------------------------------------------------

    def zeta_interior(self, w_act: np.ndarray) -> np.ndarray:
        return -_solve(self.ops, self.ops.top_yy @ w_act)

    def interior_gradient(self, zeta_int, w_act):
        """(a_x, a_y) = (0, 1) + grad zeta at interior nodes."""
        ax = self.ops.gx @ zeta_int
        ay = 1.0 + self.ops.gy @ zeta_int + self.ops.top_y @ w_act
        return ax, ay

    def surface_gradient(self, zeta_int, w_act):
        """(b_x, b_y) = (0, 1) + grad zeta on y = 1."""
        bx = self.ops.dx @ w_act
        by = 1.0 + self.ops.etop @ zeta_int + 1.5 / self.ops.hy * w_act
        return bx, by

    def _rhs(self, phi_int, ax, ay):
        return -evaluate(self.spec, phi_int + self.psi_int) * (ax**2 + ay**2) + self.gamma_triv

    def _unpack(self, state: WaveState):
        w_act = self.top(state.w)
        phi_int = self.interior(state.phi)
        zeta_int = self.zeta_interior(w_act)
        return phi_int, zeta_int, w_act

    # ----- admissibility --------------------------------------------------------

    def sigma_surface(self, state: WaveState) -> float:
        """inf over y = 1 of (mu - 2 alpha w) |grad eta|^2."""
        phi_int, zeta_int, w_act = self._unpack(state)
        return self._sigma_surface(zeta_int, w_act, state.alpha)

    def _sigma_surface(self, zeta_int, w_act, alpha) -> float:
        bx, by = self.surface_gradient(zeta_int, w_act)
        return float(np.min((self.mu - 2.0 * alpha * w_act) * (bx**2 + by**2)))

    def sigma_domain(self, state: WaveState) -> float:
        """inf over the interior of (mu - 2 alpha (eta - 1)) |grad eta|^2."""
        phi_int, zeta_int, w_act = self._unpack(state)
        ax, ay = self.interior_gradient(zeta_int, w_act)
        y_int = np.tile(self.grid.y[1:-1], self.grid.n_active)
        eta_minus_one = y_int + zeta_int - 1.0
        return float(np.min((self.mu - 2.0 * state.alpha * eta_minus_one) * (ax**2 + ay**2)))

    def is_admissible(self, state: WaveState) -> bool:
        try:
            return self.sigma_surface(state) > 0.0
        except LinearSolveError:
            return False

    # ----- operator evaluation --------------------------------------------------

    def harmonic_extension(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)):
            raise DomainError("surface data for the harmonic extension must be finite")
        if self.grid.far_field == "dirichlet" and abs(w[-1]) > FAR_FIELD_TOL:
            logger.warning(f"Far-field value w(L)={w[-1]:.3e} is discarded by the Dirichlet closure")
        w_act = self.top(w)
        return self.full_field(self.zeta_interior(w_act), top=w_act)

    def apply_A(self, state: WaveState) -> np.ndarray:
        phi_int, zeta_int, w_act = self._unpack(state)
        self._require_admissible(zeta_int, w_act, state.alpha)
        ax, ay = self.interior_gradient(zeta_int, w_act)
        return self.full_field(_solve(self.ops, self._rhs(phi_int, ax, ay)))

    def _require_admissible(self, zeta_int, w_act, alpha):
        sigma = self._sigma_surface(zeta_int, w_act, alpha)
        if not sigma > 0.0:
            raise DomainError("state is not admissible: sigma <= 0 on the surface", sigma=sigma)

    def residual_vectors(self, phi_int, w_act, alpha) -> Tuple[np.ndarray, np.ndarray]:
        zeta_int = self.zeta_interior(w_act)
        self._require_admissible(zeta_int, w_act, alpha)
        ax, ay = self.interior_gradient(zeta_int, w_act)
        a_int = _solve(self.ops, self._rhs(phi_int, ax, ay))
        bx, by = self.surface_gradient(zeta_int, w_act)
        f1 = phi_int - a_int
        f2 = 0.5 * (self.ops.etop @ a_int + self.p) ** 2 - (0.5 * self.mu - alpha * w_act) * (bx**2 + by**2)
        return f1, f2

    def residual(self, state: WaveState) -> Tuple[np.ndarray, np.ndarray]:
        f1, f2 = self.residual_vectors(self.interior(state.phi), self.top(state.w), state.alpha)
        return self.full_field(f1), self.full_top(f2)

    def residual_norm(self, state: WaveState) -> float:
        f1, f2 = self.residual_vectors(self.interior(state.phi), self.top(state.w), state.alpha)
        return float(max(np.max(np.abs(f1)), np.max(np.abs(f2))))

    # ----- linearization --------------------------------------------------------

    def jacobian(self, state: WaveState) -> LinearOperator:
        """
        Exact action of dF/d(phi, w) on vectors laid out as [phi interior, w active].

        Each application costs two Poisson solves (zeta_[w_dot] and the A-derivative).
        """
        ops, spec, grid = self.ops, self.spec, self.grid
        phi_int, zeta_int, w_act = self._unpack(state)
        self._require_admissible(zeta_int, w_act, state.alpha)
        psi = phi_int + self.psi_int
        gam, gam1 = evaluate(spec, psi), evaluate(spec, psi, order=1)
        ax, ay = self.interior_gradient(zeta_int, w_act)
        bx, by = self.surface_gradient(zeta_int, w_act)
        a_int = _solve(ops, self._rhs(phi_int, ax, ay))
        top_slope = ops.etop @ a_int + self.p
        s2 = ax**2 + ay**2
        bb = bx**2 + by**2
        beta = self.mu - 2.0 * state.alpha * w_act
        alpha = state.alpha
        n = grid.n_interior
        size = n + grid.n_active

        def apply(block):
            x = np.asarray(block, dtype=float)
            column = x.ndim == 1
            if column:
                x = x[:, None]
            phid, wd = x[:n], x[n:]
            zd = -_solve(ops, ops.top_yy @ wd)
            axd = ops.gx @ zd
            ayd = ops.gy @ zd + ops.top_y @ wd
            rd = -(gam1 * s2)[:, None] * phid - 2.0 * gam[:, None] * (ax[:, None] * axd + ay[:, None] * ayd)
            ad = _solve(ops, rd)
            d_f1 = phid - ad
            bxd = ops.dx @ wd
            byd = ops.etop @ zd + 1.5 / ops.hy * wd
            d_f2 = (
                top_slope[:, None] * (ops.etop @ ad)
                + (alpha * bb)[:, None] * wd
                - beta[:, None] * (bx[:, None] * bxd + by[:, None] * byd)
            )
            out = np.vstack([d_f1, d_f2])
            return out[:, 0] if column else out

        return LinearOperator((size, size), matvec=apply, matmat=apply, dtype=float)

    def jacobian_spectrum(self, state: WaveState, k: int = 3) -> Tuple[np.ndarray, np.ndarray]:
        """
        Smallest singular values (ascending) and right singular vectors of the dense Jacobian.

        Dense SVD: meant for small probing grids.
        """
        op = self.jacobian(state)
        dense = op.matmat(np.eye(op.shape[1]))
        _, sigma, vt = np.linalg.svd(dense)
        order = np.argsort(sigma)[:k]
        return sigma[order], vt[order]

    def jacobian_check(self, state: WaveState, directions: int = 10, seed: int = 0, step: float = 1e-6) -> float:
        """
        Worst relative gap between J v and a central difference of F over random directions.

        Args:
            state (WaveState): Linearization point (must be admissible).
            directions (int): Number of random directions, max-norm normalised.
            seed (int): Seed of the numpy Generator drawing the directions.
            step (float): Finite-difference step.

        Returns:
            float: max over directions of ||J v - FD v||_inf / max(||J v||_inf, 1).
        """
        rng = np.random.default_rng(seed)
        x0 = np.concatenate([self.interior(state.phi), self.top(state.w)])
        n = self.grid.n_interior
        jac = self.jacobian(state)

        def flat(x):
            return np.concatenate(self.residual_vectors(x[:n], x[n:], state.alpha))

        worst = 0.0
        for _ in range(directions):
            direction = rng.standard_normal(x0.size)
            direction /= np.linalg.norm(direction, np.inf)
            difference = (flat(x0 + step * direction) - flat(x0 - step * direction)) / (2.0 * step)
            exact = jac.matvec(direction)
            worst = max(worst, float(np.max(np.abs(exact - difference)) / max(np.max(np.abs(exact)), 1.0)))
        logger.debug(f"Jacobian check over {directions} directions (seed {seed}): {worst:.3e}")
        return worst

    def assemble_system(self, state: WaveState):
        """
        Sparse Newton system for G(phi, zeta, w) = 0.

        Returns:
            (G, J, dG_dalpha, x0): residual vector, sparse Jacobian (csc), derivative with
            respect to alpha, and the current unknown vector [phi, zeta, w].
        """
        ops, spec, grid = self.ops, self.spec, self.grid
        phi_int, zeta_int, w_act = self._unpack(state)
        alpha = state.alpha
        psi = phi_int + self.psi_int
        gam, gam1 = evaluate(spec, psi), evaluate(spec, psi, order=1)
        ax, ay = self.interior_gradient(zeta_int, w_act)
        bx, by = self.surface_gradient(zeta_int, w_act)
        s2, bb = ax**2 + ay**2, bx**2 + by**2
        slope = ops.etop @ phi_int + self.p
        beta = self.mu - 2.0 * alpha * w_act

        g1 = ops.lap @ phi_int + gam * s2 - self.gamma_triv
        g2 = ops.lap @ zeta_int + ops.top_yy @ w_act
        g3 = 0.5 * slope**2 - (0.5 * self.mu - alpha * w_act) * bb
        residual = np.concatenate([g1, g2, g3])

        diag = sp.diags
        j11 = ops.lap + diag(gam1 * s2)
        j12 = diag(2.0 * gam * ax) @ ops.gx + diag(2.0 * gam * ay) @ ops.gy
        j13 = diag(2.0 * gam * ay) @ ops.top_y
        j31 = diag(slope) @ ops.etop
        j32 = -diag(beta * by) @ ops.etop
        j33 = diag(alpha * bb) - diag(beta * bx) @ ops.dx - diag(beta * by * 1.5 / ops.hy)
        jac = sp.bmat(
            [
                [j11, j12, j13],
                [None, ops.lap, ops.top_yy],
                [j31, j32, j33],
            ],
            format="csc",
        )
        d_alpha = np.concatenate([np.zeros(2 * grid.n_interior), w_act * bb])
        x0 = np.concatenate([phi_int, zeta_int, w_act])
        return residual, jac, d_alpha, x0

    def state_from_unknowns(self, x: np.ndarray, alpha: float, like: WaveState) -> WaveState:
        n = self.grid.n_interior
        phi = self.full_field(x[:n])
        w = self.full_top(x[2 * n :])
        return like.evolve(phi=phi, w=w, alpha=float(alpha))

    # ----- Newton ---------------------------------------------------------------

    def newton(
        self,
        initial: WaveState,
        tol: float = 1e-10,
        max_iter: int = 25,
        min_damping: float = 1.0 / 64.0,
        growth_cap: float = 2.0,
    ) -> WaveState:
        """
        Damped Newton on the bordered system at fixed alpha.

        A trial step is halved while the iterate is inadmissible, non-finite, or its residual
        grows beyond ``growth_cap`` times the current one.

        Raises:
            AdmissibilityError: The initial state, or every damped trial, is inadmissible.
            NonConvergenceError: ``max_iter`` iterations without reaching ``tol``, or a
                nontrivial start collapsed onto the laminar root.
        """
        if not self.is_admissible(initial):
            raise AdmissibilityError("initial state is not admissible", sigma=self._safe_sigma(initial))
        state = initial
        norm = self.residual_norm(state)
        for iteration in range(max_iter + 1):
            logger.debug(f"Newton iteration {iteration}: ||F|| = {norm:.3e}")
            if norm <= tol:
                if abs(state.crest) < COLLAPSE_RATIO * abs(initial.crest):
                    raise NonConvergenceError(
                        "Newton collapsed onto the laminar state",
                        last_residual=norm,
                        iterations=iteration,
                        initial_crest=initial.crest,
                        crest=state.crest,
                    )
                logger.info(f"Newton converged in {iteration} iteration(s), ||F|| = {norm:.3e}")
                return state.evolve(iterations=iteration, residual_norm=norm)
            if iteration == max_iter:
                break
            residual, jac, _, x0 = self.assemble_system(state)
            delta = _sparse_solve(jac, -residual)
            state, norm = self._damped_step(state, x0, delta, norm, state.alpha, min_damping, growth_cap)

        raise NonConvergenceError(
            f"Newton did not converge in {max_iter} iterations", last_residual=norm, iterations=max_iter
        )

    def _damped_step(self, state, x0, delta, norm, alpha_new, min_damping, growth_cap, alpha_delta=0.0):
        damping = 1.0
        inadmissible = False
        while damping >= min_damping:
            trial = self.state_from_unknowns(x0 + damping * delta, alpha_new + damping * alpha_delta, state)
            if self.is_admissible(trial):
                trial_norm = self.residual_norm(trial)
                if np.isfinite(trial_norm) and trial_norm <= growth_cap * max(norm, 1e-300):
                    return trial, trial_norm
                inadmissible = False
            else:
                inadmissible = True
            damping *= 0.5
            logger.debug(f"Halving Newton step to {damping:g}")
        if inadmissible:
            raise AdmissibilityError("damped Newton step cannot restore admissibility", last_residual=norm)
        raise NonConvergenceError("damped Newton step failed to reduce the residual", last_residual=norm, iterations=0)

    def _safe_sigma(self, state: WaveState) -> float:
        try:
            return self.sigma_surface(state)
        except LinearSolveError:
            return float("nan")

    # ----- good-unknown map -----------------------------------------------------

    def t_map(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(phi, w) = (theta - psi_y/psi_y(1) zeta_[theta|top], -theta|top / psi_y(1))."""
        theta = np.asarray(theta, dtype=float)
        top = self.top(theta[:, -1])
        zeta = self.full_field(self.zeta_interior(top), top=top)
        phi = theta - (self.psi_triv_y_col[None, :] / self.p) * zeta
        phi = self.full_field(self.interior(phi))
        w = self.full_top(-top / self.p)
        return phi, w

    def t_map_inverse(self, phi: np.ndarray, w: np.ndarray) -> np.ndarray:
        """theta = phi - psi_y zeta_[w]."""
        w_act = self.top(w)
        zeta = self.full_field(self.zeta_interior(w_act), top=w_act)
        theta = np.asarray(phi, dtype=float) - self.psi_triv_y_col[None, :] * zeta
        mask = np.zeros(self.grid.nx, dtype=bool)
        mask[self.grid.active] = True
        theta[~mask, :] = 0.0
        return theta

    def linear_identity_residual(self, theta_top: np.ndarray) -> float:
        """
        sup-norm of A0_w(theta|top) + A0_phi(psi_y zeta) - (psi_y - psi_y(1)) zeta at the
        laminar state, zeta = zeta_[theta|top]. Vanishes up to discretization error.
        """
        top = self.top(theta_top)
        zeta_int = self.zeta_interior(top)
        gam = self.gamma_triv
        gam1 = evaluate(self.spec, self.psi_int, order=1)
        dzeta_dy = self.ops.gy @ zeta_int + self.ops.top_y @ top
        a_w = _solve(self.ops, -2.0 * gam * dzeta_dy)
        a_phi = _solve(self.ops, -gam1 * self.psi_y_int * zeta_int)
        target = (self.psi_y_int - self.p) * zeta_int
        return float(np.max(np.abs(a_w + a_phi - target)))

    # ----- derived fields -------------------------------------------------------

    def fields(self, state: WaveState) -> StripFields:
        w_act = self.top(state.w)
        zeta = self.full_field(self.zeta_interior(w_act), top=w_act)
        eta = self.grid.y[None, :] + zeta
        psi_triv = np.broadcast_to(self.psi_triv_col, zeta.shape).copy()
        psi_triv_y = np.broadcast_to(self.psi_triv_y_col, zeta.shape).copy()
        return StripFields(zeta=zeta, eta=eta, psi=psi_triv + state.phi, psi_triv=psi_triv, psi_triv_y=psi_triv_y)

    def far_field_leakage(self, state: WaveState) -> float:
        """|w| at the last active node before the lateral boundary."""
        return float(abs(state.w[self.grid.active][-1]))


def _sparse_solve(matrix: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            solution = spsolve(matrix, rhs)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise LinearSolveError(f"bordered Newton system is singular: {exc}") from exc
    if not np.all(np.isfinite(solution)):
        raise LinearSolveError("bordered Newton system solve returned non-finite values")
    return solution


# -----------------------------------------------------------------------------
# Functional interface
# -----------------------------------------------------------------------------

def harmonic_extension(w: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Harmonic extension of surface data: Lap zeta = 0, zeta = w on y = 1, zeta = 0 on y = 0,
    even at x = 0 (symmetric grids), lateral closure per ``grid.far_field``.

    Args:
        w (ndarray): Surface values on the grid's x nodes.
        grid (Grid): Discretization.

    Returns:
        ndarray: zeta of shape (nx, ny).
    """
    ops = _operators(grid)
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError("surface data for the harmonic extension must be finite")
    if grid.far_field == "dirichlet" and abs(w[-1]) > FAR_FIELD_TOL:
        logger.warning(f"Far-field value w(L)={w[-1]:.3e} is discarded by the Dirichlet closure")
    w_act = w[grid.active]
    out = np.zeros((grid.nx, grid.ny))
    out[grid.active, 1:-1] = (-_solve(ops, ops.top_yy @ w_act)).reshape(grid.n_active, grid.ny - 2)
    out[grid.active, -1] = w_act
    return out


def apply_A(state: WaveState, spec: VorticitySpec, flow: LaminarFlow) -> np.ndarray:
    return StripSolver(state.grid, spec, flow).apply_A(state)


def residual(state: WaveState, spec: VorticitySpec, flow: LaminarFlow) -> Tuple[np.ndarray, np.ndarray]:
    return StripSolver(state.grid, spec, flow).residual(state)


def jacobian(state: WaveState, spec: VorticitySpec, flow: LaminarFlow) -> LinearOperator:
    return StripSolver(state.grid, spec, flow).jacobian(state)


def newton_solve(
    initial: WaveState, spec: VorticitySpec, flow: LaminarFlow, tol: float = 1e-10, max_iter: int = 25
) -> WaveState:
    return StripSolver(initial.grid, spec, flow).newton(initial, tol=tol, max_iter=max_iter)


def t_map(theta: np.ndarray, grid: Grid, spec: VorticitySpec, flow: LaminarFlow) -> Tuple[np.ndarray, np.ndarray]:
    return StripSolver(grid, spec, flow).t_map(theta)


def t_map_inverse(phi: np.ndarray, w: np.ndarray, grid: Grid, spec: VorticitySpec, flow: LaminarFlow) -> np.ndarray:
    return StripSolver(grid, spec, flow).t_map_inverse(phi, w)


def interpolate_profile(y_source: np.ndarray, values: np.ndarray, y_target: np.ndarray) -> np.ndarray:
    """Move a y-profile between grids with a not-a-knot cubic spline."""
    return CubicSpline(y_source, values)(y_target)
