import numpy as np
import pytest

from vorwave.cm_reduction import small_amplitude_seed
from vorwave.config import RunConfig
from vorwave.errors import AdmissibilityError, NonConvergenceError
from vorwave.laminar import solve_laminar
from vorwave.strip_solver import Grid, StripSolver, WaveState, harmonic_extension, interpolate_profile
from vorwave.vorticity import VorticitySpec

PRESET_SPECS = [
    VorticitySpec(kind="constant", value=0.0),
    VorticitySpec(kind="constant", value=-1.0),
    VorticitySpec(kind="affine", slope=1.0),
]
FD_DIRECTIONS = 10


def _config_seed(spec):
    return RunConfig(vorticity=spec).seed


@pytest.mark.parametrize("spec", PRESET_SPECS, ids=lambda spec: spec.describe())
def test_laminar_state_is_a_root(spec, small_grid):
    flow = solve_laminar(spec)
    solver = StripSolver(small_grid, spec, flow)
    for alpha in np.linspace(0.05, 2.0, 20):
        norm = solver.residual_norm(WaveState.trivial(small_grid, alpha))
        assert norm <= 1e-12, f"laminar residual {norm:.3e} at alpha={alpha} for {spec.describe()}"


def test_harmonic_extension_converges():
    # Step 1: w = cos(kx) vanishes at x = L and is even at x = 0
    length = 10.0
    k = 1.5 * np.pi / length
    errors = []
    grid = Grid(L=length, nx=21, ny=11)
    for _ in range(2):
        x, y = grid.x, grid.y
        zeta = harmonic_extension(np.cos(k * x), grid)
        exact = np.cos(k * x)[:, None] * np.sinh(k * y)[None, :] / np.sinh(k)
        errors.append(np.max(np.abs(zeta - exact)))
        grid = grid.refined()

    # Step 2: second-order convergence
    order = np.log2(errors[0] / errors[1])
    assert order >= 1.8, f"harmonic extension converges with order {order:.2f} (errors {errors})"


def test_jacobian_matches_finite_differences(irrotational, irrotational_flow, affine, affine_flow, small_grid):
    seed = _config_seed(irrotational)
    solver = StripSolver(small_grid, irrotational, irrotational_flow)
    x = small_grid.x
    bump = 0.02 / np.cosh(0.4 * x) ** 2
    bump[-1] = 0.0
    phi = 0.01 * np.outer(np.exp(-0.1 * x**2), np.sin(np.pi * small_grid.y))
    phi[-1, :] = 0.0

    states = [
        WaveState.trivial(small_grid, 0.9),
        WaveState(grid=small_grid, phi=phi, w=bump, alpha=0.95),
    ]
    for state in states:
        error = solver.jacobian_check(state, directions=FD_DIRECTIONS, seed=seed)
        assert error <= 1e-5, f"Jacobian mismatch {error:.3e} at alpha={state.alpha}"

    affine_solver = StripSolver(small_grid, affine, affine_flow)
    state = WaveState(grid=small_grid, phi=phi, w=bump, alpha=0.5)
    error = affine_solver.jacobian_check(state, directions=FD_DIRECTIONS, seed=_config_seed(affine))
    assert error <= 1e-5, f"Jacobian mismatch {error:.3e} for affine vorticity"


def test_jacobian_along_the_solve(irrotational, irrotational_flow, irrotational_seed, irrotational_wave):
    # trivial state, sech^2 seed and converged wave on the same grid and alpha
    solver = StripSolver(irrotational_seed.grid, irrotational, irrotational_flow)
    seed = _config_seed(irrotational)
    states = {
        "trivial": WaveState.trivial(irrotational_seed.grid, irrotational_seed.alpha),
        "seed": irrotational_seed,
        "converged": irrotational_wave,
    }
    for name, state in states.items():
        error = solver.jacobian_check(state, directions=FD_DIRECTIONS, seed=seed)
        assert error <= 1e-5, f"Jacobian mismatch {error:.3e} at the {name} state"


def test_jacobian_check_is_reproducible(irrotational, irrotational_flow, irrotational_seed):
    solver = StripSolver(irrotational_seed.grid, irrotational, irrotational_flow)
    first = solver.jacobian_check(irrotational_seed, directions=2, seed=5)
    again = solver.jacobian_check(irrotational_seed, directions=2, seed=5)
    assert first == again, "the same seed should draw the same directions"


def test_newton_converges_from_seed(irrotational, irrotational_flow, irrotational_seed, irrotational_wave):
    assert irrotational_wave.iterations <= 10, f"Newton needed {irrotational_wave.iterations} iterations"
    assert irrotational_wave.residual_norm <= 1e-10

    solver = StripSolver(irrotational_wave.grid, irrotational, irrotational_flow)
    assert solver.residual_norm(irrotational_wave) <= 1e-10
    assert solver.sigma_surface(irrotational_wave) > 0.0
    assert solver.sigma_domain(irrotational_wave) > 0.0
    assert solver.far_field_leakage(irrotational_wave) < 1e-4 * irrotational_wave.crest

    # Step 1: the wave stays on the branch of the seed (crest F^2 - 1 = eps + O(eps^2))
    ratio = irrotational_wave.crest / irrotational_seed.crest
    assert 0.85 <= ratio <= 1.15, f"converged crest {irrotational_wave.crest} vs seed {irrotational_seed.crest}"


def test_collapse_onto_laminar_state_is_reported(irrotational, irrotational_flow, small_grid):
    # far below alpha_cr the laminar state is the only root near a small bump
    solver = StripSolver(small_grid, irrotational, irrotational_flow)
    bump = 1e-3 / np.cosh(small_grid.x) ** 2
    bump[-1] = 0.0
    state = WaveState(grid=small_grid, phi=np.zeros((small_grid.nx, small_grid.ny)), w=bump, alpha=0.5)

    with pytest.raises(NonConvergenceError) as info:
        solver.newton(state)
    assert "laminar" in info.value.message
    assert abs(info.value.details["crest"]) < 1e-4
    assert info.value.details["initial_crest"] == pytest.approx(1e-3)


def test_jacobian_at_converged_wave(irrotational, irrotational_flow, irrotational_cm, irrotational_eigen):
    # A coarse grid keeps the finite-difference sweep cheap; the wave comes from a Newton solve there.
    grid = Grid(L=20.0, nx=41, ny=9)
    seed = small_amplitude_seed(irrotational_flow, irrotational_eigen, irrotational_cm, 0.05, grid, irrotational)
    solver = StripSolver(grid, irrotational, irrotational_flow)
    wave = solver.newton(seed)
    assert wave.crest > 0.8 * seed.crest, f"converged crest {wave.crest} left the seed's branch"
    error = solver.jacobian_check(wave, directions=FD_DIRECTIONS, seed=_config_seed(irrotational))
    assert error <= 1e-5, f"Jacobian mismatch {error:.3e} at the converged wave"


@pytest.mark.slow
def test_small_wave_matches_linear_theory(irrotational, irrotational_flow, irrotational_eigen, irrotational_cm):
    epsilon = 0.01
    grid = Grid(L=80.0, nx=401, ny=41)
    seed = small_amplitude_seed(irrotational_flow, irrotational_eigen, irrotational_cm, epsilon, grid, irrotational)
    wave = StripSolver(grid, irrotational, irrotational_flow).newton(seed)

    # leading-order crest 3 eps f101 / (f200 psi_y(1)) = eps
    assert abs(wave.crest - epsilon) <= 0.15 * epsilon, f"crest {wave.crest}, expected about {epsilon}"
    long_wave = 1.0 / (1.0 - epsilon) - 1.0
    assert wave.crest == pytest.approx(long_wave, rel=0.05), f"crest {wave.crest} vs F^2 - 1 = {long_wave}"


def test_critical_kernel(irrotational, irrotational_flow):
    # Free lateral closure on the full strip: the linearization at alpha_cr has a 2-d kernel
    grid = Grid(L=10.0, nx=21, ny=81, symmetric=False, far_field="free")
    solver = StripSolver(grid, irrotational, irrotational_flow)
    state = WaveState.trivial(grid, irrotational_flow.alpha_cr)

    sigma, vectors = solver.jacobian_spectrum(state, k=3)
    assert sigma[2] >= 10.0 * sigma[1], f"no spectral gap after two singular values: {sigma}"

    # Step 1: the image of phi0 under the good-unknown map is (phi, w) = (0, -1)
    candidate = np.concatenate([np.zeros(grid.n_interior), -np.ones(grid.n_active)])
    candidate /= np.linalg.norm(candidate)
    projection = np.linalg.norm(vectors[:2] @ candidate)
    assert projection >= 0.99, f"kernel does not contain T(phi0): projection {projection:.4f}"

    # Step 2: the x-linear partner T(x phi0)
    theta = np.outer(grid.x, grid.y)
    phi, w = solver.t_map(theta)
    partner = np.concatenate([solver.interior(phi), solver.top(w)])
    partner /= np.linalg.norm(partner)
    projection = np.linalg.norm(vectors[:2] @ partner)
    assert projection >= 0.99, f"kernel does not contain T(x phi0): projection {projection:.4f}"


def test_critical_singular_values_vanish_under_refinement(affine, affine_flow):
    # affine vorticity: the discrete kernel is only O(hy^2) accurate, so refinement is visible
    smallest = []
    for ny in (21, 41, 81):
        grid = Grid(L=10.0, nx=21, ny=ny, symmetric=False, far_field="free")
        solver = StripSolver(grid, affine, affine_flow)
        sigma, _ = solver.jacobian_spectrum(WaveState.trivial(grid, affine_flow.alpha_cr), k=2)
        smallest.append(sigma)

    # Step 1: both kernel singular values shrink at each halving of hy
    for coarse, fine in zip(smallest[:-1], smallest[1:]):
        assert np.all(fine < 0.5 * coarse), f"kernel singular values do not shrink: {smallest}"
    assert smallest[-1][1] < 1e-2, f"kernel singular values at ny=81: {smallest[-1]}"


def test_jacobian_is_nonsingular_below_alpha_cr(irrotational, irrotational_flow):
    alpha_cr = irrotational_flow.alpha_cr
    for ny in (21, 41):
        grid = Grid(L=10.0, nx=21, ny=ny, symmetric=False, far_field="free")
        solver = StripSolver(grid, irrotational, irrotational_flow)
        critical, _ = solver.jacobian_spectrum(WaveState.trivial(grid, alpha_cr), k=1)
        below, _ = solver.jacobian_spectrum(WaveState.trivial(grid, alpha_cr - 0.2), k=1)

        assert below[0] >= 1e-3, f"smallest singular value {below[0]:.3e} at alpha_cr - 0.2 (ny={ny})"
        assert below[0] >= 100.0 * critical[0], f"no separation from alpha_cr: {below[0]:.3e} vs {critical[0]:.3e}"


def test_linear_identity_converges(affine, affine_flow):
    rng = np.random.default_rng(7)
    for _ in range(3):
        amplitude, width = rng.uniform(0.5, 2.0), rng.uniform(1.0, 2.5)
        residuals = []
        grid = Grid(L=12.0, nx=25, ny=11)
        for _ in range(2):
            solver = StripSolver(grid, affine, affine_flow)
            residuals.append(solver.linear_identity_residual(amplitude * np.exp(-((grid.x / width) ** 2))))
            grid = grid.refined()
        order = np.log2(residuals[0] / residuals[1])
        assert order >= 1.8, f"identity residual order {order:.2f} (residuals {residuals})"


def test_t_map_inverse(constant_vorticity, constant_flow, small_grid):
    solver = StripSolver(small_grid, constant_vorticity, constant_flow)
    profile = interpolate_profile(np.linspace(0.0, 1.0, 5), np.linspace(0.0, 1.0, 5) ** 2, small_grid.y)
    theta = np.outer(np.exp(-0.5 * small_grid.x**2), profile)
    theta[-1, :] = 0.0

    phi, w = solver.t_map(theta)
    assert np.allclose(w, -theta[:, -1] / constant_flow.psi_y_top), "w should be -theta|top / psi_y(1)"
    recovered = solver.t_map_inverse(phi, w)
    assert np.allclose(recovered, theta, atol=1e-12), f"inverse map error {np.max(np.abs(recovered - theta)):.3e}"


def test_inadmissible_start_is_rejected(irrotational, irrotational_flow, small_grid):
    solver = StripSolver(small_grid, irrotational, irrotational_flow)
    state = WaveState(grid=small_grid, phi=np.zeros((21, 11)), w=np.full(21, 10.0), alpha=0.9)
    with pytest.raises(AdmissibilityError):
        solver.newton(state)


def test_iteration_budget_is_enforced(irrotational, irrotational_flow, irrotational_seed):
    solver = StripSolver(irrotational_seed.grid, irrotational, irrotational_flow)
    with pytest.raises(NonConvergenceError) as info:
        solver.newton(irrotational_seed, tol=1e-13, max_iter=1)
    assert info.value.exit_code == 4, f"numeric errors exit with 4, got {info.value.exit_code}"
