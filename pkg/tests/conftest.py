"""
Shared fixtures: the three reference vorticities, their background flows and critical
eigenpairs, a small probing grid and one converged irrotational wave.
"""

import pytest

from vorwave.cm_reduction import compute_coefficients, small_amplitude_seed
from vorwave.laminar import solve_laminar
from vorwave.strip_solver import Grid, StripSolver
from vorwave.sturm import principal_eigen
from vorwave.vorticity import VorticitySpec

WAVE_EPSILON = 0.02


@pytest.fixture(scope="session")
def irrotational():
    return VorticitySpec(kind="constant", value=0.0)


@pytest.fixture(scope="session")
def constant_vorticity():
    return VorticitySpec(kind="constant", value=-1.0)


@pytest.fixture(scope="session")
def affine():
    return VorticitySpec(kind="affine", slope=1.0)


@pytest.fixture(scope="session")
def irrotational_flow(irrotational):
    return solve_laminar(irrotational)


@pytest.fixture(scope="session")
def constant_flow(constant_vorticity):
    return solve_laminar(constant_vorticity)


@pytest.fixture(scope="session")
def affine_flow(affine):
    return solve_laminar(affine)


@pytest.fixture(scope="session")
def irrotational_eigen(irrotational, irrotational_flow):
    return principal_eigen(irrotational_flow, irrotational, irrotational_flow.alpha_tilde_cr)


@pytest.fixture(scope="session")
def irrotational_cm(irrotational, irrotational_flow, irrotational_eigen):
    return compute_coefficients(irrotational_flow, irrotational_eigen, irrotational)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(L=10.0, nx=21, ny=11)


@pytest.fixture(scope="session")
def wave_grid():
    return Grid(L=40.0, nx=201, ny=41)


@pytest.fixture(scope="session")
def irrotational_seed(irrotational, irrotational_flow, irrotational_eigen, irrotational_cm, wave_grid):
    return small_amplitude_seed(
        irrotational_flow, irrotational_eigen, irrotational_cm, WAVE_EPSILON, wave_grid, irrotational
    )


@pytest.fixture(scope="session")
def irrotational_wave(irrotational, irrotational_flow, irrotational_seed):
    solver = StripSolver(irrotational_seed.grid, irrotational, irrotational_flow)
    wave = solver.newton(irrotational_seed, tol=1e-10, max_iter=25)
    assert wave.crest > 0.5 * irrotational_seed.crest, f"Newton left the wave branch: crest {wave.crest}"
    return wave
