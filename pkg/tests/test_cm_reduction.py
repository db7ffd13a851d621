import numpy as np
import pytest

from vorwave.cm_reduction import (
    compatibility_integrals,
    compute_coefficients,
    epsilon_cap,
    homoclinic,
    homoclinic_amplitude,
    reduced_ode,
    scan_m0,
    small_amplitude_seed,
)
from vorwave.errors import DomainError
from vorwave.laminar import solve_laminar
from vorwave.strip_solver import StripSolver
from vorwave.sturm import potential, principal_eigen
from vorwave.vorticity import VorticitySpec


def _closed_form(gamma):
    """Reduction coefficients of constant vorticity, input value -gamma."""
    return {
        "m0": -2.0 * (gamma**2 + 12.0) / (2.0 + gamma) ** 3,
        "f101": 12.0 / (2.0 + gamma) ** 2,
        "f200": 6.0 * (gamma**2 + 12.0) / (2.0 + gamma) ** 3,
    }


@pytest.mark.parametrize("gamma", [-1.0, 0.0, 1.0])
def test_constant_vorticity_coefficients(gamma):
    spec = VorticitySpec(kind="constant", value=-gamma)
    flow = solve_laminar(spec)
    eig = principal_eigen(flow, spec, flow.alpha_tilde_cr)
    cm = compute_coefficients(flow, eig, spec)
    expected = _closed_form(gamma)

    for name, value in expected.items():
        computed = getattr(cm, name)
        assert computed == pytest.approx(value, rel=1e-5), f"{name}={computed}, expected {value} for gamma={gamma}"
    assert cm.wave_type == "elevation", "constant vorticity gives elevation waves"


def test_irrotational_coefficients(irrotational_cm):
    assert irrotational_cm.c0 == pytest.approx(-3.0, rel=1e-9)
    assert irrotational_cm.m0 == pytest.approx(-3.0, rel=1e-5)
    assert irrotational_cm.f101 == pytest.approx(3.0, rel=1e-5)
    assert irrotational_cm.f200 == pytest.approx(9.0, rel=1e-5)
    assert set(irrotational_cm.summary()) == {"c0", "m0", "b1", "b2", "f101", "f200", "wave_type"}


def test_compatibility_holds(irrotational_flow, irrotational_eigen, irrotational_cm):
    g_gap, k_gap = compatibility_integrals(irrotational_flow, irrotational_eigen, irrotational_cm)
    assert abs(g_gap) < 1e-12 and abs(k_gap) < 1e-12, f"compatibility gaps {g_gap:.3e}, {k_gap:.3e}"


def test_correction_profiles_solve_their_problems(constant_vorticity, constant_flow):
    eig = principal_eigen(constant_flow, constant_vorticity, constant_flow.alpha_tilde_cr, ny=257)
    cm = compute_coefficients(constant_flow, eig, constant_vorticity)
    y, h = eig.y_grid, eig.y_grid[1] - eig.y_grid[0]
    q = potential(constant_flow, constant_vorticity, y)

    def operator(u):
        return -(u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2 - q[1:-1] * u[1:-1]

    # Step 1: interior equations
    g_defect = operator(cm.g_profile) - cm.b1 * eig.phi0[1:-1]
    k_defect = operator(cm.k_profile) + (cm.theta - cm.b2 * eig.phi0)[1:-1]
    assert np.max(np.abs(g_defect)) < 1e-8, f"g residual {np.max(np.abs(g_defect)):.3e}"
    assert np.max(np.abs(k_defect)) < 1e-8, f"k residual {np.max(np.abs(k_defect)):.3e}"

    # Step 2: bed condition and orthogonality gauge
    assert cm.g_profile[0] == 0.0 and cm.k_profile[0] == 0.0
    assert abs(eig.inner(cm.g_profile, eig.phi0)) < 1e-10
    assert abs(eig.inner(cm.k_profile, eig.phi0)) < 1e-10


def test_critical_eigenpair_is_required(irrotational, irrotational_flow):
    eig = principal_eigen(irrotational_flow, irrotational, 0.5, ny=129)
    with pytest.raises(DomainError):
        compute_coefficients(irrotational_flow, eig, irrotational)


def test_homoclinic_solves_reduced_ode(irrotational_cm):
    epsilon = 0.05
    x = np.linspace(-20.0, 20.0, 4001)
    dx = x[1] - x[0]
    q = homoclinic(x, epsilon, irrotational_cm)

    q_xx = (q[2:] - 2.0 * q[1:-1] + q[:-2]) / dx**2
    _, rhs = reduced_ode(q[1:-1], np.gradient(q, dx)[1:-1], epsilon, irrotational_cm)
    defect = np.max(np.abs(q_xx - rhs))
    assert defect < 1e-3 * np.max(np.abs(q_xx)), f"homoclinic defect {defect:.3e}"
    assert q[2000] == pytest.approx(-0.05, rel=1e-5), "amplitude should be -3 eps f101 / f200"


def test_seed_amplitude(irrotational, irrotational_flow, irrotational_eigen, irrotational_cm, wave_grid):
    epsilon = 0.05
    state = small_amplitude_seed(irrotational_flow, irrotational_eigen, irrotational_cm, epsilon, wave_grid, irrotational)
    q = homoclinic(wave_grid.x, epsilon, irrotational_cm)
    amplitude = -homoclinic_amplitude(epsilon, irrotational_cm)

    # Step 1: -q / psi_y(1), shifted so the seed vanishes at x = L
    assert amplitude == pytest.approx(epsilon, rel=1e-5), "irrotational crest is eps at leading order"
    assert state.crest == pytest.approx((amplitude + q[-1]) / irrotational_flow.psi_y_top, rel=1e-10)
    assert state.crest == pytest.approx(epsilon, rel=1e-5)
    assert state.w[-1] == pytest.approx(0.0, abs=1e-15)

    # Step 2: alpha and shape
    assert state.alpha == pytest.approx(irrotational_flow.alpha_cr - epsilon)
    assert np.all(np.diff(state.w) <= 0.0), "seed surface should decrease away from the crest"


def test_constant_vorticity_seed_amplitude(constant_vorticity, constant_flow):
    # gamma = 1: crest -q(0) / psi_y(1) = 12 eps / (gamma^2 + 12)
    eig = principal_eigen(constant_flow, constant_vorticity, constant_flow.alpha_tilde_cr, ny=513)
    cm = compute_coefficients(constant_flow, eig, constant_vorticity)
    epsilon = 0.02

    crest = -homoclinic_amplitude(epsilon, cm) / constant_flow.psi_y_top
    assert crest == pytest.approx(12.0 * epsilon / 13.0, rel=1e-4), f"crest {crest} for eps={epsilon}"


def test_seed_residual_is_second_order(irrotational, irrotational_flow, irrotational_eigen, irrotational_cm, wave_grid):
    solver = StripSolver(wave_grid, irrotational, irrotational_flow)
    epsilons = (0.04, 0.02, 0.01)
    norms = []
    for epsilon in epsilons:
        seed = small_amplitude_seed(irrotational_flow, irrotational_eigen, irrotational_cm, epsilon, wave_grid, irrotational)
        norms.append(solver.residual_norm(seed))

    for index in range(len(epsilons) - 1):
        order = np.log2(norms[index] / norms[index + 1])
        assert order >= 1.5, f"seed residual order {order:.2f} between eps={epsilons[index]} and {epsilons[index + 1]} ({norms})"


def test_seed_epsilon_range(irrotational, irrotational_flow, irrotational_eigen, irrotational_cm, wave_grid):
    cap = epsilon_cap(irrotational_cm)
    assert cap == pytest.approx(0.2 / 3.0, rel=1e-5)
    for epsilon in (0.0, -0.01, 1.5 * cap):
        with pytest.raises(DomainError):
            small_amplitude_seed(irrotational_flow, irrotational_eigen, irrotational_cm, epsilon, wave_grid, irrotational)


def test_scan_m0_reports_each_vorticity():
    results = scan_m0([(0.0,), (3.0,)])

    assert len(results) == 2
    assert results[0]["m0"] == pytest.approx(-3.0, rel=1e-4)
    assert results[0]["wave_type"] == "elevation"
    assert results[1]["m0"] is None, "constant 3 has no unidirectional laminar flow"
    assert results[1]["reason"] == "no admissible laminar flow"
