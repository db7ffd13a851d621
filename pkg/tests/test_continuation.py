import numpy as np
import pytest

from vorwave.config import ContinuationConfig, MonitorThresholds
from vorwave.continuation import MAX_STEPS_REASON, REASONS, compute_monitors, extend_branch, triggered
from vorwave.diagnostics import flow_force_profile
from vorwave.errors import DomainError
from vorwave.strip_solver import StripSolver, WaveState


def test_trivial_seed_stops_on_froude_blow_up(irrotational, irrotational_flow, small_grid):
    config = ContinuationConfig(thresholds=MonitorThresholds(alpha=0.1))
    branch = extend_branch(WaveState.trivial(small_grid, 0.05), irrotational, irrotational_flow, config)

    assert len(branch) == 1, "the seed itself should trigger the alpha monitor"
    assert branch.termination.reason == "froude blow-up", f"got '{branch.termination.reason}'"
    assert branch.termination.monitor == "alpha"
    assert np.all(branch.crests == 0.0)


def test_forced_stagnation_trigger(irrotational, irrotational_flow, small_grid):
    config = ContinuationConfig(thresholds=MonitorThresholds(sigma_surface=10.0))
    branch = extend_branch(WaveState.trivial(small_grid, 0.5), irrotational, irrotational_flow, config)

    assert branch.termination.reason == REASONS["sigma_surface"] == "stagnation approach"
    assert branch.termination.value == pytest.approx(irrotational_flow.mu)


def test_monitors_at_laminar_state(irrotational, irrotational_flow, small_grid):
    solver = StripSolver(small_grid, irrotational, irrotational_flow)
    monitors = compute_monitors(solver, WaveState.trivial(small_grid, 0.8))

    assert monitors.sigma_surface == pytest.approx(1.0)
    assert monitors.grad_eta_min == pytest.approx(1.0) and monitors.grad_eta_max == pytest.approx(1.0)
    assert monitors.alpha_gap == pytest.approx(irrotational_flow.alpha_cr - 0.8)
    assert monitors.froude == pytest.approx(np.sqrt(1.0 / 0.8))
    assert triggered(monitors, ContinuationConfig()) is None


def test_unconverged_seed_is_rejected(irrotational, irrotational_flow, irrotational_seed):
    with pytest.raises(DomainError):
        extend_branch(irrotational_seed, irrotational, irrotational_flow)


def test_first_step_moves_up_the_branch(irrotational, irrotational_flow, irrotational_wave):
    config = ContinuationConfig(max_steps=1, step0=0.005, step_max=0.01)
    branch = extend_branch(irrotational_wave, irrotational, irrotational_flow, config)

    assert len(branch) == 2, f"expected the seed plus one step, got {len(branch)} points"
    assert branch.termination.reason == MAX_STEPS_REASON
    assert branch.crests[1] > branch.crests[0], f"crest should grow: {branch.crests}"
    assert branch.alphas[1] < branch.alphas[0], f"alpha should decrease: {branch.alphas}"
    assert branch.points[1].s == pytest.approx(0.005)

    rows = branch.table()
    assert rows[0]["index"] == 0 and rows[1]["alpha"] == branch.alphas[1]
    assert {"sigma_surface", "froude", "crest", "nodal_ok", "iterations"} <= set(rows[0])


@pytest.mark.slow
def test_long_branch(irrotational, irrotational_flow, irrotational_seed, irrotational_wave):
    assert irrotational_seed.alpha == pytest.approx(irrotational_flow.alpha_cr - 0.02), "branch starts at eps = 0.02"
    config = ContinuationConfig(max_steps=60, step0=0.005, step_max=0.01)
    branch = extend_branch(irrotational_wave, irrotational, irrotational_flow, config)

    assert len(branch) >= 50, f"branch stopped after {len(branch)} points: {branch.termination}"
    assert branch.termination.reason in set(REASONS.values()) | {MAX_STEPS_REASON}
    assert np.all(np.diff(branch.crests) > 0.0), "crest should increase monotonically along the branch"
    assert all(point.nodal_ok for point in branch.points), "nodal property should hold on the whole branch"
    assert np.all(branch.alphas < irrotational_flow.alpha_cr)

    # Step 1: flow force stays constant along every tenth wave of the branch
    for point in branch.points[::10]:
        _, values, drift = flow_force_profile(point.state, irrotational_flow, irrotational)
        assert drift <= 1e-3, f"flow-force drift {drift:.3e} at crest {point.state.crest:.4f}"
        assert np.isfinite(values).all()
