#!/usr/bin/env python3
"""
cli.py

Command-line interface. Every stage of the pipeline is a subcommand; ``run`` executes them
all from one configuration file:

    laminar -> critical -> eigen -> cm-coeffs -> seed -> solve -> continue -> diagnose

Exit codes: 0 success, 2 usage/config errors, 3 model errors (no laminar flow, degenerate
reduction), 4 numeric failures. On failure an ``error.json`` is written to the output
directory when one is known.
"""

import functools
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import click
import numpy as np

from vorwave.cm_reduction import compute_coefficients, scan_m0, small_amplitude_seed
from vorwave.config import RunConfig, build_run_config, read_config_file
from vorwave.continuation import Branch, extend_branch
from vorwave.diagnostics import diagnose, dimensional_restore, surface_reconstruction
from vorwave.errors import ContinuationStallError, VorwaveError
from vorwave.laminar import profile_table, solve_laminar
from vorwave.settings import apply_thread_cap, configure_logging, load_settings
from vorwave.storage import read_state, to_builtin, write_json, write_profile_csv, write_state, write_table_csv
from vorwave.strip_solver import StripSolver
from vorwave.sturm import principal_eigen
from vorwave.vorticity import VorticitySpec

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)


def _echo_json(data: Dict[str, Any]) -> None:
    click.echo(json.dumps(data, indent=2, default=to_builtin))


def _write_error(exc: VorwaveError, out: Optional[Path]) -> None:
    if out is None:
        return
    try:
        write_json(Path(out) / "error.json", exc.to_dict())
    except OSError:
        logger.error(f"Could not write error.json to {out}", exc_info=True)


def guarded(command):
    """Turn package errors into exit codes and error.json."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except VorwaveError as exc:
            logger.error(f"{type(exc).__name__}: {exc.message}", exc_info=logger.isEnabledFor(logging.DEBUG))
            _write_error(exc, kwargs.get("out") or ctx.obj.get("out"))
            click.echo(json.dumps(exc.to_dict()), err=True)
            ctx.exit(exc.exit_code)

    return wrapper


def _config(ctx: click.Context, vorticity: Optional[Union[str, dict, VorticitySpec]] = None) -> RunConfig:
    """Configuration from --config and --set, with the vorticity optionally replaced."""
    path = ctx.obj.get("config")
    data = read_config_file(path) if path else {}
    if vorticity is not None:
        data["vorticity"] = vorticity
    return build_run_config(data, list(ctx.obj.get("overrides", ())))


def _out_dir(ctx: click.Context, out: Optional[str], config: RunConfig) -> Path:
    directory = Path(out) if out else Path(ctx.obj.get("out") or config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


vorticity_option = click.option(
    "--vorticity", "-g", default=None, help="Vorticity, e.g. constant:-1, affine:1, polynomial:0,0,3 or JSON."
)
out_option = click.option("--out", "-o", default=None, type=click.Path(file_okay=False), help="Output directory.")


# -----------------------------------------------------------------------------
# Group
# -----------------------------------------------------------------------------

@click.group()
@click.option("--config", "-c", "config_path", default=None, help="Run configuration (YAML/JSON file or preset name).")
@click.option("--set", "-s", "overrides", multiple=True, help="Override a config value, e.g. grid.nx=101.")
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR.")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], overrides, log_level: Optional[str]):
    """Steady solitary water waves with vorticity."""
    settings = load_settings()
    configure_logging(log_level or settings.log_level)
    apply_thread_cap(settings)
    ctx.ensure_object(dict)
    ctx.obj.update(config=config_path, overrides=overrides, out=None)


# -----------------------------------------------------------------------------
# Background flow and linear theory
# -----------------------------------------------------------------------------

@main.command()
@vorticity_option
@click.option("--ny", type=int, default=None, help="Output nodes on [0, 1].")
@click.option("--depth", type=float, default=1.0, show_default=True, help="Layer depth (conjugate-depth family).")
@out_option
@click.pass_context
@guarded
def laminar(ctx, vorticity, ny, depth, out):
    """Solve the laminar background flow."""
    config = _config(ctx, vorticity)
    flow = solve_laminar(config.vorticity, ny=ny or config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol, depth=depth)
    summary = flow.summary()
    if out:
        directory = _out_dir(ctx, out, config)
        write_json(directory / "laminar.json", summary)
        write_profile_csv(directory / "laminar_profile.csv", ["y", "psi", "psi_y"], profile_table(flow))
    _echo_json(summary)


@main.command()
@vorticity_option
@click.pass_context
@guarded
def critical(ctx, vorticity):
    """Critical gravity parameter, Robin coefficient and Froude number."""
    config = _config(ctx, vorticity)
    flow = solve_laminar(config.vorticity, ny=config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol)
    summary = flow.summary()
    _echo_json({key: summary[key] for key in ("alpha_cr", "alpha_tilde_cr", "mu", "F_cr")})


@main.command()
@vorticity_option
@click.option("--alpha-tilde", type=float, default=None, help="Robin coefficient (default: critical).")
@click.option("--ny", type=int, default=None, help="Eigen grid nodes.")
@out_option
@click.pass_context
@guarded
def eigen(ctx, vorticity, alpha_tilde, ny, out):
    """Principal Sturm-Liouville eigenpair."""
    config = _config(ctx, vorticity)
    flow = solve_laminar(config.vorticity, ny=config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol)
    value = alpha_tilde if alpha_tilde is not None else (config.alpha_tilde or flow.alpha_tilde_cr)
    eig = principal_eigen(flow, config.vorticity, value, ny=ny or config.tolerances.eigen_ny)
    summary = {"alpha_tilde": eig.alpha_tilde, "nu0": eig.nu0, "norm_l2_sq": eig.norm_l2_sq}
    if out:
        directory = _out_dir(ctx, out, config)
        write_json(directory / "eigen.json", summary)
        write_profile_csv(directory / "eigen_profile.csv", ["y", "phi0"], np.column_stack([eig.y_grid, eig.phi0]))
    _echo_json(summary)


@main.command("cm-coeffs")
@vorticity_option
@out_option
@click.pass_context
@guarded
def cm_coeffs(ctx, vorticity, out):
    """Reduced-ODE coefficients and the wave type."""
    config = _config(ctx, vorticity)
    flow, eig, cm = _linear_theory(config)
    summary = cm.summary()
    if out:
        _write_linear_theory(_out_dir(ctx, out, config), eig, cm)
    _echo_json(summary)


@main.command("scan-m0")
@click.option("--degree", type=int, default=2, show_default=True, help="Polynomial degree of the vorticity family.")
@click.option("--low", type=float, default=-2.0, show_default=True)
@click.option("--high", type=float, default=2.0, show_default=True)
@click.option("--num", type=int, default=5, show_default=True, help="Samples per coefficient.")
@out_option
@click.pass_context
@guarded
def scan_m0_command(ctx, degree, low, high, num, out):
    """Search polynomial vorticities for a positive M0 (depression candidates)."""
    values = np.linspace(low, high, num)
    results = scan_m0(itertools.product(values, repeat=degree + 1))
    candidates = [entry for entry in results if entry["m0"] is not None and entry["m0"] > 0]
    summary = {"evaluated": len(results), "candidates": candidates}
    if out:
        directory = Path(out)
        write_json(directory / "scan_m0.json", {"results": results, **summary})
    _echo_json(summary)


# -----------------------------------------------------------------------------
# Nonlinear stages
# -----------------------------------------------------------------------------

@main.command()
@vorticity_option
@click.option("--epsilon", type=float, default=None, help="alpha_cr - alpha.")
@out_option
@click.pass_context
@guarded
def seed(ctx, vorticity, epsilon, out):
    """Small-amplitude sech^2 seed."""
    config = _config(ctx, vorticity)
    directory = _out_dir(ctx, out, config)
    flow, eig, cm = _linear_theory(config)
    state = small_amplitude_seed(flow, eig, cm, epsilon or config.epsilon, config.grid.to_grid(), config.vorticity)
    write_state(state, directory / "seed", config.vorticity, config.payload)
    _echo_json({"alpha": state.alpha, "crest": state.crest, "wave_type": cm.wave_type})


@main.command()
@click.option("--state", "state_path", required=True, type=click.Path(), help="WaveState header (.json).")
@click.option(
    "--check-jacobian", is_flag=True, help="Compare the Jacobian with finite differences (directions drawn from 'seed')."
)
@out_option
@click.pass_context
@guarded
def solve(ctx, state_path, check_jacobian, out):
    """Newton iteration from a stored state at its alpha."""
    initial, spec = read_state(state_path)
    config = _config(ctx, spec)
    directory = _out_dir(ctx, out, config)
    flow = solve_laminar(config.vorticity, ny=config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol)
    solver = StripSolver(initial.grid, config.vorticity, flow)
    state = solver.newton(initial, tol=config.tolerances.newton_tol, max_iter=config.tolerances.max_iter)
    write_state(state, directory / "solution", config.vorticity, config.payload)
    result = {"alpha": state.alpha, "crest": state.crest, "iterations": state.iterations, "residual": state.residual_norm}
    if check_jacobian:
        result["jacobian_error"] = solver.jacobian_check(state, seed=config.seed)
    _echo_json(result)


@main.command("continue")
@click.option("--seed", "seed_path", required=True, type=click.Path(), help="Converged WaveState header (.json).")
@out_option
@click.pass_context
@guarded
def continue_command(ctx, seed_path, out):
    """Pseudo-arclength continuation from a converged state."""
    start, spec = read_state(seed_path)
    config = _config(ctx, spec)
    directory = _out_dir(ctx, out, config)
    flow = solve_laminar(config.vorticity, ny=config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol)
    branch = _continue(config, start, flow, directory)
    _echo_json({"points": len(branch), "termination": branch.termination.reason})


@main.command("diagnose")
@click.option("--state", "state_path", required=True, type=click.Path(), help="WaveState header (.json).")
@click.option("--wave-type", type=click.Choice(["auto", "elevation", "depression"]), default="auto", show_default=True)
@out_option
@click.pass_context
@guarded
def diagnose_command(ctx, state_path, wave_type, out):
    """Physical diagnostics of a stored state."""
    state, spec = read_state(state_path)
    config = _config(ctx, spec)
    flow = solve_laminar(config.vorticity, ny=config.tolerances.laminar_ny, tol=config.tolerances.bvp_tol)
    if wave_type == "auto":
        wave_type = "elevation" if state.crest >= 0.0 else "depression"
    report = _diagnose(config, state, flow, wave_type, Path(out) if out else None, "diagnostics")
    _echo_json(report)


@main.command()
@out_option
@click.pass_context
def run(ctx, out):
    """Run the whole pipeline from --config."""
    try:
        config = _config(ctx)
    except VorwaveError as exc:
        logger.error(f"{type(exc).__name__}: {exc.message}")
        _write_error(exc, out)
        click.echo(json.dumps(exc.to_dict()), err=True)
        ctx.exit(exc.exit_code)
    if out:
        config = config.model_copy(update={"output_dir": Path(out)})
    ctx.exit(run_pipeline(config))


# -----------------------------------------------------------------------------
# Pipeline
# -----------------------------------------------------------------------------

def _linear_theory(config: RunConfig):
    spec, tol = config.vorticity, config.tolerances
    flow = solve_laminar(spec, ny=tol.laminar_ny, tol=tol.bvp_tol)
    eig = principal_eigen(flow, spec, flow.alpha_tilde_cr, ny=tol.eigen_ny)
    cm = compute_coefficients(flow, eig, spec)
    return flow, eig, cm


def _write_linear_theory(directory: Path, eig, cm) -> None:
    write_json(directory / "cm_coeffs.json", cm.summary())
    write_profile_csv(
        directory / "cm_profiles.csv",
        ["y", "phi0", "theta", "g", "k"],
        np.column_stack([eig.y_grid, eig.phi0, cm.theta, cm.g_profile, cm.k_profile]),
    )


def _write_branch(branch: Branch, directory: Path, config: RunConfig) -> None:
    if not branch.points:
        return
    write_table_csv(directory / "branch.csv", branch.table())
    stride = config.continuation.stride
    for index, point in enumerate(branch.points):
        if index % stride == 0 or index == len(branch) - 1:
            write_state(point.state, directory / "branch" / f"point_{index:04d}", config.vorticity, config.payload)
    termination = branch.termination
    write_json(
        directory / "branch.json",
        {"points": len(branch), "termination": termination.__dict__ if termination else None},
    )


def _continue(config: RunConfig, start, flow, directory: Path) -> Branch:
    try:
        branch = extend_branch(
            start, config.vorticity, flow, config.continuation, tol=config.tolerances.newton_tol
        )
    except ContinuationStallError as exc:
        if exc.branch is not None:
            _write_branch(exc.branch, directory, config)
        raise
    _write_branch(branch, directory, config)
    return branch


def _diagnose(config: RunConfig, state, flow, wave_type: str, directory: Optional[Path], name: str) -> Dict[str, Any]:
    report = diagnose(state, flow, config.vorticity, wave_type, stride=config.diagnostics.flow_force_stride)
    data = report.model_dump()
    data["dimensional"] = {
        key: value
        for key, value in dimensional_restore(state, flow, config.diagnostics.gravity, config.diagnostics.depth).items()
        if key != "surface"
    }
    if directory is not None:
        write_json(directory / f"{name}.json", data)
        curve = surface_reconstruction(state, flow)
        write_profile_csv(directory / f"{name}_surface.csv", ["xi", "eta"], curve.polyline())
    return data


def run_pipeline(config: RunConfig) -> int:
    """
    Execute every stage and write all artifacts to ``config.output_dir``.

    Returns:
        int: Process exit code (0 on success, the error's exit code otherwise).
    """
    directory = Path(config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    spec, tol = config.vorticity, config.tolerances
    write_json(directory / "config.json", config.model_dump(mode="json"))
    try:
        flow = solve_laminar(spec, ny=tol.laminar_ny, tol=tol.bvp_tol)
        write_json(directory / "laminar.json", flow.summary())
        write_profile_csv(directory / "laminar_profile.csv", ["y", "psi", "psi_y"], profile_table(flow))
        write_json(
            directory / "critical.json",
            {"alpha_cr": flow.alpha_cr, "alpha_tilde_cr": flow.alpha_tilde_cr, "mu": flow.mu},
        )

        eig = principal_eigen(flow, spec, flow.alpha_tilde_cr, ny=tol.eigen_ny)
        eigen_summary = {"alpha_tilde": eig.alpha_tilde, "nu0": eig.nu0, "norm_l2_sq": eig.norm_l2_sq}
        if config.alpha_tilde is not None:
            requested = principal_eigen(flow, spec, config.alpha_tilde, ny=tol.eigen_ny)
            eigen_summary["requested"] = {"alpha_tilde": requested.alpha_tilde, "nu0": requested.nu0}
        write_json(directory / "eigen.json", eigen_summary)

        cm = compute_coefficients(flow, eig, spec)
        _write_linear_theory(directory, eig, cm)

        grid = config.grid.to_grid()
        seed_state = small_amplitude_seed(flow, eig, cm, config.epsilon, grid, spec)
        write_state(seed_state, directory / "seed", spec, config.payload)

        solver = StripSolver(grid, spec, flow)
        solution = solver.newton(seed_state, tol=tol.newton_tol, max_iter=tol.max_iter)
        write_state(solution, directory / "solution", spec, config.payload)

        branch = _continue(config, solution, flow, directory)
        _diagnose(config, solution, flow, cm.wave_type, directory, "diagnostics")
        _diagnose(config, branch.points[-1].state, flow, cm.wave_type, directory, "diagnostics_branch_end")
    except VorwaveError as exc:
        logger.error(f"Pipeline failed: {type(exc).__name__}: {exc.message}", exc_info=logger.isEnabledFor(logging.DEBUG))
        _write_error(exc, directory)
        return exc.exit_code
    logger.info(f"Pipeline finished; artifacts in {directory}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
