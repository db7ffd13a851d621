#!/usr/bin/env python3
"""
storage.py

File formats of the pipeline:

  - WaveState: ``<name>.json`` header plus a payload, either ``<name>.bin`` (little-endian
    float64, phi row by row then w) or ``<name>.csv`` (rows of phi, last row w).
  - Profiles and branch tables: CSV with a header row.
  - Summaries: JSON with numpy values converted to plain Python.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from vorwave.errors import UsageError
from vorwave.strip_solver import Grid, WaveState
from vorwave.vorticity import VorticitySpec, parse_vorticity

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_DTYPE = "<f8"


def to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(data, handle, indent=2, default=to_builtin)
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON in {path}: {exc}") from exc


# -----------------------------------------------------------------------------
# WaveState files
# -----------------------------------------------------------------------------

def _stem(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".json", ".bin", ".csv") else path


def write_state(
    state: WaveState,
    path: Union[str, Path],
    spec: Optional[VorticitySpec] = None,
    payload: Literal["binary", "csv"] = "binary",
) -> Path:
    """
    Write header and payload; returns the header path.

    The binary payload reproduces arrays bit for bit; the CSV payload uses 17 significant
    digits, which also round-trips float64 exactly.
    """
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    grid = state.grid
    data_name = stem.name + (".bin" if payload == "binary" else ".csv")
    header = {
        "format_version": FORMAT_VERSION,
        "L": grid.L,
        "nx": grid.nx,
        "ny": grid.ny,
        "symmetric": grid.symmetric,
        "far_field": grid.far_field,
        "alpha": state.alpha,
        "iterations": state.iterations,
        "residual_norm": state.residual_norm if np.isfinite(state.residual_norm) else None,
        "gamma_spec": spec.model_dump(exclude_none=True) if spec is not None else None,
        "gamma_label": spec.describe() if spec is not None else None,
        "payload": payload,
        "byte_order": "little",
        "dtype": "float64",
        "files": [data_name],
    }
    data_path = stem.parent / data_name
    table = np.vstack([state.phi, state.w[None, :]])
    if payload == "binary":
        np.ascontiguousarray(table, dtype=_DTYPE).tofile(data_path)
    else:
        np.savetxt(data_path, table, delimiter=",", fmt="%.17g")
    return write_json(stem.with_suffix(".json"), header)


def read_state(path: Union[str, Path]) -> Tuple[WaveState, Optional[VorticitySpec]]:
    """
    Read a WaveState written by ``write_state``.

    Raises:
        UsageError: Missing files, unknown format version or a payload of the wrong size.
    """
    stem = _stem(path)
    header = read_json(stem.with_suffix(".json"))
    if header.get("format_version") != FORMAT_VERSION:
        raise UsageError(f"unsupported state format version {header.get('format_version')}")
    grid = Grid(
        L=header["L"], nx=header["nx"], ny=header["ny"], symmetric=header["symmetric"], far_field=header["far_field"]
    )
    data_path = stem.parent / header["files"][0]
    if not data_path.exists():
        raise UsageError(f"state payload not found: {data_path}")
    if header["payload"] == "binary":
        flat = np.fromfile(data_path, dtype=_DTYPE)
    else:
        flat = np.loadtxt(data_path, delimiter=",", ndmin=2).ravel()
    expected = (grid.nx + 1) * grid.ny
    if flat.size != expected:
        raise UsageError(f"state payload has {flat.size} values, expected {expected}")
    table = flat.astype(float).reshape(grid.nx + 1, grid.ny)
    residual_norm = header.get("residual_norm")
    state = WaveState(
        grid=grid,
        phi=table[:-1].copy(),
        w=table[-1].copy(),
        alpha=float(header["alpha"]),
        iterations=int(header.get("iterations", 0)),
        residual_norm=float("nan") if residual_norm is None else float(residual_norm),
    )
    spec = parse_vorticity(header["gamma_spec"]) if header.get("gamma_spec") else None
    return state, spec


# -----------------------------------------------------------------------------
# Tables
# -----------------------------------------------------------------------------

def write_profile_csv(path: Union[str, Path], columns: Sequence[str], values: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(columns):
        raise UsageError(f"profile table needs {len(columns)} columns, got shape {values.shape}")
    np.savetxt(path, values, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    logger.info(f"Wrote {path}")
    return path


def write_table_csv(path: Union[str, Path], rows: Iterable[Dict[str, Any]]) -> Path:
    """Rows of dicts with identical keys, e.g. the branch table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if not rows:
        raise UsageError("refusing to write an empty table")
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"Wrote {path} ({len(rows)} rows)")
    return path


def read_table_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))
