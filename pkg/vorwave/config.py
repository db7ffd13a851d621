#!/usr/bin/env python3
"""
config.py

Run configuration for the full pipeline. A run is described by a YAML (or JSON) file,
optionally patched with dotted ``key=value`` overrides from the command line, and validated
into a RunConfig.
"""

import copy
import json
import logging
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from vorwave.errors import UsageError
from vorwave.strip_solver import Grid
from vorwave.vorticity import VorticitySpec, parse_vorticity

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"


# -----------------------------------------------------------------------------
# Models
# -----------------------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    L: float = 40.0
    nx: int = 201
    ny: int = 41

    @field_validator("L")
    @classmethod
    def long_enough(cls, value):
        if value < 10.0:
            raise ValueError("L must be at least 10")
        return value

    @field_validator("nx", "ny")
    @classmethod
    def enough_nodes(cls, value):
        if value < 5:
            raise ValueError("grids need at least 5 nodes per direction")
        return value

    def to_grid(self) -> Grid:
        return Grid(L=self.L, nx=self.nx, ny=self.ny)


class ToleranceConfig(_Strict):
    bvp_tol: float = 1e-10
    newton_tol: float = 1e-10
    max_iter: int = 25
    laminar_ny: int = 1025
    eigen_ny: int = 2049

    @field_validator("bvp_tol", "newton_tol")
    @classmethod
    def positive(cls, value):
        if value <= 0:
            raise ValueError("tolerances must be positive")
        return value

    @field_validator("max_iter")
    @classmethod
    def at_least_one(cls, value):
        if value < 1:
            raise ValueError("max_iter must be at least 1")
        return value


class MonitorThresholds(_Strict):
    sigma_surface: float = 1e-3
    grad_eta_min: float = 1e-3
    alpha: float = 1e-3
    alpha_gap: float = 1e-6
    grad_eta_max: float = 1e3

    @field_validator("*")
    @classmethod
    def positive(cls, value):
        if value <= 0:
            raise ValueError("monitor thresholds must be positive")
        return value


class ContinuationConfig(_Strict):
    step0: float = 0.01
    step_min: float = 1e-5
    step_max: float = 0.05
    growth: float = 1.3
    fast_iterations: int = 3
    corrector_max_iter: int = 12
    max_steps: int = 100
    stride: int = 10
    weight_crest: float = 1.0
    weight_alpha: float = 1.0
    direction: Literal[-1, 1] = -1
    check_nodal: bool = True
    thresholds: MonitorThresholds = Field(default_factory=MonitorThresholds)

    @model_validator(mode="after")
    def consistent_steps(self):
        if not 0 < self.step_min <= self.step0 <= self.step_max:
            raise ValueError("continuation steps must satisfy 0 < step_min <= step0 <= step_max")
        if self.growth < 1.0:
            raise ValueError("growth factor must be at least 1")
        if self.max_steps < 1 or self.stride < 1:
            raise ValueError("max_steps and stride must be positive")
        if self.weight_crest <= 0 or self.weight_alpha <= 0:
            raise ValueError("arclength weights must be positive")
        return self


class DiagnosticsConfig(_Strict):
    flow_force_stride: int = 5
    gravity: float = 9.81
    depth: float = 1.0

    @field_validator("flow_force_stride")
    @classmethod
    def stride_positive(cls, value):
        if value < 1:
            raise ValueError("flow_force_stride must be at least 1")
        return value


class RunConfig(_Strict):
    vorticity: VorticitySpec
    grid: GridConfig = Field(default_factory=GridConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    continuation: ContinuationConfig = Field(default_factory=ContinuationConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    epsilon: float = 0.02
    alpha_tilde: Optional[float] = None
    seed: int = 0
    output_dir: Path = Path("vorwave-out")
    payload: Literal["binary", "csv"] = "binary"

    @field_validator("vorticity", mode="before")
    @classmethod
    def coerce_vorticity(cls, value):
        if isinstance(value, (str, dict)):
            return parse_vorticity(value)
        return value

    @field_validator("epsilon")
    @classmethod
    def epsilon_positive(cls, value):
        if value <= 0:
            raise ValueError("epsilon must be positive")
        return value


# -----------------------------------------------------------------------------
# Loading and overrides
# -----------------------------------------------------------------------------

def recursive_merge(default: dict, override: Optional[dict]) -> dict:
    """Merge ``override`` into a copy of ``default``; nested dicts merge key by key."""
    result = copy.deepcopy(default)
    for key, value in (override or {}).items():
        if isinstance(result.get(key), dict) and isinstance(value, dict):
            result[key] = recursive_merge(result[key], value)
        else:
            result[key] = value
    return result


def parse_overrides(pairs: Iterable[str]) -> dict:
    """
    Turn ``["grid.nx=101", "continuation.thresholds.alpha=0.01"]`` into a nested dict.
    Values are read as YAML scalars so numbers and booleans keep their type.
    """
    nested: dict = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"override '{pair}' must look like key=value")
        parts = key.strip().split(".")
        value = yaml.safe_load(raw) if raw.strip() else None
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"override '{pair}' conflicts with an earlier scalar override")
        node[parts[-1]] = value
    return nested


def read_config_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.exists():
        candidate = PRESET_DIR / f"{path.name}.yaml"
        if candidate.exists():
            path = candidate
        else:
            raise UsageError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"could not parse config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must contain a mapping")
    logger.info(f"Loaded configuration from {path}")
    return data


def build_run_config(data: dict, overrides: Optional[List[str]] = None) -> RunConfig:
    merged = recursive_merge(data, parse_overrides(overrides or []))
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        logger.error("Run configuration failed validation", exc_info=True)
        raise UsageError(f"invalid run configuration: {exc.error_count()} error(s)", errors=str(exc)) from exc


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[List[str]] = None) -> RunConfig:
    """
    Read a YAML/JSON run file (or a preset name such as ``irrotational``), apply dotted
    overrides and validate.

    Raises:
        UsageError: Missing file, unparsable text or schema violations.
    """
    data = read_config_file(path) if path is not None else {}
    return build_run_config(data, overrides)
