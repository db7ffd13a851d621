import json

import numpy as np
import pytest

from vorwave.config import build_run_config, load_run_config, parse_overrides, recursive_merge
from vorwave.errors import UsageError
from vorwave.settings import Settings
from vorwave.storage import read_json, read_state, read_table_csv, write_json, write_state, write_table_csv
from vorwave.strip_solver import Grid, WaveState


def test_preset_by_name():
    config = load_run_config("irrotational")

    assert config.vorticity.kind == "constant" and config.vorticity.value == 0.0
    assert config.grid.nx == 201 and config.grid.L == 40.0
    assert config.continuation.max_steps == 60
    assert config.tolerances.eigen_ny == 2049, "unset sections keep their defaults"


def test_overrides_are_typed_and_nested():
    config = load_run_config(
        "constant_vorticity",
        ["grid.nx=101", "continuation.thresholds.alpha=0.01", "payload=csv", "continuation.check_nodal=false"],
    )
    assert config.grid.nx == 101
    assert config.grid.ny == 41, "sibling keys survive a nested override"
    assert config.continuation.thresholds.alpha == 0.01
    assert config.continuation.check_nodal is False
    assert config.payload == "csv"


def test_config_file_in_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"vorticity": "affine:1", "epsilon": 0.01}))
    config = load_run_config(path)
    assert config.vorticity.slope == 1.0 and config.epsilon == 0.01


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"vorticity": "constant:0", "continuation": {"step0": 1.0}},
        {"vorticity": "constant:0", "grid": {"L": 5.0}},
        {"vorticity": "constant:0", "unknown_section": 1},
        {"vorticity": "constant:0", "epsilon": -0.1},
    ],
)
def test_invalid_configurations(data):
    with pytest.raises(UsageError) as info:
        build_run_config(data)
    assert info.value.exit_code == 2, f"expected exit code 2, got {info.value.exit_code}"


def test_missing_config_file():
    with pytest.raises(UsageError):
        load_run_config("no_such_preset")


def test_malformed_override():
    with pytest.raises(UsageError):
        parse_overrides(["gridnx"])
    with pytest.raises(UsageError):
        parse_overrides(["grid=1", "grid.nx=3"])


def test_recursive_merge_leaves_inputs_alone():
    default = {"grid": {"nx": 201, "ny": 41}, "epsilon": 0.02}
    merged = recursive_merge(default, {"grid": {"nx": 101}})

    assert merged == {"grid": {"nx": 101, "ny": 41}, "epsilon": 0.02}
    assert default["grid"]["nx"] == 201, "merge must not mutate the defaults"
    assert recursive_merge(default, None) == default


def _sample_state():
    grid = Grid(L=10.0, nx=21, ny=11)
    rng = np.random.default_rng(3)
    return WaveState(
        grid=grid, phi=rng.standard_normal((21, 11)), w=rng.standard_normal(21), alpha=0.87, iterations=4, residual_norm=3e-11
    )


@pytest.mark.parametrize("payload", ["binary", "csv"])
def test_state_files_reproduce_arrays(tmp_path, constant_vorticity, payload):
    state = _sample_state()
    header = write_state(state, tmp_path / "wave", constant_vorticity, payload)
    loaded, spec = read_state(header)

    assert np.array_equal(loaded.phi, state.phi) and np.array_equal(loaded.w, state.w), "arrays must be bit-identical"
    assert loaded.grid == state.grid
    assert loaded.alpha == state.alpha and loaded.iterations == 4
    assert spec.model_dump() == constant_vorticity.model_dump()

    data = read_json(header)
    assert data["format_version"] == 1 and data["payload"] == payload
    assert data["gamma_label"] == "constant:-1"


def test_truncated_payload_is_rejected(tmp_path):
    header = write_state(_sample_state(), tmp_path / "wave")
    payload = tmp_path / "wave.bin"
    payload.write_bytes(payload.read_bytes()[:-8])
    with pytest.raises(UsageError):
        read_state(header)


def test_tables_and_json(tmp_path):
    rows = [{"index": 0, "alpha": 0.97, "crest": 0.015}, {"index": 1, "alpha": 0.96, "crest": 0.02}]
    write_table_csv(tmp_path / "branch.csv", rows)
    loaded = read_table_csv(tmp_path / "branch.csv")
    assert [float(row["alpha"]) for row in loaded] == [0.97, 0.96]

    write_json(tmp_path / "summary.json", {"values": np.arange(3), "scalar": np.float64(1.5)})
    assert read_json(tmp_path / "summary.json") == {"values": [0, 1, 2], "scalar": 1.5}

    with pytest.raises(UsageError):
        read_json(tmp_path / "missing.json")
    with pytest.raises(UsageError):
        write_table_csv(tmp_path / "empty.csv", [])


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("VORWAVE_THREADS", "2")
    monkeypatch.setenv("VORWAVE_LOG_LEVEL", "debug")
    settings = Settings()

    assert settings.threads == 2
    assert settings.log_level == "DEBUG"
