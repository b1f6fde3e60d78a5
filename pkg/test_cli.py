"""
Scenario files, run artifacts, sweeps and the command line.
"""

import json
import os
from dataclasses import replace

import pandas as pd
import pytest
from pydantic import ValidationError

from app import EXIT_BAD_INPUT, EXIT_FALLBACK, EXIT_OK, EXIT_TIMEOUT, main
from conftest import SCENARIO_DIR, WORKED_PATH
from modules.errors import ScenarioParseError, ScenarioValidationError
from modules.geom import Point2
from modules.reporting import TRACE_COLUMNS, RunSummary, load_summary, payoff_from_frame
from modules.scenario import load_scenario, save_scenario, scenario_from_dict, scenario_to_dict
from modules.sim import Mode
from modules.sweep import (
    Grid,
    load_sweep_spec,
    payoff_improvement_violations,
    run_sweep,
    sweep_spec_from_dict,
)


def _scenario_dict(**overrides):
    data = {
        "name": "test",
        "target": [0.0, 0.0],
        "attacker_positions": [[-0.9, 0.7], [-1.2, 0.4]],
        "defender_positions": [[-1.5, 0.7], [-1.7, 0.3]],
        "nu": "2/3",
        "mode": "nominal",
        "sim": {"dt": 0.0005, "capture_eps": 0.001, "t_max": 100.0},
    }
    data.update(overrides)
    return data


def _write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _run_cli(tmp_path, scenario_path, *extra):
    out_dir = str(tmp_path / "out")
    code = main(["run", "--scenario", scenario_path, "--out-dir", out_dir, *extra])
    return code, out_dir


def _sweep_spec(nx=2, ny=2, modes=("nominal",), span=0.01):
    return sweep_spec_from_dict({
        "base": _scenario_dict(),
        "vary": "A2",
        "grid": {"x_min": -1.2 - span, "x_max": -1.2 + span, "y_min": 0.4 - span, "y_max": 0.4 + span,
                 "nx": nx, "ny": ny},
        "modes": list(modes),
        "sim": {"dt": 0.0005, "capture_eps": 0.001},
    })


# =============================================================================
# SCENARIO FILES
# =============================================================================

def test_bundled_scenarios_load():
    for name in os.listdir(SCENARIO_DIR):
        if name.startswith("example_") or name == "worked_example.json":
            scenario = load_scenario(os.path.join(SCENARIO_DIR, name))
            assert scenario.nu.nu == pytest.approx(2 / 3)


def test_scenario_save_and_load(tmp_path, worked_scenario):
    path = str(tmp_path / "copy.json")
    save_scenario(worked_scenario, path)
    assert load_scenario(path) == worked_scenario


def test_scenario_defaults():
    data = _scenario_dict()
    del data["sim"]
    del data["mode"]
    scenario = scenario_from_dict(data)
    assert scenario.mode == Mode.NOMINAL
    assert scenario.dt == 1e-4
    assert scenario_to_dict(scenario)["nu"] == pytest.approx(2 / 3)


@pytest.mark.parametrize("overrides, field, error", [
    ({"nu": 1.2}, "nu", ScenarioValidationError),
    ({"nu": True}, "nu", ScenarioParseError),
    ({"defender_positions": [[-0.9, 0.7], [-1.7, 0.3]]}, "positions", ScenarioValidationError),
    ({"attacker_positions": [[-0.9, 0.7]]}, "attacker_positions", ScenarioParseError),
    ({"target": [0.0, "x"]}, "target", ScenarioParseError),
    ({"target": [float("inf"), 0.0]}, "target", ScenarioValidationError),
    ({"nu": "abc"}, "nu", ScenarioValidationError),
    ({"sim": {"dt": "x"}}, "sim.dt", ScenarioParseError),
    ({"mode": "sideways"}, "mode", ScenarioParseError),
    ({"sim": {"dt": 0.01, "capture_eps": 0.001}}, "sim", ScenarioValidationError),
])
def test_scenario_errors_name_the_field(overrides, field, error):
    with pytest.raises(error) as info:
        scenario_from_dict(_scenario_dict(**overrides))
    assert info.value.field == field


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(str(tmp_path / "nope.json"))
    assert info.value.field == "file"


# =============================================================================
# RUN COMMAND
# =============================================================================

@pytest.mark.parametrize("mode, winner", [
    ("nominal", "defenders"),
    ("one-dev", "attackers"),
    ("two-dev", "attackers"),
])
def test_run_writes_artifacts(tmp_path, mode, winner):
    code, out_dir = _run_cli(tmp_path, WORKED_PATH, "--mode", mode, "--dt", "5e-4")
    assert code == EXIT_OK

    summary = load_summary(os.path.join(out_dir, "summary.json"))
    assert summary.winner == winner
    assert summary.mode == Mode.parse(mode).value
    assert summary.psi == [1, 2]
    assert summary.critical_pair == (1, 1)
    assert summary.dt == 5e-4
    assert not summary.flags.fallback

    frame = pd.read_csv(os.path.join(out_dir, "trace.csv"))
    assert list(frame.columns) == TRACE_COLUMNS
    assert payoff_from_frame(frame, Point2(0.0, 0.0)) == pytest.approx(summary.payoff, abs=1e-9)
    assert frame["t"].is_monotonic_increasing


def test_run_one_deviation_summary(tmp_path):
    code, out_dir = _run_cli(tmp_path, WORKED_PATH, "--mode", "one-deviation", "--dt", "5e-4")
    assert code == EXIT_OK

    with open(os.path.join(out_dir, "summary.json")) as f:
        raw = json.load(f)
    summary = RunSummary.model_validate(raw)
    assert summary.payoff == 0.0
    assert summary.t_f1 == pytest.approx(0.19, abs=1e-2)
    assert summary.t_f1 == pytest.approx(summary.nu * summary.t_f1_game)
    assert summary.x_I == pytest.approx((-1.2362, 0.5877), abs=5e-3)
    assert summary.flags.one_deviation_feasible
    assert summary.events[0].kind == "attacker-intercepts-defender"
    assert (summary.events[0].attacker, summary.events[0].defender) == (2, 1)


def test_run_reports_fallback(tmp_path):
    path = _write(tmp_path, _scenario_dict(attacker_positions=[[-0.9, 0.7], [2.0, -2.0]], mode="one-deviation"))
    code, out_dir = _run_cli(tmp_path, path)
    assert code == EXIT_FALLBACK
    summary = load_summary(os.path.join(out_dir, "summary.json"))
    assert summary.flags.fallback
    assert summary.x_I is None


def test_run_reports_timeout(tmp_path):
    path = _write(tmp_path, _scenario_dict(sim={"dt": 0.001, "capture_eps": 0.002, "t_max": 0.5}))
    code, out_dir = _run_cli(tmp_path, path)
    assert code == EXIT_TIMEOUT
    summary = load_summary(os.path.join(out_dir, "summary.json"))
    assert summary.timed_out
    assert summary.winner is None


def test_run_rejects_bad_input(tmp_path):
    path = _write(tmp_path, _scenario_dict(nu=1.5))
    code, out_dir = _run_cli(tmp_path, path)
    assert code == EXIT_BAD_INPUT
    assert not os.path.exists(os.path.join(out_dir, "summary.json"))

    code, _ = _run_cli(tmp_path, str(tmp_path / "missing.json"))
    assert code == EXIT_BAD_INPUT


def test_run_rejects_bad_step_override(tmp_path):
    code, _ = _run_cli(tmp_path, WORKED_PATH, "--dt", "0.01")
    assert code == EXIT_BAD_INPUT


# =============================================================================
# CHECK AND SCHEMA COMMANDS
# =============================================================================

def test_check_prints_verdicts(capsys):
    assert main(["check", "--scenario", WORKED_PATH, "--grid", "16"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Assignment psi*: [1, 2]" in out
    assert "A1 - D1" in out
    assert "One deviation: feasible" in out
    assert "Two deviations: holds" in out


def test_schema_lists_summary_fields(capsys):
    assert main(["schema"]) == EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    for key in ("winner", "payoff", "t_f1", "psi", "flags", "x_I"):
        assert key in schema["properties"]


# =============================================================================
# SWEEPS
# =============================================================================

def _sweep_dict(**overrides):
    data = {
        "base": _scenario_dict(),
        "vary": "A2",
        "grid": {"x_min": -1.21, "x_max": -1.19, "y_min": 0.39, "y_max": 0.41, "nx": 2, "ny": 2},
        "modes": ["nominal"],
        "sim": {"dt": 0.0005, "capture_eps": 0.001},
    }
    data.update(overrides)
    return data


def test_sweep_spec_normalizes_input():
    spec = sweep_spec_from_dict(_sweep_dict(vary=" a2 ", modes=["one-dev", "NOMINAL"]))
    assert spec.vary == "A2"
    assert spec.modes == (Mode.ONE_DEVIATION, Mode.NOMINAL)
    assert spec.base.dt == 0.0005
    assert spec.base.t_max == 100.0

    data = _sweep_dict()
    del data["modes"]
    assert sweep_spec_from_dict(data).modes == (Mode.NOMINAL,)


@pytest.mark.parametrize("overrides, field, error", [
    ({"vary": "B1"}, "vary", ScenarioParseError),
    ({"sim": {"dt": "x"}}, "sim.dt", ScenarioParseError),
    ({"sim": {"steps": 10}}, "sim.steps", ScenarioParseError),
    ({"sim": {"dt": 0.01}}, "sim", ScenarioValidationError),
    ({"grid": {"x_min": -1.21, "x_max": -1.19, "y_min": 0.39, "y_max": 0.41, "nx": 1, "ny": 2}},
     "grid.nx", ScenarioValidationError),
    ({"grid": {"x_min": -1.19, "x_max": -1.21, "y_min": 0.39, "y_max": 0.41, "nx": 2, "ny": 2}},
     "grid", ScenarioValidationError),
    ({"grid": {"x_min": -1.21, "x_max": -1.19, "y_min": 0.39, "y_max": 0.41, "nx": 2}}, "grid.ny", ScenarioParseError),
    ({"modes": []}, "modes", ScenarioParseError),
    ({"modes": ["sideways"]}, "modes", ScenarioParseError),
    ({"base": 3}, "base", ScenarioParseError),
    ({"base": _scenario_dict(nu=1.5)}, "nu", ScenarioValidationError),
])
def test_sweep_spec_errors_name_the_field(overrides, field, error):
    with pytest.raises(error) as info:
        sweep_spec_from_dict(_sweep_dict(**overrides))
    assert info.value.field == field


def test_grid_model_checks_bounds():
    with pytest.raises(ValidationError):
        Grid(x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0, nx=1, ny=4)
    with pytest.raises(ValidationError):
        Grid(x_min=1.0, x_max=0.0, y_min=0.0, y_max=1.0, nx=4, ny=4)


def test_bundled_sweep_spec_loads():
    spec = load_sweep_spec(os.path.join(SCENARIO_DIR, "sweep_a2.json"))
    assert spec.vary == "A2"
    assert spec.base.dt == 2e-4
    assert len(spec.grid.cells()) == 21 * 21
    assert spec.modes == (Mode.NOMINAL, Mode.ONE_DEVIATION)


def test_sweep_rows_in_grid_order():
    frame = run_sweep(_sweep_spec(), workers=1)
    assert len(frame) == 4
    assert list(zip(frame["iy"], frame["ix"])) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert frame["error"].isna().all()
    assert (frame["winner"] == "defenders").all()


def test_sweep_parallel_matches_serial():
    spec = _sweep_spec()
    pd.testing.assert_frame_equal(run_sweep(spec, workers=2), run_sweep(spec, workers=1))


def test_sweep_records_cell_errors():
    spec = _sweep_spec()
    # a cell on top of D1 is invalid and must not abort the sweep
    spec = replace(spec, vary="A1", grid=Grid(x_min=-1.5, x_max=-1.4, y_min=0.7, y_max=0.8, nx=2, ny=2))
    frame = run_sweep(spec, workers=1)
    assert frame.loc[0, "error"].startswith("ScenarioValidationError")
    assert frame["error"].iloc[1:].isna().all()


def test_sweep_cli(tmp_path):
    spec = {
        "base": os.path.relpath(WORKED_PATH, str(tmp_path)),
        "vary": "A2",
        "grid": {"x_min": -1.21, "x_max": -1.19, "y_min": 0.39, "y_max": 0.41, "nx": 2, "ny": 2},
        "modes": ["nominal"],
        "sim": {"dt": 0.0005},
    }
    spec_path = _write(tmp_path, spec, "sweep.json")
    out_path = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--spec", spec_path, "--out", out_path, "--workers", "1"]) == EXIT_OK
    assert len(pd.read_csv(out_path)) == 4


@pytest.mark.slow
def test_one_deviation_improves_payoff_near_worked_example():
    frame = run_sweep(_sweep_spec(nx=3, ny=3, modes=("nominal", "one-deviation")), workers=1)
    center = frame[(frame["iy"] == 1) & (frame["ix"] == 1) & (frame["mode"] == "one-deviation")].iloc[0]
    assert center["winner"] == "attackers"
    assert payoff_improvement_violations(frame).empty


@pytest.mark.slow
def test_bundled_sweep_never_loses_by_deviating():
    frame = run_sweep(load_sweep_spec(os.path.join(SCENARIO_DIR, "sweep_a2.json")))
    assert len(frame) == 21 * 21 * 2
    assert frame["error"].isna().all()
    assert (frame["one_deviation_feasible"] == True).any()  # noqa: E712
    assert payoff_improvement_violations(frame).empty
