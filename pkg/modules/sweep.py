"""
Sweep Module

Win-region maps: move one agent's initial position over a grid, run each
requested mode per cell, and collect one row per (cell, mode).

A sweep spec is JSON:

    {
      "base": "worked_example.json",
      "vary": "A2",
      "grid": {"x_min": -1.3, "x_max": -1.1, "y_min": 0.3, "y_max": 0.5, "nx": 21, "ny": 21},
      "modes": ["nominal", "one-deviation"],
      "sim": {"dt": 0.0005, "capture_eps": 0.001}
    }

`base` is a scenario path (relative to the spec file) or an inline scenario
object. `sim` overrides the base scenario's simulation settings.
"""

import os
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, ValidationError, field_validator, model_validator

from modules.config import sweep_workers
from modules.errors import ScenarioParseError, ScenarioValidationError, SimulationTimeout, TDGError
from modules.geom import Point2
from modules.scenario import (
    Number,
    Scenario,
    SimSettings,
    input_error,
    load_scenario,
    parse_mode,
    scenario_from_dict,
    scenario_to_dict,
    validate_positions,
)
from modules.sim import Mode, run

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "iy", "ix", "x", "y", "mode", "winner", "payoff", "t_f1", "t_f",
    "defender_win_condition", "fallback", "one_deviation_feasible", "two_deviation_holds", "error",
]

AgentId = Literal["A1", "A2", "D1", "D2"]


# =============================================================================
# TYPES
# =============================================================================

class Grid(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    x_min: Number
    x_max: Number
    y_min: Number
    y_max: Number
    nx: StrictInt = Field(ge=2)
    ny: StrictInt = Field(ge=2)

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "Grid":
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("bounds must satisfy x_min < x_max and y_min < y_max")
        return self

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def cells(self) -> List[Tuple[int, int, float, float]]:
        """(iy, ix, x, y) in row-major order"""
        return [
            (iy, ix, float(x), float(y))
            for iy, y in enumerate(self.ys())
            for ix, x in enumerate(self.xs())
        ]


class SweepFile(BaseModel):
    """A sweep spec as written on disk; `base` is still a path or raw object"""
    base: Union[StrictStr, Dict[str, Any]]
    vary: AgentId
    grid: Grid
    modes: Optional[List[Mode]] = Field(default=None, min_length=1)
    sim: Optional[SimSettings] = None

    @field_validator("vary", mode="before")
    @classmethod
    def _agent_id(cls, v: Any) -> Any:
        return v.strip().upper() if isinstance(v, str) else v

    @field_validator("modes", mode="before")
    @classmethod
    def _modes(cls, v: Any) -> Any:
        return [parse_mode(m) for m in v] if isinstance(v, list) else v


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    vary: str
    grid: Grid
    modes: Tuple[Mode, ...]


# =============================================================================
# SPEC PARSING
# =============================================================================

def sweep_spec_from_dict(data: Any, base_dir: str = ".") -> SweepSpec:
    """
    Raises:
        ScenarioParseError: on missing or malformed fields
        ScenarioValidationError: on invalid grid bounds, simulation settings or base scenario
    """
    try:
        spec = SweepFile.model_validate(data)
    except ValidationError as e:
        raise input_error(e, "spec") from e

    if isinstance(spec.base, str):
        base = load_scenario(os.path.join(base_dir, spec.base))
    else:
        base = scenario_from_dict(spec.base)

    if spec.sim is not None:
        base = replace(base, **spec.sim.model_dump(exclude_unset=True))
    try:
        base.sim_config()
    except ValueError as e:
        raise ScenarioValidationError("sim", str(e)) from e

    modes = tuple(spec.modes) if spec.modes else (base.mode,)
    return SweepSpec(base=base, vary=spec.vary, grid=spec.grid, modes=modes)


def load_sweep_spec(path: str) -> SweepSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioParseError("file", f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioParseError("file", f"invalid JSON in {path}: {e}") from e
    return sweep_spec_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


# =============================================================================
# CELLS
# =============================================================================

def place_agent(base: Scenario, vary: str, position: Point2) -> Scenario:
    index = int(vary[1]) - 1
    if vary[0] == "A":
        return base.with_attacker(index, position)
    return base.with_defender(index, position)


def run_cell(task: Tuple[Dict[str, Any], str, int, int, float, float, str]) -> Dict[str, Any]:
    """
    Run one (cell, mode). Takes plain data so it can cross process
    boundaries; failures become an `error` entry instead of raising.
    """
    base_dict, vary, iy, ix, x, y, mode = task
    row: Dict[str, Any] = {column: None for column in SWEEP_COLUMNS}
    row.update({"iy": iy, "ix": ix, "x": x, "y": y, "mode": mode})

    try:
        scenario = place_agent(scenario_from_dict(base_dict), vary, Point2(x, y))
        validate_positions(scenario)
        trace = run(scenario.to_state(), scenario.nu, mode, scenario.sim_config())
    except SimulationTimeout as e:
        row["error"] = f"timeout: {e}"
        return row
    except (TDGError, ValueError) as e:
        row["error"] = f"{type(e).__name__}: {e}"
        return row

    row.update({
        "winner": trace.winner,
        "payoff": trace.payoff,
        "t_f1": trace.attacker_clock(trace.phase1_end),
        "t_f": trace.attacker_clock(trace.t_f),
        "defender_win_condition": trace.flags.get("defender_win_condition"),
        "fallback": trace.flags.get("fallback"),
        "one_deviation_feasible": trace.flags.get("one_deviation_feasible"),
        "two_deviation_holds": trace.flags.get("two_deviation_holds"),
    })
    return row


def sweep_tasks(spec: SweepSpec) -> List[Tuple]:
    """Row-major cells, modes in spec order within each cell"""
    base_dict = scenario_to_dict(spec.base)
    return [
        (base_dict, spec.vary, iy, ix, x, y, mode.value)
        for iy, ix, x, y in spec.grid.cells()
        for mode in spec.modes
    ]


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> pd.DataFrame:
    """
    Run every (cell, mode) and return the rows in deterministic order.

    Args:
        spec: Parsed sweep spec
        workers: Process count; defaults to TDG_WORKERS or the CPU count.
            With 1 the sweep runs in-process.
    """
    tasks = sweep_tasks(spec)
    workers = workers or sweep_workers()
    logger.info(f"Sweeping {spec.vary} over {spec.grid.nx}x{spec.grid.ny} cells, "
                f"{len(spec.modes)} mode(s), {len(tasks)} runs on {workers} worker(s)")

    if workers == 1:
        rows = [run_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

    failures = sum(1 for r in rows if r["error"])
    if failures:
        logger.warning(f"{failures} of {len(rows)} sweep runs failed; see the error column")

    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def payoff_improvement_violations(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Cells where a feasible one-deviation run failed to beat nominal play.
    Empty when the sweep lacks either mode.
    """
    nominal = frame[(frame["mode"] == Mode.NOMINAL.value) & frame["error"].isna()]
    one_dev = frame[
        (frame["mode"] == Mode.ONE_DEVIATION.value)
        & frame["error"].isna()
        & (frame["one_deviation_feasible"] == True)  # noqa: E712
    ]
    merged = one_dev.merge(nominal, on=["iy", "ix"], suffixes=("_dev", "_nom"))
    return merged[merged["payoff_dev"] >= merged["payoff_nom"]]
