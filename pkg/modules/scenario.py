"""
Scenario Module

Scenario files: initial positions, speed ratio, requested mode and
simulation overrides, stored as JSON.

    {
      "name": "worked example",
      "target": [0.0, 0.0],
      "attacker_positions": [[-0.9, 0.7], [-1.2, 0.4]],
      "defender_positions": [[-1.5, 0.7], [-1.7, 0.3]],
      "nu": "2/3",
      "mode": "nominal",
      "sim": {"dt": 0.0001, "capture_eps": 0.001, "t_max": 100.0}
    }

`nu` may be a number or a fraction string. `mode` and `sim` are optional;
missing simulation fields fall back to the configured defaults.

Files are checked by the ScenarioFile model. Its first error is reported as
a ScenarioParseError (wrong shape or type) or ScenarioValidationError (a
well-formed value that breaks an invariant), named after the offending field.
"""

import json
import logging
from dataclasses import dataclass, replace
from typing import Annotated, Any, Dict, Iterable, Optional, Tuple, Union

from pydantic import (
    AllowInfNan,
    BaseModel,
    ConfigDict,
    Strict,
    StrictStr,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic_core import PydanticCustomError

from modules.config import DEFAULT_CAPTURE_EPS, DEFAULT_DT, DEFAULT_T_MAX, DEGENERACY_TOL
from modules.engagement import SpeedRatio
from modules.errors import ScenarioParseError, ScenarioValidationError, TDGError
from modules.geom import Point2, distance
from modules.sim import Mode, SimConfig
from modules.state import GameState

logger = logging.getLogger(__name__)

# error types that mean "well-formed but invalid"; everything else is a parse error
VALIDATION_ERROR_TYPES = frozenset({"value_error", "finite_number", "greater_than_equal", "positions"})
NESTED_BLOCKS = ("sim", "grid")

Number = Annotated[float, Strict(), AllowInfNan(False)]
Position = Tuple[Number, Number]


@dataclass(frozen=True)
class Scenario:
    target: Point2
    attacker_positions: Tuple[Point2, ...]
    defender_positions: Tuple[Point2, ...]
    nu: SpeedRatio
    mode: Mode = Mode.NOMINAL
    dt: float = DEFAULT_DT
    capture_eps: float = DEFAULT_CAPTURE_EPS
    t_max: float = DEFAULT_T_MAX
    name: str = ""

    def to_state(self) -> GameState:
        return GameState.from_positions(self.target, self.attacker_positions, self.defender_positions)

    def sim_config(self, dt: Optional[float] = None, capture_eps: Optional[float] = None) -> SimConfig:
        """Simulation settings, with CLI-level overrides taking precedence"""
        return SimConfig(
            dt=dt if dt is not None else self.dt,
            capture_eps=capture_eps if capture_eps is not None else self.capture_eps,
            t_max=self.t_max,
        )

    def with_attacker(self, i: int, position: Point2) -> "Scenario":
        positions = list(self.attacker_positions)
        positions[i] = position
        return replace(self, attacker_positions=tuple(positions))

    def with_defender(self, j: int, position: Point2) -> "Scenario":
        positions = list(self.defender_positions)
        positions[j] = position
        return replace(self, defender_positions=tuple(positions))


# =============================================================================
# FILE MODELS
# =============================================================================

def parse_mode(value: Any) -> Mode:
    """Mode.parse for use inside validators; unknown modes are shape errors"""
    try:
        return Mode.parse(value)
    except ValueError as e:
        raise PydanticCustomError("mode", str(e))


class SimSettings(BaseModel):
    """The `sim` block. Unset fields keep the scenario's (or default) values."""
    model_config = ConfigDict(extra="forbid")

    dt: Number = DEFAULT_DT
    capture_eps: Number = DEFAULT_CAPTURE_EPS
    t_max: Number = DEFAULT_T_MAX

    def config(self) -> SimConfig:
        return SimConfig(dt=self.dt, capture_eps=self.capture_eps, t_max=self.t_max)


class ScenarioFile(BaseModel):
    name: str = ""
    target: Position
    attacker_positions: Tuple[Position, Position]
    defender_positions: Tuple[Position, Position]
    nu: Union[Number, StrictStr]
    mode: Mode = Mode.NOMINAL
    sim: Optional[SimSettings] = None

    @field_validator("nu")
    @classmethod
    def _speed_ratio(cls, v: Union[float, str]) -> float:
        return SpeedRatio.parse(v).nu

    @field_validator("mode", mode="before")
    @classmethod
    def _mode(cls, v: Any) -> Mode:
        return parse_mode(v)

    @field_validator("sim")
    @classmethod
    def _step_fits_capture_radius(cls, sim: Optional[SimSettings]) -> Optional[SimSettings]:
        if sim is not None:
            sim.config()
        return sim

    @model_validator(mode="after")
    def _distinct_positions(self) -> "ScenarioFile":
        clash = find_coincident(Point2(*p) for p in self.attacker_positions + self.defender_positions)
        if clash is not None:
            raise PydanticCustomError("positions", "agents coincide at {point}", {"point": str(clash.as_tuple())})
        return self

    def to_scenario(self) -> Scenario:
        sim = self.sim or SimSettings()
        return Scenario(
            target=Point2(*self.target),
            attacker_positions=tuple(Point2(*p) for p in self.attacker_positions),
            defender_positions=tuple(Point2(*p) for p in self.defender_positions),
            nu=SpeedRatio(self.nu),
            mode=self.mode,
            dt=sim.dt,
            capture_eps=sim.capture_eps,
            t_max=sim.t_max,
            name=self.name,
        )


def input_error(exc: ValidationError, root: str) -> TDGError:
    """
    Convert the first error of a model validation into a ScenarioParseError
    or ScenarioValidationError whose `field` names the offending input.
    Fields of the `sim` and `grid` blocks are reported as "sim.dt" etc.
    """
    error = exc.errors()[0]
    names = [p for p in error["loc"] if isinstance(p, str)]
    if not names:
        field = "positions" if error["type"] == "positions" else root
    elif names[0] in NESTED_BLOCKS and len(names) > 1:
        field = f"{names[0]}.{names[1]}"
    else:
        field = names[0]

    cls = ScenarioValidationError if error["type"] in VALIDATION_ERROR_TYPES else ScenarioParseError
    return cls(field, error["msg"])


# =============================================================================
# PARSING
# =============================================================================

def find_coincident(points: Iterable[Point2]) -> Optional[Point2]:
    """First point shared by two entries, or None"""
    points = list(points)
    for k, p in enumerate(points):
        for q in points[k + 1:]:
            if distance(p, q) <= DEGENERACY_TOL:
                return p
    return None


def validate_positions(scenario: Scenario):
    """
    Raises:
        ScenarioValidationError: if two agents share a position
    """
    clash = find_coincident(list(scenario.attacker_positions) + list(scenario.defender_positions))
    if clash is not None:
        raise ScenarioValidationError("positions", f"agents coincide at {clash.as_tuple()}")


def scenario_from_dict(data: Any) -> Scenario:
    """
    Build and validate a Scenario from decoded JSON.

    Raises:
        ScenarioParseError: on missing or malformed fields
        ScenarioValidationError: on well-formed values that violate an invariant
    """
    try:
        return ScenarioFile.model_validate(data).to_scenario()
    except ValidationError as e:
        raise input_error(e, "scenario") from e


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    return {
        "name": scenario.name,
        "target": list(scenario.target.as_tuple()),
        "attacker_positions": [list(p.as_tuple()) for p in scenario.attacker_positions],
        "defender_positions": [list(p.as_tuple()) for p in scenario.defender_positions],
        "nu": scenario.nu.nu,
        "mode": scenario.mode.value,
        "sim": {"dt": scenario.dt, "capture_eps": scenario.capture_eps, "t_max": scenario.t_max},
    }


# =============================================================================
# FILE I/O
# =============================================================================

def load_scenario(path: str) -> Scenario:
    """
    Read a scenario file.

    Raises:
        ScenarioParseError: if the file cannot be read or decoded, or a field is malformed
        ScenarioValidationError: if a field violates an invariant
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioParseError("file", f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioParseError("file", f"invalid JSON in {path}: {e}") from e

    scenario = scenario_from_dict(data)
    logger.info(f"Loaded scenario {scenario.name or path} (nu={scenario.nu.nu:.6g}, mode={scenario.mode.value})")
    return scenario


def save_scenario(scenario: Scenario, path: str):
    """Write a scenario so that load_scenario returns an equal object"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(scenario), f, indent=2)
        f.write("\n")
    logger.info(f"Saved scenario to {path}")
