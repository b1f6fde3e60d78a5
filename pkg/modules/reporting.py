"""
Reporting Module

Turns a finished SimTrace into the two run artifacts: a trace table
(trace.csv) and a validated run summary (summary.json). The summary schema
is published through the RunSummary model.
"""

import os
import json
import logging
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from modules.geom import Point2, distance
from modules.sim import SimTrace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "t", "xA1", "yA1", "xA2", "yA2", "xD1", "yD1", "xD2", "yD2", "xB11x", "xB11y", "phase",
]


# =============================================================================
# SUMMARY SCHEMA
# =============================================================================

class EventRecord(BaseModel):
    t: float = Field(description="Game time")
    t_attacker: float = Field(description="Attacker-clock time (nu * t)")
    kind: Literal["defender-captures-attacker", "attacker-intercepts-defender", "attacker-reaches-target"]
    attacker: int = Field(ge=1)
    defender: Optional[int] = Field(default=None, ge=1)
    x: float
    y: float


class FeasibilityFlags(BaseModel):
    defender_win_condition: bool
    fallback: bool = False
    one_deviation_feasible: Optional[bool] = None
    two_deviation_holds: Optional[bool] = None
    two_deviation_grid: Optional[int] = None
    win_after_interception_precheck: Optional[bool] = None
    infeasible_reason: Optional[str] = None


class RunSummary(BaseModel):
    """
    Result of one run. t_f1 and t_f are on the attacker clock (distance an
    attacker covers); the *_game fields are the same instants in game time.
    """
    scenario: str = ""
    mode: Literal["nominal", "one-deviation", "two-deviation"]
    winner: Optional[Literal["attackers", "defenders"]]
    payoff: Optional[float] = Field(default=None, ge=0.0)
    t_f1: Optional[float] = None
    t_f: Optional[float] = None
    t_f1_game: Optional[float] = None
    t_f_game: Optional[float] = None
    psi: List[int]
    critical_pair: Tuple[int, int]
    phi: List[List[float]]
    nu: float = Field(gt=0.0, lt=1.0)
    dt: float = Field(gt=0.0)
    capture_eps: float = Field(gt=0.0)
    flags: FeasibilityFlags
    x_I: Optional[Tuple[float, float]] = None
    events: List[EventRecord] = []
    timed_out: bool = False


def summary_schema() -> Dict:
    return RunSummary.model_json_schema()


# =============================================================================
# PROCESSING
# =============================================================================

def trace_to_frame(trace: SimTrace) -> pd.DataFrame:
    """
    Trace rows as a table with the published column set. xB11 is the
    critical pair's capture point, NaN once that pair has left play.
    """
    records = []
    for row in trace.rows:
        a1, a2 = row.attackers
        d1, d2 = row.defenders
        xb = row.x_b_critical
        records.append([
            row.t,
            a1.x, a1.y, a2.x, a2.y,
            d1.x, d1.y, d2.x, d2.y,
            xb.x if xb is not None else np.nan,
            xb.y if xb is not None else np.nan,
            row.phase,
        ])
    return pd.DataFrame(records, columns=TRACE_COLUMNS)


def build_summary(trace: SimTrace, scenario_name: str = "", timed_out: bool = False) -> RunSummary:
    """
    Collect the summary document for a trace.

    Returns:
        RunSummary, validated on construction
    """
    nu = trace.nu.nu
    assign = trace.assignment
    flags = {k: v for k, v in trace.flags.items() if k in FeasibilityFlags.model_fields}

    events = [
        EventRecord(
            t=e.t,
            t_attacker=nu * e.t,
            kind=e.kind.value,
            attacker=e.attacker + 1,
            defender=e.defender + 1 if e.defender is not None else None,
            x=e.position.x,
            y=e.position.y,
        )
        for e in trace.events
    ]

    summary = RunSummary(
        scenario=scenario_name,
        mode=trace.mode.value,
        winner=trace.winner,
        payoff=trace.payoff,
        t_f1=trace.attacker_clock(trace.phase1_end),
        t_f=trace.attacker_clock(trace.t_f),
        t_f1_game=trace.phase1_end,
        t_f_game=trace.t_f,
        psi=assign.psi_one_based,
        critical_pair=(assign.critical_attacker + 1, assign.critical_defender + 1),
        phi=trace.costs.to_list(),
        nu=nu,
        dt=trace.config.dt,
        capture_eps=trace.config.capture_eps,
        flags=FeasibilityFlags(**flags),
        x_I=trace.plan.point.as_tuple() if trace.plan is not None else None,
        events=events,
        timed_out=timed_out,
    )
    return summary


def payoff_from_frame(frame: pd.DataFrame, target: Point2) -> float:
    """Payoff recomputed from the final trace row"""
    last = frame.iloc[-1]
    return min(
        distance(Point2(float(last["xA1"]), float(last["yA1"])), target),
        distance(Point2(float(last["xA2"]), float(last["yA2"])), target),
    )


# =============================================================================
# ARTIFACTS
# =============================================================================

def write_artifacts(
    trace: SimTrace,
    out_dir: str,
    scenario_name: str = "",
    timed_out: bool = False
) -> Dict[str, str]:
    """
    Write trace.csv and summary.json into out_dir.

    Returns:
        Dictionary with the 'trace' and 'summary' file paths
    """
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    summary_path = os.path.join(out_dir, "summary.json")

    frame = trace_to_frame(trace)
    frame.to_csv(trace_path, index=False, float_format="%.17g")

    summary = build_summary(trace, scenario_name, timed_out)
    with open(summary_path, "w", encoding="utf-8") as f:
        f.write(summary.model_dump_json(indent=2))
        f.write("\n")

    logger.info(f"Wrote {len(frame)} trace rows to {trace_path} and summary to {summary_path}")
    return {"trace": trace_path, "summary": summary_path}


def load_summary(path: str) -> RunSummary:
    with open(path, "r", encoding="utf-8") as f:
        return RunSummary.model_validate(json.load(f))
