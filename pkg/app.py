"""
Target-Defense Game Engine - Command Line

Runs 2v2 target-defense scenarios, checks deviation feasibility and sweeps
initial positions to map win regions.

    python app.py run --scenario scenarios/worked_example.json --mode one-dev --out-dir out/
    python app.py sweep --spec scenarios/sweep_a2.json --out sweep.csv
    python app.py check --scenario scenarios/worked_example.json
    python app.py schema

Exit codes: 0 success, 1 invalid input, 2 deviation infeasible (nominal
fallback was run), 3 game still open at t_max.
"""

import sys
import json
import logging
import argparse
from typing import List, Optional

from modules.assignment import build_cost_matrix, critical_roles, defender_win_condition, solve_lbap
from modules.config import log_level
from modules.deviation import (
    build_feasibility_regions,
    check_two_deviation_condition,
    win_after_interception_precheck,
    one_deviation_candidates,
)
from modules.errors import (
    DegenerateGeometry,
    ScenarioParseError,
    ScenarioValidationError,
    SimulationTimeout,
    TDGError,
)
from modules.reporting import summary_schema, write_artifacts
from modules.scenario import Scenario, load_scenario
from modules.sim import Mode, run
from modules.sweep import load_sweep_spec, payoff_improvement_violations, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_FALLBACK = 2
EXIT_TIMEOUT = 3


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_run(
    scenario: Scenario,
    mode: Optional[str] = None,
    out_dir: str = ".",
    dt: Optional[float] = None,
    capture_eps: Optional[float] = None
) -> int:
    """
    Simulate one game and write trace.csv and summary.json.

    Returns:
        Exit status
    """
    mode = Mode.parse(mode) if mode else scenario.mode
    config = scenario.sim_config(dt=dt, capture_eps=capture_eps)

    try:
        trace = run(scenario.to_state(), scenario.nu, mode, config)
    except SimulationTimeout as e:
        logger.error(str(e))
        if e.trace is not None:
            write_artifacts(e.trace, out_dir, scenario.name, timed_out=True)
        return EXIT_TIMEOUT

    write_artifacts(trace, out_dir, scenario.name)

    print(f"Mode:    {mode.value}")
    print(f"Winner:  {trace.winner}")
    print(f"Payoff:  {trace.payoff:.4f}")
    if trace.phase1_end is not None:
        print(f"t_f1:    {trace.attacker_clock(trace.phase1_end):.4f} (game time {trace.phase1_end:.4f})")
    print(f"t_f:     {trace.attacker_clock(trace.t_f):.4f} (game time {trace.t_f:.4f})")
    if trace.plan is not None:
        print(f"x_I:     ({trace.plan.point.x:.4f}, {trace.plan.point.y:.4f})")

    if trace.flags.get("fallback"):
        logger.warning(f"{mode.value} was infeasible; nominal play was simulated instead")
        return EXIT_FALLBACK
    return EXIT_OK


def cmd_check(scenario: Scenario, grid_n: Optional[int] = None) -> int:
    """Print the cost matrix, assignment and deviation feasibility verdicts"""
    state = scenario.to_state()
    costs = build_cost_matrix(state, scenario.nu)
    assign = solve_lbap(costs)
    roles = critical_roles(assign)

    print("=" * 60)
    print(f"SCENARIO {scenario.name or ''}".rstrip())
    print("=" * 60)
    print("\nPair costs phi[i][j] (attacker i, defender j):")
    for i, row in enumerate(costs.to_list()):
        print(f"  A{i + 1}: " + "  ".join(f"{v:.4f}" for v in row))
    print(f"\nAssignment psi*: {assign.psi_one_based} (bottleneck {assign.value:.4f})")
    print(f"Critical pair:   A{roles.critical_attacker + 1} - D{roles.critical_defender + 1}")
    print(f"Defender-win condition: {defender_win_condition(costs, assign)}")

    candidates = one_deviation_candidates(state, assign, scenario.nu)
    print(f"\nOne deviation: {'feasible' if candidates else 'infeasible'}")
    for p in candidates:
        print(f"  x_I candidate ({p.x:.4f}, {p.y:.4f})")

    try:
        regions = build_feasibility_regions(state, scenario.nu, assign)
        kwargs = {"grid_n": grid_n} if grid_n else {}
        result = check_two_deviation_condition(regions, state, scenario.nu, assign=assign, **kwargs)
        print(f"\nTwo deviations: {'holds' if result else 'fails'} "
              f"(grid {result.grid_n}x{result.grid_n}, {result.samples} samples, {result.failures} failures)")
    except DegenerateGeometry as e:
        print(f"\nTwo deviations: regions unavailable ({e})")

    print(f"Win after interception predicted at t=0: {win_after_interception_precheck(state, assign, scenario.nu)}")
    return EXIT_OK


def cmd_sweep(spec_path: str, out_path: str, workers: Optional[int] = None) -> int:
    spec = load_sweep_spec(spec_path)
    frame = run_sweep(spec, workers=workers)
    frame.to_csv(out_path, index=False)
    logger.info(f"Wrote {len(frame)} sweep rows to {out_path}")

    violations = payoff_improvement_violations(frame)
    if len(violations):
        logger.warning(f"{len(violations)} feasible one-deviation cells did not improve on nominal play")
    return EXIT_OK


def cmd_schema() -> int:
    print(json.dumps(summary_schema(), indent=2))
    return EXIT_OK


# =============================================================================
# ENTRY POINT
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="2v2 target-defense game engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--mode", choices=["nominal", "one-dev", "two-dev", "one-deviation", "two-deviation"])
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--eps", type=float, help="capture radius")
    p_run.add_argument("--out-dir", default=".")

    p_sweep = sub.add_parser("sweep", help="map outcomes over a grid of initial positions")
    p_sweep.add_argument("--spec", required=True)
    p_sweep.add_argument("--out", default="sweep.csv")
    p_sweep.add_argument("--workers", type=int)

    p_check = sub.add_parser("check", help="print assignment and feasibility verdicts")
    p_check.add_argument("--scenario", required=True)
    p_check.add_argument("--grid", type=int, help="two-deviation grid resolution")

    sub.add_parser("schema", help="print the summary.json schema")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=log_level(), format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "run":
            return cmd_run(load_scenario(args.scenario), args.mode, args.out_dir, args.dt, args.eps)
        if args.command == "sweep":
            return cmd_sweep(args.spec, args.out, args.workers)
        if args.command == "check":
            return cmd_check(load_scenario(args.scenario), args.grid)
        return cmd_schema()
    except (ScenarioParseError, ScenarioValidationError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_BAD_INPUT
    except ValueError as e:
        logger.error(f"Invalid option: {e}")
        return EXIT_BAD_INPUT
    except TDGError as e:
        logger.error(f"Cannot evaluate scenario: {e}")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
