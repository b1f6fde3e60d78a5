"""
Reproduce Worked Examples
Runs the bundled scenario under nominal, one-deviation and two-deviation play
and compares the outcomes with the published values.
"""

import os
import logging

from modules.config import log_level
from modules.scenario import load_scenario
from modules.sim import Mode, run

SCENARIO = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios", "worked_example.json")

# mode -> (winner, payoff, t_f1 on the attacker clock, x_I)
PUBLISHED = {
    Mode.NOMINAL: ("defenders", 0.0963, None, None),
    Mode.ONE_DEVIATION: ("attackers", 0.0, 0.19, (-1.2362, 0.5877)),
    Mode.TWO_DEVIATION: ("attackers", 0.0, 0.75, (-0.4595, 0.2530)),
}


def fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, tuple):
        return f"({value[0]:.4f}, {value[1]:.4f})"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def reproduce():
    """Run each mode and print published vs simulated values"""
    scenario = load_scenario(SCENARIO)
    state = scenario.to_state()

    for mode, (winner, payoff, t_f1, x_i) in PUBLISHED.items():
        print("\n" + "=" * 70)
        print(f"{mode.value.upper()}")
        print("=" * 70)

        trace = run(state, scenario.nu, mode, scenario.sim_config())
        simulated = {
            "winner": trace.winner,
            "payoff": trace.payoff,
            "t_f1": trace.attacker_clock(trace.phase1_end) if t_f1 is not None else None,
            "x_I": trace.plan.point.as_tuple() if trace.plan is not None else None,
        }
        published = {"winner": winner, "payoff": payoff, "t_f1": t_f1, "x_I": x_i}

        print(f"{'':10} {'published':>20} {'simulated':>20}")
        for key in ("winner", "payoff", "t_f1", "x_I"):
            print(f"{key:10} {fmt(published[key]):>20} {fmt(simulated[key]):>20}")

        if trace.flags.get("fallback"):
            print("\n⚠️  Deviation infeasible, nominal fallback was simulated")


if __name__ == "__main__":
    logging.basicConfig(level=log_level())
    reproduce()
