"""
Shared fixtures: the bundled worked-example scenario, its initial state and
assignment, and the three full runs (computed once per session).
"""

import os

import pytest

from modules.assignment import build_cost_matrix, solve_lbap
from modules.scenario import load_scenario
from modules.sim import Mode, SimConfig, run

ROOT = os.path.dirname(os.path.abspath(__file__))
SCENARIO_DIR = os.path.join(ROOT, "scenarios")
WORKED_PATH = os.path.join(SCENARIO_DIR, "worked_example.json")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running property or sweep test")


@pytest.fixture(scope="session")
def worked_scenario():
    return load_scenario(WORKED_PATH)


@pytest.fixture(scope="session")
def worked_state(worked_scenario):
    return worked_scenario.to_state()


@pytest.fixture(scope="session")
def nu(worked_scenario):
    return worked_scenario.nu


@pytest.fixture(scope="session")
def worked_costs(worked_state, nu):
    return build_cost_matrix(worked_state, nu)


@pytest.fixture(scope="session")
def worked_assignment(worked_costs):
    return solve_lbap(worked_costs)


@pytest.fixture(scope="session")
def default_config():
    return SimConfig(dt=1e-4, capture_eps=1e-3, t_max=100.0)


@pytest.fixture(scope="session")
def nominal_trace(worked_state, nu, default_config):
    return run(worked_state, nu, Mode.NOMINAL, default_config)


@pytest.fixture(scope="session")
def one_dev_trace(worked_state, nu, default_config):
    return run(worked_state, nu, Mode.ONE_DEVIATION, default_config)


@pytest.fixture(scope="session")
def two_dev_trace(worked_state, nu, default_config):
    return run(worked_state, nu, Mode.TWO_DEVIATION, default_config)
