import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from capmdp import Instance, InstanceParams, Scenario, random_instance


def make_instance(seed, n_states, horizon, n_scenarios, c=0.4, eps=0.25, population=1000):
    """Seeded random test instance (unrestricted random-MDP mode)."""
    params = InstanceParams(
        n_scenarios=n_scenarios,
        horizon=horizon,
        capacity_fraction=c,
        noise_radius=eps,
        seed=seed,
    )
    return random_instance(n_states, params, population=population)


@pytest.fixture
def tiny_instance():
    """One non-absorbing state, one decision epoch; everything hand-checkable."""
    return Instance(
        horizon=2,
        states=["s0"],
        population=10,
        initial_distribution=[1.0],
        capacities=[10.0],
        absorbing_reward=0.0,
        scenarios=[
            Scenario(P=[[[0.9], [0.9]]], Q=[[0.1, 0.1]], r=[[5.0, 5.0]], R=[7.0])
        ],
        scenario_probabilities=[1.0],
    )


# One line per acceptance criterion, echoed after the pytest summary so the
# pass/fail verdicts are visible even with output capture on.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def with_capacities(inst, capacities):
    return Instance(
        horizon=inst.horizon,
        states=inst.states,
        population=inst.population,
        initial_distribution=inst.initial_distribution,
        capacities=np.asarray(capacities, dtype=float),
        absorbing_reward=inst.absorbing_reward,
        scenarios=inst.scenarios,
        scenario_probabilities=inst.scenario_probabilities,
    )
