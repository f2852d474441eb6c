"""Stochastic-value experiments built on the solvers.

EVSS compares planning on a single scenario (then repairing the resulting
strategy to feasibility and living in the full multi-scenario world) with
solving the full problem.  EVPI is the premium of learning the scenario in
advance: mean wait-and-see optimum minus the here-and-now optimum.  The
value of flexibility is the loss from forcing the strategy to be constant
over time, and the capacity sweep re-solves under a grid of capacity
fractions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Instance, Strategy
from .evaluate import evaluate_strategy
from .exact import SolveResult, solve_exact, solve_exact_stationary
from .padp import solve_padp

DEFAULT_REPAIR_DEPTH = 6


class InfeasibleInstance(Exception):
    pass


class SearchLimitExceeded(Exception):
    pass


def _solve(inst: Instance, solver: str) -> tuple[Strategy, float]:
    if solver == "exact":
        res = solve_exact(inst)
        if res.status != "Optimal":
            raise InfeasibleInstance(f"exact solver returned {res.status}")
        return res.best_strategy, res.best_value
    if solver == "padp":
        res = solve_padp(inst)
        if res.status != "Solved":
            raise InfeasibleInstance("padp solver found no feasible path")
        return res.strategy, res.value
    raise ValueError(f"unknown solver {solver!r}")


def single_scenario_instance(inst: Instance, w: int) -> Instance:
    """The same problem restricted to scenario w (capacities unchanged)."""
    return Instance(
        horizon=inst.horizon,
        states=inst.states,
        population=inst.population,
        initial_distribution=inst.initial_distribution,
        capacities=inst.capacities,
        absorbing_reward=inst.absorbing_reward,
        scenarios=[inst.scenarios[w]],
        scenario_probabilities=np.array([1.0]),
    )


def with_capacity_fraction(inst: Instance, c: float) -> Instance:
    """Copy of the instance with equal per-epoch capacities c * N."""
    return Instance(
        horizon=inst.horizon,
        states=inst.states,
        population=inst.population,
        initial_distribution=inst.initial_distribution,
        capacities=np.full(inst.horizon - 1, c * inst.population),
        absorbing_reward=inst.absorbing_reward,
        scenarios=inst.scenarios,
        scenario_probabilities=inst.scenario_probabilities,
    )


def repair_strategy(
    inst: Instance, target: Strategy, max_distance: int = DEFAULT_REPAIR_DEPTH
) -> tuple[Strategy, int]:
    """Nearest capacity-feasible strategy by Hamming distance to ``target``.

    Iterative deepening over the flip count d = 0, 1, ...: at each depth all
    d-subsets of the (T-1) * |states| action entries are flipped and the
    candidate re-evaluated.  Among minimum-distance feasible strategies the
    one with maximum total reward wins, ties broken lexicographically.
    Beyond ``max_distance`` the search falls back to the exact optimum and
    reports its measured distance.
    """
    T_1, S = target.actions.shape
    entries = list(itertools.product(range(T_1), range(S)))
    cap = min(max_distance, len(entries))
    for d in range(cap + 1):
        best: Optional[tuple[float, tuple, Strategy]] = None
        for flips in itertools.combinations(entries, d):
            cand = np.array(target.actions, dtype=np.int8)
            for t, i in flips:
                cand[t, i] ^= 1
            strat = Strategy(actions=cand)
            res = evaluate_strategy(inst, strat)
            if not res.feasible:
                continue
            key = (-res.total_reward, strat.as_tuple())
            if best is None or key < best[0:2]:
                best = (key[0], key[1], strat)
        if best is not None:
            return best[2], d
    res = solve_exact(inst)
    if res.status == "Infeasible":
        raise InfeasibleInstance("no feasible strategy exists at any distance")
    if res.best_strategy is None:
        raise SearchLimitExceeded("exact fallback hit its limits")
    dist = int(np.sum(res.best_strategy.actions != target.actions))
    return res.best_strategy, dist


@dataclass
class ScenarioDetail:
    scenario: int
    wait_and_see_value: float  # single-scenario optimum
    repaired_value: float  # that strategy, repaired, evaluated under all scenarios
    repair_distance: int


@dataclass
class AnalysisReport:
    evss_percent: Optional[float] = None
    evpi_absolute: Optional[float] = None
    evpi_percent: Optional[float] = None
    flexibility_percent: Optional[float] = None
    here_and_now_value: Optional[float] = None
    per_scenario: list = field(default_factory=list)
    sweep: list = field(default_factory=list)  # (c, f_star) pairs
    solver: str = "exact"

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "approximate": self.solver != "exact",
            "f_mip_mmdp": self.here_and_now_value,
            "evss_percent": self.evss_percent,
            "evpi_absolute": self.evpi_absolute,
            "evpi_percent": self.evpi_percent,
            "flexibility_percent": self.flexibility_percent,
            "per_scenario": [
                {
                    "scenario": d.scenario,
                    "f_omega": d.wait_and_see_value,
                    "f_omega_under_all": d.repaired_value,
                    "repair_distance": d.repair_distance,
                }
                for d in self.per_scenario
            ],
            "sweep": [{"c": c, "f_star": f} for c, f in self.sweep],
        }


def compute_evss(inst: Instance, solver: str = "exact") -> AnalysisReport:
    """Expected value of the stochastic solution, in percent.

    Per scenario: solve the single-scenario problem, repair its optimal
    strategy to feasibility under the full scenario set, evaluate it there,
    and compare with the here-and-now optimum.
    """
    _, f_mip = _solve(inst, solver)
    details = []
    losses = []
    for w in range(inst.n_scenarios):
        sub = single_scenario_instance(inst, w)
        strat_w, f_w = _solve(sub, solver)
        repaired, dist = repair_strategy(inst, strat_w)
        f_w_all = evaluate_strategy(inst, repaired).total_reward
        if f_w_all == 0:
            raise ZeroDivisionError(f"scenario {w}: repaired value is zero")
        details.append(ScenarioDetail(w, f_w, f_w_all, dist))
        losses.append((f_mip - f_w_all) / f_w_all * 100.0)
    return AnalysisReport(
        evss_percent=float(np.mean(losses)),
        here_and_now_value=f_mip,
        per_scenario=details,
        solver=solver,
    )


def compute_evpi(inst: Instance, solver: str = "exact") -> AnalysisReport:
    """Expected value of perfect information, absolute and in percent."""
    _, f_mip = _solve(inst, solver)
    details = []
    for w in range(inst.n_scenarios):
        sub = single_scenario_instance(inst, w)
        _, f_w = _solve(sub, solver)
        details.append(ScenarioDetail(w, f_w, float("nan"), 0))
    evpi = float(np.mean([d.wait_and_see_value for d in details]) - f_mip)
    return AnalysisReport(
        evpi_absolute=evpi,
        evpi_percent=evpi / f_mip * 100.0,
        here_and_now_value=f_mip,
        per_scenario=details,
        solver=solver,
    )


def compute_flexibility(inst: Instance, solver: str = "exact") -> AnalysisReport:
    """Gain from epoch-varying strategies over time-constant ones, percent."""
    _, f_mip = _solve(inst, solver)
    res = solve_exact_stationary(inst)
    if res.status != "Optimal":
        raise InfeasibleInstance(f"stationary solve returned {res.status}")
    return AnalysisReport(
        flexibility_percent=(f_mip - res.best_value) / res.best_value * 100.0,
        here_and_now_value=f_mip,
        solver=solver,
    )


def capacity_sweep(inst: Instance, c_grid, solver: str = "exact") -> AnalysisReport:
    """Re-solve under each capacity fraction in ``c_grid`` (sorted ascending)."""
    rows = []
    for c in c_grid:
        try:
            _, f = _solve(with_capacity_fraction(inst, float(c)), solver)
        except InfeasibleInstance:
            f = float("nan")
        rows.append((float(c), f))
    return AnalysisReport(sweep=rows, solver=solver)
