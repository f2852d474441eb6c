"""Exact strategy optimization by depth-first branch and bound.

The stage tree is searched depth-first over the decision epochs, reusing
each prefix's occupancy (a change at epoch t cannot affect earlier
occupancies) and pruning any child whose own stage capacity check already
fails for some scenario; such a prefix cannot be completed feasibly because
the stage-t occupancy is fixed by the prefix.  Complete strategies are
scored with ``evaluate_strategy`` so the optimum is float-identical to a
flat enumeration over the same feasible set.

Intended for desk-scale instances; the search space is (2^|states|)^(T-1).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import CAP_TOL, Instance, Strategy
from .evaluate import evaluate_strategy


@dataclass
class SolveResult:
    best_strategy: Optional[Strategy]
    best_value: float
    nodes_explored: int
    status: str  # "Optimal" | "Infeasible" | "LimitExceeded"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "f_star": self.best_value if self.best_strategy is not None else None,
            "strategy": None
            if self.best_strategy is None
            else self.best_strategy.actions.tolist(),
            "nodes_explored": self.nodes_explored,
        }


class LimitExceeded(Exception):
    pass


def _policy_rows(n_states: int) -> list[np.ndarray]:
    """All 2^S binary action rows in ascending lexicographic order."""
    return [np.array(bits, dtype=np.int8) for bits in itertools.product((0, 1), repeat=n_states)]


def _stage_feasible(inst: Instance, x: np.ndarray, row: np.ndarray, t: int) -> bool:
    """Capacity check at decision epoch t (1-based index t+1) for occupancy x."""
    special = x[:, row == 1].sum(axis=1)
    return bool(np.all(inst.population * special <= inst.capacities[t] + CAP_TOL))


def _extend(inst: Instance, x: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Push stage occupancy one step forward under the row's actions."""
    idx = np.arange(inst.n_states)
    return np.einsum("ws,wsj->wj", x, inst.P_stack[:, idx, row.astype(np.int64), :])


def solve_exact(
    inst: Instance,
    max_nodes: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> SolveResult:
    """Maximum-reward capacity-feasible strategy, or Infeasible.

    Children are explored in ascending row order, and the incumbent is only
    replaced on a strict improvement, so the returned strategy is the
    lexicographically smallest (row-major bit order) among equal-value
    optima.
    """
    T, S, W = inst.horizon, inst.n_states, inst.n_scenarios
    rows = _policy_rows(S)
    x0 = np.broadcast_to(inst.initial_distribution, (W, S)).copy()
    deadline = None if max_seconds is None else time.monotonic() + max_seconds

    best_value = -np.inf
    best: Optional[Strategy] = None
    nodes = 0
    prefix_rows: list[np.ndarray] = []

    def dfs(t: int, x: np.ndarray):
        nonlocal best_value, best, nodes
        for row in rows:
            nodes += 1
            if max_nodes is not None and nodes > max_nodes:
                raise LimitExceeded
            if deadline is not None and time.monotonic() > deadline:
                raise LimitExceeded
            if not _stage_feasible(inst, x, row, t):
                continue
            prefix_rows.append(row)
            if t == T - 2:
                strat = Strategy(actions=np.stack(prefix_rows))
                res = evaluate_strategy(inst, strat)
                if res.feasible and res.total_reward > best_value:
                    best_value = res.total_reward
                    best = strat
            else:
                dfs(t + 1, _extend(inst, x, row))
            prefix_rows.pop()

    status = "Optimal"
    try:
        dfs(0, x0)
    except LimitExceeded:
        status = "LimitExceeded"
    if best is None and status == "Optimal":
        status = "Infeasible"
    return SolveResult(best_strategy=best, best_value=best_value, nodes_explored=nodes, status=status)


def solve_exact_stationary(
    inst: Instance,
    max_nodes: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> SolveResult:
    """Best feasible strategy constant across all decision epochs.

    Exhausts all 2^|states| stationary candidates; the same tie-break as
    ``solve_exact`` applies.
    """
    T, S = inst.horizon, inst.n_states
    deadline = None if max_seconds is None else time.monotonic() + max_seconds
    best_value = -np.inf
    best = None
    nodes = 0
    status = "Optimal"
    for row in _policy_rows(S):
        nodes += 1
        if max_nodes is not None and nodes > max_nodes:
            status = "LimitExceeded"
            break
        if deadline is not None and time.monotonic() > deadline:
            status = "LimitExceeded"
            break
        strat = Strategy(actions=np.tile(row, (T - 1, 1)))
        res = evaluate_strategy(inst, strat)
        if res.feasible and res.total_reward > best_value:
            best_value = res.total_reward
            best = strat
    if best is None and status == "Optimal":
        status = "Infeasible"
    return SolveResult(best_strategy=best, best_value=best_value, nodes_explored=nodes, status=status)
