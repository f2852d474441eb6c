"""Independent brute-force oracles used to cross-check the solvers.

These deliberately avoid the solvers' search machinery: flat loops over the
full strategy space, scoring everything with ``evaluate_strategy`` only.
"""

import itertools

import numpy as np

from capmdp import Strategy, evaluate_strategy


def all_strategies(n_epochs, n_states):
    """Every strategy in ascending row-major lexicographic order."""
    for bits in itertools.product((0, 1), repeat=n_epochs * n_states):
        yield Strategy(actions=np.array(bits, dtype=np.int8).reshape(n_epochs, n_states))


def brute_force_solve(inst):
    """(best strategy, best value) by flat enumeration; None if infeasible."""
    best, best_val = None, -np.inf
    for strat in all_strategies(inst.horizon - 1, inst.n_states):
        res = evaluate_strategy(inst, strat)
        if res.feasible and res.total_reward > best_val:
            best, best_val = strat, res.total_reward
    return best, best_val


def brute_force_repair(inst, target):
    """Minimum-Hamming-distance feasible strategy by flat enumeration."""
    best = None
    for strat in all_strategies(inst.horizon - 1, inst.n_states):
        res = evaluate_strategy(inst, strat)
        if not res.feasible:
            continue
        dist = int(np.sum(strat.actions != target.actions))
        key = (dist, -res.total_reward, strat.as_tuple())
        if best is None or key < best[0]:
            best = (key, strat)
    if best is None:
        return None, None
    return best[1], best[0][0]
