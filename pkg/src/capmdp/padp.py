"""Approximate longest-path solver over the stage / policy-combination network.

Each decision epoch contributes a column of 2^|states| nodes, one per binary
action vector (encoded as an integer whose bit i is the action for state i).
Arcs join consecutive columns; an arc's length is the expected reward added
by accepting the target column's policy for its stage, and its feasibility
is judged on the occupancy extended from the predecessor's stored path.
Because each node keeps only its best predecessor's occupancy while arc
lengths are path-dependent, the longest path found is a feasible lower
bound, not a guaranteed optimum.

The reported value is the re-evaluation of the decoded strategy, so it is
float-identical to ``evaluate_strategy`` on that strategy by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import CAP_TOL, Instance, Strategy
from .evaluate import evaluate_strategy

MAX_COMBO_BITS = 20


def combo_to_actions(code: int, n_states: int) -> np.ndarray:
    """Decode a combination code into an action row (bit i = state i)."""
    return np.array([(code >> i) & 1 for i in range(n_states)], dtype=np.int8)


def actions_to_combo(row: np.ndarray) -> int:
    return int(sum(int(b) << i for i, b in enumerate(row)))


@dataclass
class PadpResult:
    strategy: Optional[Strategy]
    value: float
    per_stage_alive_counts: list[int]
    status: str  # "Solved" | "Infeasible"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "f_padp": self.value if self.strategy is not None else None,
            "strategy": None if self.strategy is None else self.strategy.actions.tolist(),
            "alive_counts": self.per_stage_alive_counts,
        }


def decode_path(result: PadpResult) -> Strategy:
    """Strategy decoded from the best path; requires a Solved result."""
    if result.status != "Solved":
        raise ValueError("no path to decode: result is not Solved")
    return result.strategy


def solve_padp(inst: Instance) -> PadpResult:
    """Run the stage-synchronous longest-path recursion.

    Column t stores, per node: the best accumulated per-individual reward f,
    the stage-t occupancy of the winning path, and the winning predecessor.
    Ties in the node max are broken by smallest predecessor code; the final
    column's max ties break by smallest node code.
    """
    T, S, W, N = inst.horizon, inst.n_states, inst.n_scenarios, inst.population
    if S > MAX_COMBO_BITS:
        raise ValueError(f"state space too large for the combination network ({S} > {MAX_COMBO_BITS} bits)")
    K = 1 << S
    idx = np.arange(S)
    lam = inst.scenario_probabilities
    P, Q, r, R = inst.P_stack, inst.Q_stack, inst.r_stack, inst.R_stack
    rows = [combo_to_actions(c, S) for c in range(K)]
    rows64 = [row.astype(np.int64) for row in rows]

    def stage_reward(x: np.ndarray, code: int) -> float:
        # Expected immediate reward at one stage under the code's actions.
        per = (x * r[:, idx, rows64[code]]).sum(axis=1)
        total = 0.0
        for w in range(W):
            total += float(lam[w]) * float(per[w])
        return total

    def capacity_ok(x: np.ndarray, code: int, t: int) -> bool:
        special = x[:, rows[code] == 1].sum(axis=1)
        return bool(np.all(N * special <= inst.capacities[t] + CAP_TOL))

    # Column state.
    theta = np.broadcast_to(inst.initial_distribution, (W, S)).copy()
    x_col = [theta.copy() for _ in range(K)]  # stage occupancy of the stored path
    z_col = [np.zeros(W) for _ in range(K)]
    f = np.zeros(K)
    alive = np.array([capacity_ok(theta, c, 0) for c in range(K)])
    preds = np.full((T - 1, K), -1, dtype=np.int64)
    alive_counts = [int(alive.sum())]

    if not alive.any():
        return PadpResult(strategy=None, value=-np.inf, per_stage_alive_counts=alive_counts, status="Infeasible")

    def terminal_reward(x: np.ndarray, z: np.ndarray, code: int) -> float:
        # Terminal push: Y distribution plus the mass newly absorbed at T.
        y = np.einsum("ws,wsj->wj", x, P[:, idx, rows64[code], :])
        dead = (x * Q[:, idx, rows64[code]]).sum(axis=1)
        per = dead * inst.absorbing_reward + (y * R).sum(axis=1)
        total = 0.0
        for w in range(W):
            total += float(lam[w]) * float(per[w])
        return total

    if T == 2:
        # Single decision epoch: no arcs; score each alive node directly.
        best_code, best_val = -1, -np.inf
        for c in range(K):
            if not alive[c]:
                continue
            val = stage_reward(x_col[c], c) + terminal_reward(x_col[c], z_col[c], c)
            if val > best_val:
                best_val, best_code = val, c
        strat = Strategy(actions=rows[best_code][None, :])
        return PadpResult(
            strategy=strat,
            value=evaluate_strategy(inst, strat).total_reward,
            per_stage_alive_counts=alive_counts,
            status="Solved",
        )

    for t in range(1, T - 1):
        # Extend every alive predecessor once; the extension depends only on
        # the predecessor's actions, not on the target node.
        x_ext = [None] * K
        z_ext = [None] * K
        for c in range(K):
            if not alive[c]:
                continue
            a = rows64[c]
            dead = (x_col[c] * Q[:, idx, a]).sum(axis=1)
            x_ext[c] = np.einsum("ws,wsj->wj", x_col[c], P[:, idx, a, :])
            z_ext[c] = z_col[c] + dead

        new_x = [None] * K
        new_z = [None] * K
        new_f = np.full(K, -np.inf)
        new_alive = np.zeros(K, dtype=bool)
        last = t == T - 2
        for target in range(K):
            best_val, best_pred = -np.inf, -1
            for pred in range(K):  # ascending code order fixes tie-breaking
                if not alive[pred]:
                    continue
                if not capacity_ok(x_ext[pred], target, t):
                    continue
                eta = stage_reward(x_ext[pred], target)
                eta += float(
                    np.dot(lam, z_ext[pred] - z_col[pred]) * inst.absorbing_reward
                )
                if t == 1:
                    eta += stage_reward(x_col[pred], pred)  # first arc carries stage 1
                if last:
                    eta += terminal_reward(x_ext[pred], z_ext[pred], target)
                val = f[pred] + eta
                if val > best_val:
                    best_val, best_pred = val, pred
            if best_pred >= 0:
                new_alive[target] = True
                new_f[target] = best_val
                new_x[target] = x_ext[best_pred]
                new_z[target] = z_ext[best_pred]
                preds[t, target] = best_pred
        x_col, z_col, f, alive = new_x, new_z, new_f, new_alive
        alive_counts.append(int(alive.sum()))
        if not alive.any():
            return PadpResult(
                strategy=None, value=-np.inf, per_stage_alive_counts=alive_counts, status="Infeasible"
            )

    best_code, best_val = -1, -np.inf
    for c in range(K):
        if alive[c] and f[c] > best_val:
            best_val, best_code = f[c], c
    codes = [best_code]
    for t in range(T - 2, 0, -1):
        codes.append(int(preds[t, codes[-1]]))
    codes.reverse()
    strat = Strategy(actions=np.stack([rows[c] for c in codes]))
    return PadpResult(
        strategy=strat,
        value=evaluate_strategy(inst, strat).total_reward,
        per_stage_alive_counts=alive_counts,
        status="Solved",
    )
