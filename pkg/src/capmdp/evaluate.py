"""Strategy evaluation via the forward occupancy recursion.

Fixing a strategy turns every scenario into a Markov reward process whose
occupancy measures follow from a forward pass over the decision epochs.
This module computes those measures, the total expected reward, capacity
feasibility, the two valid-inequality diagnostics, and an independent
cohort Monte Carlo cross-check of the same quantities.

All scenarios are propagated together as stacked numpy arrays; the
per-scenario rewards are combined in fixed scenario order so the total is
bit-reproducible regardless of execution schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import CAP_TOL, Instance, OccupancyTrajectory, Strategy, validate_strategy


@dataclass
class EvaluationResult:
    trajectory: OccupancyTrajectory
    total_reward: float
    feasible: bool
    # (scenario index, decision epoch t, overflow headcount), lexicographically
    # first over (t, scenario); None when feasible.
    first_violation: Optional[tuple[int, int, float]]

    def to_dict(self, include_trajectory: bool = False) -> dict:
        out = {
            "U": self.total_reward,
            "feasible": self.feasible,
            "first_violation": None
            if self.first_violation is None
            else {
                "scenario": self.first_violation[0],
                "t": self.first_violation[1],
                "overflow": self.first_violation[2],
            },
        }
        if include_trajectory:
            t = self.trajectory
            out["trajectory"] = {"X": t.X.tolist(), "Z": t.Z.tolist(), "Y": t.Y.tolist()}
        return out


def evaluate_strategy(inst: Instance, strat: Strategy) -> EvaluationResult:
    """Propagate the forward equations for every scenario and total up rewards.

    The per-scenario recursion: stage-1 occupancy places theta on each
    state's chosen action; each later stage pushes the mass through P under
    the previous stage's actions, accumulating newly absorbed mass into Z;
    the final push gives the terminal distribution Y.  The objective applies
    the absorbing reward once per newly absorbed unit of mass (equivalently
    to the cumulative mass at period T, since Z telescopes from 0).
    """
    problems = validate_strategy(inst, strat)
    if problems:
        raise ValueError("; ".join(problems))

    T, S, W, N = inst.horizon, inst.n_states, inst.n_scenarios, inst.population
    acts = np.asarray(strat.actions, dtype=np.int64)
    idx = np.arange(S)
    P, Q, r = inst.P_stack, inst.Q_stack, inst.r_stack

    X = np.zeros((W, T - 1, S, 2))
    Z = np.zeros((W, T))
    stage_reward = np.zeros(W)
    violation = None

    # x holds the stage-t state-occupancy (the action split is degenerate:
    # all of state i's mass sits on the chosen action).
    x = np.broadcast_to(inst.initial_distribution, (W, S)).copy()
    for t in range(T - 1):
        a = acts[t]
        X[:, t, idx, a] = x
        stage_reward += (x * r[:, idx, a]).sum(axis=1)
        special = x[:, a == 1].sum(axis=1)
        over = N * special - inst.capacities[t]
        if violation is None and np.any(over > CAP_TOL):
            w = int(np.argmax(over > CAP_TOL))
            violation = (w, t + 1, float(over[w]))
        newly_dead = (x * Q[:, idx, a]).sum(axis=1)
        x = np.einsum("ws,wsj->wj", x, P[:, idx, a, :])
        Z[:, t + 1] = Z[:, t] + newly_dead
    Y = x

    per_scenario = (
        Z[:, T - 1] * inst.absorbing_reward + stage_reward + (Y * inst.R_stack).sum(axis=1)
    )
    total = 0.0
    for w in range(W):  # fixed order: U must not depend on schedule
        total += float(inst.scenario_probabilities[w]) * float(per_scenario[w])
    total *= N

    traj = OccupancyTrajectory(X=X, Z=Z, Y=Y)
    return EvaluationResult(
        trajectory=traj,
        total_reward=total,
        feasible=violation is None,
        first_violation=violation,
    )


def check_proposition1(inst: Instance, traj: OccupancyTrajectory) -> float:
    """Maximum deviation of the per-period conservation identities from 1.

    At t=1 the X mass alone sums to 1; at 2 <= t <= T-1 the X mass plus the
    cumulative absorbed mass sums to 1; at t=T the terminal mass plus the
    absorbed mass sums to 1.
    """
    T = inst.horizon
    mass = traj.X.sum(axis=(2, 3))  # [W, T-1]
    lhs = mass + traj.Z[:, : T - 1]  # Z at t=1 is zero, so this covers t=1 too
    dev = np.abs(lhs - 1.0).max()
    final = traj.Y.sum(axis=1) + traj.Z[:, T - 1]
    return float(max(dev, np.abs(final - 1.0).max()))


def check_proposition2(inst: Instance, traj: OccupancyTrajectory) -> np.ndarray:
    """Per-scenario slack of the aggregated-capacity inequality.

    Nonnegative (up to the capacity tolerance) on every capacity-feasible
    trajectory.
    """
    T, N = inst.horizon, inst.population
    lhs = (traj.X[:, :, :, 0].sum(axis=2) + traj.Z[:, : T - 1]).sum(axis=1)
    bound = T - (inst.capacities.sum() + N) / N
    return lhs - bound


def simulate_cohort(
    inst: Instance, strat: Strategy, samples_per_scenario: int, seed: int
) -> OccupancyTrajectory:
    """Empirical occupancy measures from simulated individual paths.

    Independent oracle for the forward recursion: per scenario, walks
    ``samples_per_scenario`` individuals from the initial distribution
    through P/Q under the strategy's actions and returns the observed
    frequencies. One RNG sub-stream per scenario; deterministic for a fixed
    seed.
    """
    if samples_per_scenario < 1:
        raise ValueError("samples_per_scenario must be >= 1")
    T, S, W = inst.horizon, inst.n_states, inst.n_scenarios
    acts = np.asarray(strat.actions, dtype=np.int64)
    M = samples_per_scenario
    idx = np.arange(S)
    streams = np.random.SeedSequence(seed).spawn(W)

    X = np.zeros((W, T - 1, S, 2))
    Z = np.zeros((W, T))
    Y = np.zeros((W, S))
    for w, sc in enumerate(inst.scenarios):
        rng = np.random.default_rng(streams[w])
        states = rng.choice(S, size=M, p=inst.initial_distribution)
        alive = np.ones(M, dtype=bool)
        for t in range(T - 1):
            a = acts[t]
            counts = np.bincount(states[alive], minlength=S)
            X[w, t, idx, a] = counts / M
            # Row-wise categorical step over S successor states + absorption.
            probs = np.concatenate(
                [sc.P[idx, a, :], sc.Q[idx, a][:, None]], axis=1
            )  # [S, S+1]
            cum = np.cumsum(probs, axis=1)
            cum[:, -1] = 1.0
            u = rng.random(int(alive.sum()))
            nxt = (u[:, None] >= cum[states[alive]]).sum(axis=1)
            cur = states.copy()
            cur[alive] = nxt
            states = cur
            died = alive & (states == S)
            alive = alive & (states < S)
            Z[w, t + 1] = Z[w, t] + died.sum() / M
        Y[w] = np.bincount(states[alive], minlength=S) / M
    return OccupancyTrajectory(X=X, Z=Z, Y=Y)
