"""Domain types, validation, and JSON serialization.

An instance bundles a finite horizon, a set of non-absorbing states (the
absorbing state is implicit and reached through the Q matrices), a
population size, per-epoch capacities on the special-care headcount, and a
weighted list of scenarios, each carrying its own transition matrices and
rewards. Instances and strategies are immutable after construction: all
arrays are marked read-only so they can be shared freely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Absolute tolerance for probability identities (row sums, theta, lambda).
PROB_TOL = 1e-9
# Absolute slack, in headcount units, for capacity feasibility checks.
# The forward recursion accumulates O(T * |states|) rounding.
CAP_TOL = 1e-6


class SchemaError(ValueError):
    """Raised when an instance or strategy file violates the JSON schema."""


@dataclass
class Scenario:
    """One model of the world: transitions among non-absorbing states (P),
    transitions into the absorbing state (Q), immediate rewards (r), and
    terminal rewards (R)."""

    P: np.ndarray  # [state i][action a][state j]
    Q: np.ndarray  # [state i][action a]
    r: np.ndarray  # [state i][action a]
    R: np.ndarray  # [state i]

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        for a in (self.P, self.Q, self.r, self.R):
            a.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.P.shape[0]


@dataclass
class Instance:
    """A capacity-constrained multi-model MDP instance.

    Decision epochs are 1..T-1; period T only collects terminal rewards.
    ``capacities[t-1]`` bounds the expected special-care headcount at
    decision epoch t, in units of individuals (fractional values are
    meaningful because the constraint is on an expectation).
    """

    horizon: int
    states: Sequence[str]
    population: int
    initial_distribution: np.ndarray
    capacities: np.ndarray
    absorbing_reward: float
    scenarios: Sequence[Scenario]
    scenario_probabilities: np.ndarray

    # Stacked per-scenario arrays, built once for vectorized evaluation.
    _stacks: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.initial_distribution = np.asarray(self.initial_distribution, dtype=float)
        self.capacities = np.asarray(self.capacities, dtype=float)
        self.scenario_probabilities = np.asarray(self.scenario_probabilities, dtype=float)
        self.states = tuple(str(s) for s in self.states)
        self.scenarios = tuple(self.scenarios)
        for a in (self.initial_distribution, self.capacities, self.scenario_probabilities):
            a.setflags(write=False)
        self._stacks = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    def _build_stacks(self):
        P = np.stack([s.P for s in self.scenarios])
        Q = np.stack([s.Q for s in self.scenarios])
        r = np.stack([s.r for s in self.scenarios])
        R = np.stack([s.R for s in self.scenarios])
        for a in (P, Q, r, R):
            a.setflags(write=False)
        self._stacks = {"P": P, "Q": Q, "r": r, "R": R}

    @property
    def P_stack(self) -> np.ndarray:
        """All scenarios' P as one array [scenario][i][a][j]."""
        if self._stacks is None:
            self._build_stacks()
        return self._stacks["P"]

    @property
    def Q_stack(self) -> np.ndarray:
        if self._stacks is None:
            self._build_stacks()
        return self._stacks["Q"]

    @property
    def r_stack(self) -> np.ndarray:
        if self._stacks is None:
            self._build_stacks()
        return self._stacks["r"]

    @property
    def R_stack(self) -> np.ndarray:
        if self._stacks is None:
            self._build_stacks()
        return self._stacks["R"]


@dataclass
class Strategy:
    """Binary action table over (decision epoch, state)."""

    actions: np.ndarray  # [epoch t-1][state i] in {0, 1}

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.int8)
        self.actions.setflags(write=False)

    @property
    def n_epochs(self) -> int:
        return self.actions.shape[0]

    def as_tuple(self) -> tuple:
        """Row-major bit tuple; defines the lexicographic order on strategies."""
        return tuple(int(b) for b in self.actions.ravel())

    def __eq__(self, other):
        return isinstance(other, Strategy) and np.array_equal(self.actions, other.actions)


@dataclass
class OccupancyTrajectory:
    """Per-scenario occupancy measures induced by a strategy.

    X[w, t-1, i, a] is the probability of being in state i under action a at
    decision epoch t; Z[w, t-1] is the cumulative absorbing-state probability
    at period t (Z at period 1 is 0 and included for convenience); Y[w, i] is
    the terminal-state probability at period T.
    """

    X: np.ndarray  # [scenario][epoch][state][action]
    Z: np.ndarray  # [scenario][period], period index 0 <-> t=1
    Y: np.ndarray  # [scenario][state]

    def delta_Z(self) -> np.ndarray:
        """Per-period newly absorbed mass, [scenario][t=2..T]."""
        return np.diff(self.Z, axis=1)


@dataclass(frozen=True)
class InstanceParams:
    """The four-parameter family of generated instances, plus the RNG seed."""

    n_scenarios: int
    horizon: int
    capacity_fraction: float
    noise_radius: float
    seed: int

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if not (0.0 < self.capacity_fraction <= 1.0):
            raise ValueError("capacity_fraction must be in (0, 1]")
        if not (0.0 < self.noise_radius < 1.0):
            raise ValueError("noise_radius must be in (0, 1)")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")


def validate_instance(inst: Instance) -> list[str]:
    """Check every construction invariant; return a list of violations.

    The report is empty iff the instance is valid. Each entry names the
    offending index and the violated identity. Pure and deterministic.
    """
    out = []
    T, S, W = inst.horizon, inst.n_states, inst.n_scenarios
    if T < 2:
        out.append(f"horizon T={T} must be >= 2")
    if S < 1:
        out.append("state set is empty")
    if inst.population < 1:
        out.append(f"population N={inst.population} must be positive")
    if W < 1:
        out.append("scenario list is empty")
    if len(inst.scenario_probabilities) != W:
        out.append(
            f"scenario probabilities length {len(inst.scenario_probabilities)} != {W} scenarios"
        )
    theta = inst.initial_distribution
    if theta.shape != (S,):
        out.append(f"theta shape {theta.shape} != ({S},)")
    else:
        if np.any(theta < 0):
            bad = int(np.argmin(theta))
            out.append(f"theta[{bad}] = {theta[bad]} is negative")
        if abs(theta.sum() - 1.0) > PROB_TOL:
            out.append(f"theta sums to {theta.sum()!r}, not 1")
    lam = inst.scenario_probabilities
    if np.any(lam <= 0):
        bad = int(np.argmin(lam))
        out.append(f"scenario probability lambda[{bad}] = {lam[bad]} is not positive")
    if abs(lam.sum() - 1.0) > PROB_TOL:
        out.append(f"scenario probabilities sum {lam.sum()!r}")
    if inst.capacities.shape != (T - 1,):
        out.append(f"capacities length {inst.capacities.shape[0]} != T-1 = {T - 1}")
    elif np.any(inst.capacities < 0):
        bad = int(np.argmin(inst.capacities))
        out.append(f"capacity C[{bad + 1}] = {inst.capacities[bad]} is negative")
    for w, sc in enumerate(inst.scenarios):
        if sc.P.shape != (S, 2, S) or sc.Q.shape != (S, 2):
            out.append(f"scenario {w}: P/Q shapes {sc.P.shape}/{sc.Q.shape} do not match {S} states")
            continue
        if sc.r.shape != (S, 2) or sc.R.shape != (S,):
            out.append(f"scenario {w}: reward shapes {sc.r.shape}/{sc.R.shape} do not match")
        if np.any(sc.P < 0):
            i, a, j = np.argwhere(sc.P < 0)[0]
            out.append(f"scenario {w}: P[{i},{a},{j}] = {sc.P[i, a, j]} is negative")
        if np.any(sc.Q < 0):
            i, a = np.argwhere(sc.Q < 0)[0]
            out.append(f"scenario {w}: Q[{i},{a}] = {sc.Q[i, a]} is negative")
        rowsum = sc.P.sum(axis=2) + sc.Q
        bad = np.argwhere(np.abs(rowsum - 1.0) > PROB_TOL)
        for i, a in bad:
            out.append(
                f"scenario {w}: row (i={i}, a={a}) sums to {rowsum[i, a]!r},"
                f" off by {rowsum[i, a] - 1.0:+.3g}"
            )
    return out


def validate_strategy(inst: Instance, strat: Strategy) -> list[str]:
    """Dimension and domain checks for a strategy against an instance."""
    out = []
    want = (inst.horizon - 1, inst.n_states)
    if strat.actions.shape != want:
        out.append(f"strategy shape {strat.actions.shape} != {want}")
        return out
    if not np.isin(strat.actions, (0, 1)).all():
        out.append("strategy entries must be 0 or 1")
    return out


# --- JSON serialization ----------------------------------------------------
#
# The schema is strict: unknown fields are rejected so that silent config
# drift fails loudly. Floats round-trip bit-exactly through repr.

_INSTANCE_FIELDS = {
    "T",
    "states",
    "N",
    "theta",
    "capacities",
    "absorbing_reward",
    "lambda",
    "scenarios",
}
_SCENARIO_FIELDS = {"P", "Q", "r", "R"}


def instance_to_dict(inst: Instance) -> dict:
    return {
        "T": inst.horizon,
        "states": list(inst.states),
        "N": inst.population,
        "theta": inst.initial_distribution.tolist(),
        "capacities": inst.capacities.tolist(),
        "absorbing_reward": inst.absorbing_reward,
        "lambda": inst.scenario_probabilities.tolist(),
        "scenarios": [
            {"P": s.P.tolist(), "Q": s.Q.tolist(), "r": s.r.tolist(), "R": s.R.tolist()}
            for s in inst.scenarios
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise SchemaError("instance file must contain a JSON object")
    unknown = set(data) - _INSTANCE_FIELDS
    if unknown:
        raise SchemaError(f"unknown instance field(s): {sorted(unknown)}")
    missing = _INSTANCE_FIELDS - set(data)
    if missing:
        raise SchemaError(f"missing instance field(s): {sorted(missing)}")
    scenarios = []
    for w, sd in enumerate(data["scenarios"]):
        unknown = set(sd) - _SCENARIO_FIELDS
        if unknown:
            raise SchemaError(f"scenario {w}: unknown field(s): {sorted(unknown)}")
        missing = _SCENARIO_FIELDS - set(sd)
        if missing:
            raise SchemaError(f"scenario {w}: missing field(s): {sorted(missing)}")
        scenarios.append(Scenario(P=sd["P"], Q=sd["Q"], r=sd["r"], R=sd["R"]))
    inst = Instance(
        horizon=int(data["T"]),
        states=data["states"],
        population=int(data["N"]),
        initial_distribution=data["theta"],
        capacities=data["capacities"],
        absorbing_reward=float(data["absorbing_reward"]),
        scenarios=scenarios,
        scenario_probabilities=data["lambda"],
    )
    report = validate_instance(inst)
    if report:
        raise SchemaError("invalid instance: " + "; ".join(report))
    return inst


def save_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    return instance_from_dict(data)


def save_strategy(strat: Strategy, path) -> None:
    with open(path, "w") as fh:
        json.dump({"pi": strat.actions.tolist()}, fh, indent=1)
        fh.write("\n")


def load_strategy(path) -> Strategy:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or set(data) != {"pi"}:
        raise SchemaError("strategy file must be an object with the single field 'pi'")
    pi = np.asarray(data["pi"])
    if pi.ndim != 2 or not np.isin(pi, (0, 1)).all():
        raise SchemaError("'pi' must be a 2-d array of 0/1 entries")
    return Strategy(actions=pi)
