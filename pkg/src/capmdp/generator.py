"""Instance generation: rule-constrained Monte Carlo and noisy scenarios.

The chronic-care state space has six non-absorbing states, the pairwise
combinations of engagement {Low, High} and severity {Simple, Moderate,
Complex}, labelled 0..5, with absorption (death) implicit.  A fixed
hierarchy of expert rules constrains which transitions exist and how the
probabilities and rewards order each other; the nominal model is the mean
of many rule-satisfying draws, and each scenario perturbs the nominal
entrywise with uniform multiplicative noise of radius epsilon before
renormalizing the transition rows.

A generic unrestricted random-MDP mode is also provided for solver testing
at arbitrary state-space sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, InstanceParams, Scenario

CHRONIC_STATES = (
    "low-simple",
    "low-moderate",
    "low-complex",
    "high-simple",
    "high-moderate",
    "high-complex",
)
DEATH_PROB_CAP = 0.20
REWARD_LO, REWARD_HI = 100.0, 1000.0

# Proposal bounds for the constructive sampler.  Chosen so that every row's
# residual self-loop mass stays nonnegative (worst row: worsen + switch +
# death <= 0.35 + 0.25 + 0.20 = 0.80); the rejection guard below still
# protects against future bound changes.
WORSEN_MAX = 0.35
SWITCH_MAX = 0.25

DEFAULT_POPULATION = 1000
DEFAULT_MC_ITERATIONS = 10_000
DEFAULT_REJECTION_LIMIT = 1000

# Worsening transitions (i -> j) drawn per action, shared-order chain:
# moderate worsens more than simple, low engagement worsens more than high.
_WORSEN_ARCS = ((1, 2), (0, 1), (4, 5), (3, 4))  # descending-probability order
# Engagement switches: equal probability per direction regardless of severity.
_SWITCH_UP = ((0, 3), (1, 4), (2, 5))
_SWITCH_DOWN = ((3, 0), (4, 1), (5, 2))
# Death-probability chain, descending: Q2 >= Q5 = Q1 >= Q4 = Q0 >= Q3.
_DEATH_LEVELS = ((2,), (5, 1), (4, 0), (3,))
# Reward chain, descending: r2 >= r5 = r1 >= r4 = r0 >= r3.
_REWARD_LEVELS = _DEATH_LEVELS


class RuleViolation(Exception):
    pass


class RejectionLimitExceeded(Exception):
    pass


def _dominated_sorted(rng, upper: np.ndarray) -> np.ndarray:
    """Values elementwise below ``upper`` that are also sorted descending.

    Scaling each entry by an independent uniform and re-sorting preserves
    both properties: the k-th largest of elementwise-dominated values is
    dominated by the k-th largest of the originals.
    """
    return np.sort(upper * rng.uniform(0.0, 1.0, size=upper.shape))[::-1]


def check_chronic_rules(P, Q, r, R, tol: float = 1e-9) -> list[str]:
    """Check a candidate (P, Q, r, R) against all chronic-care rules.

    Returns the list of violated rule names (empty iff fully compliant).
    Written directly from the rule list, independently of the sampler.
    """
    out = []
    for a in (0, 1):
        if not (P[1, a, 2] >= P[0, a, 1] - tol and P[4, a, 5] >= P[3, a, 4] - tol):
            out.append(f"worse-health-worsens-more (a={a})")
        if not (P[0, a, 1] >= P[3, a, 4] - tol and P[1, a, 2] >= P[4, a, 5] - tol):
            out.append(f"higher-engagement-worsens-less (a={a})")
    for i, j in ((0, 1), (1, 2), (3, 4), (4, 5)):
        if not P[i, 0, j] >= P[i, 1, j] - tol:
            out.append(f"special-care-slows-worsening ({i}->{j})")
    for a in (0, 1):
        if not (abs(P[0, a, 3] - P[1, a, 4]) <= tol and abs(P[1, a, 4] - P[2, a, 5]) <= tol):
            out.append(f"equal-upward-switch (a={a})")
        if not (abs(P[3, a, 0] - P[4, a, 1]) <= tol and abs(P[4, a, 1] - P[5, a, 2]) <= tol):
            out.append(f"equal-downward-switch (a={a})")
    for i, j in _SWITCH_UP:
        if not P[i, 1, j] >= P[i, 0, j] - tol:
            out.append(f"special-care-raises-engagement ({i}->{j})")
    for i, j in _SWITCH_DOWN:
        if not P[i, 0, j] >= P[i, 1, j] - tol:
            out.append(f"special-care-keeps-engagement ({i}->{j})")
    forbidden = [(0, 4), (1, 5), (3, 1), (4, 2), (4, 0), (5, 1), (1, 3), (2, 4)]
    for a in (0, 1):
        for i, j in forbidden:
            if abs(P[i, a, j]) > tol:
                out.append(f"no-double-jump ({i}->{j}, a={a})")
        for i, j in ((0, 2), (3, 5)):
            if abs(P[i, a, j]) > tol:
                out.append(f"no-simple-to-complex ({i}->{j}, a={a})")
        for i, j in ((1, 0), (2, 1), (4, 3), (5, 4)):
            if abs(P[i, a, j]) > tol:
                out.append(f"no-recovery ({i}->{j}, a={a})")
    for a in (0, 1):
        chain = [Q[2, a], Q[5, a], Q[1, a], Q[4, a], Q[0, a], Q[3, a]]
        eqs = (abs(chain[1] - chain[2]) <= tol) and (abs(chain[3] - chain[4]) <= tol)
        desc = all(chain[k] >= chain[k + 1] - tol for k in range(5))
        if not (eqs and desc):
            out.append(f"death-probability-ordering (a={a})")
    if not np.all(Q[:, 1] <= Q[:, 0] + tol):
        out.append("special-care-reduces-death")
    if not np.all(Q <= DEATH_PROB_CAP + tol):
        out.append("death-probability-cap")
    for a in (0, 1):
        chain = [r[2, a], r[5, a], r[1, a], r[4, a], r[0, a], r[3, a]]
        eqs = (abs(chain[1] - chain[2]) <= tol) and (abs(chain[3] - chain[4]) <= tol)
        desc = all(chain[k] >= chain[k + 1] - tol for k in range(5))
        if not (eqs and desc):
            out.append(f"reward-ordering (a={a})")
    if not np.all(r[:, 1] >= r[:, 0] - tol):
        out.append("special-care-more-desirable")
    if not (np.all(r >= REWARD_LO - tol) and np.all(r <= REWARD_HI + tol)):
        out.append("reward-domain")
    if not np.allclose(R, r.mean(axis=1), atol=tol):
        out.append("terminal-reward-is-action-mean")
    return out


def sample_rule_satisfying_model(rng, rejection_limit: int = DEFAULT_REJECTION_LIMIT):
    """One (P, Q, r, R) draw satisfying every chronic-care rule.

    Constructive: ordered chains come from sorted uniforms, shared values
    are drawn once, forbidden transitions stay zero, and the self-loop
    absorbs each row's residual mass.  A draw is rejected and retried only
    if some residual goes negative.
    """
    S = len(CHRONIC_STATES)
    for _ in range(rejection_limit):
        P = np.zeros((S, 2, S))
        Q = np.zeros((S, 2))

        death0 = np.sort(rng.uniform(0.0, DEATH_PROB_CAP, 4))[::-1]
        death1 = _dominated_sorted(rng, death0)
        for level, states in enumerate(_DEATH_LEVELS):
            for i in states:
                Q[i, 0] = death0[level]
                Q[i, 1] = death1[level]

        up1 = rng.uniform(0.0, SWITCH_MAX)  # special care raises engagement
        up0 = up1 * rng.uniform()
        down0 = rng.uniform(0.0, SWITCH_MAX)
        down1 = down0 * rng.uniform()
        for i, j in _SWITCH_UP:
            P[i, 0, j] = up0
            P[i, 1, j] = up1
        for i, j in _SWITCH_DOWN:
            P[i, 0, j] = down0
            P[i, 1, j] = down1

        worsen0 = np.sort(rng.uniform(0.0, WORSEN_MAX, 4))[::-1]
        worsen1 = _dominated_sorted(rng, worsen0)
        for k, (i, j) in enumerate(_WORSEN_ARCS):
            P[i, 0, j] = worsen0[k]
            P[i, 1, j] = worsen1[k]

        residual = 1.0 - P.sum(axis=2) - Q
        if np.any(residual < 0):
            continue
        for i in range(S):
            for a in (0, 1):
                P[i, a, i] = residual[i, a]

        rew0 = np.sort(rng.uniform(REWARD_LO, REWARD_HI, 4))[::-1]
        rew1 = np.sort(rew0 + (REWARD_HI - rew0) * rng.uniform(0.0, 1.0, 4))[::-1]
        r = np.zeros((S, 2))
        for level, states in enumerate(_REWARD_LEVELS):
            for i in states:
                r[i, 0] = rew0[level]
                r[i, 1] = rew1[level]
        R = r.mean(axis=1)
        return P, Q, r, R
    raise RejectionLimitExceeded(f"no acceptable draw in {rejection_limit} attempts")


@dataclass
class NominalModel:
    """Entrywise mean of rule-satisfying Monte Carlo draws."""

    P: np.ndarray
    Q: np.ndarray
    r: np.ndarray
    R: np.ndarray


def estimate_nominal(rng, n_iterations: int = DEFAULT_MC_ITERATIONS) -> NominalModel:
    """Mean of ``n_iterations`` accepted draws, rows renormalized to sum 1.

    Linear rule inequalities survive averaging, so the nominal satisfies the
    same chains as each draw.  The renormalization corrects only float
    rounding (each draw's rows are exactly stochastic by construction).
    """
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    Ps, Qs, rs, Rs = [], [], [], []
    for _ in range(n_iterations):
        P, Q, r, R = sample_rule_satisfying_model(rng)
        Ps.append(P)
        Qs.append(Q)
        rs.append(r)
        Rs.append(R)
    P = np.mean(Ps, axis=0)
    Q = np.mean(Qs, axis=0)
    rowsum = P.sum(axis=2) + Q
    P = P / rowsum[:, :, None]
    Q = Q / rowsum
    return NominalModel(P=P, Q=Q, r=np.mean(rs, axis=0), R=np.mean(Rs, axis=0))


def random_nominal(n_states: int, rng) -> NominalModel:
    """Unrestricted random MDP nominal for solver testing.

    Transition rows (including absorption) are Dirichlet; rewards follow the
    chronic-care domain and terminal-reward conventions.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    rows = rng.dirichlet(np.ones(n_states + 1), size=(n_states, 2))
    P = rows[:, :, :n_states]
    Q = rows[:, :, n_states]
    r = rng.uniform(REWARD_LO, REWARD_HI, size=(n_states, 2))
    return NominalModel(P=P, Q=Q, r=r, R=r.mean(axis=1))


def generate_instance(
    params: InstanceParams,
    nominal: NominalModel,
    population: int = DEFAULT_POPULATION,
    states=None,
) -> Instance:
    """Sample |Omega| scenarios around the nominal and assemble an instance.

    Every uncertain parameter is drawn uniformly in
    [(1 - eps) * nominal, (1 + eps) * nominal] on its own per-scenario RNG
    sub-stream; transition rows are then renormalized.  Structural zeros
    are preserved (multiplicative noise on zero is zero).  Scenario
    probabilities, the initial distribution, and per-epoch capacities are
    all uniform per the instance-family conventions; the absorbing reward
    is zero.
    """
    S = nominal.P.shape[0]
    if states is None:
        states = CHRONIC_STATES if S == len(CHRONIC_STATES) else tuple(f"s{i}" for i in range(S))
    eps = params.noise_radius
    streams = np.random.SeedSequence(params.seed).spawn(params.n_scenarios)
    scenarios = []
    for k in range(params.n_scenarios):
        rng = np.random.default_rng(streams[k])

        def noisy(x, rng=rng):
            return x * rng.uniform(1.0 - eps, 1.0 + eps, size=x.shape)

        P = noisy(nominal.P)
        Q = noisy(nominal.Q)
        rowsum = P.sum(axis=2) + Q
        scenarios.append(
            Scenario(P=P / rowsum[:, :, None], Q=Q / rowsum, r=noisy(nominal.r), R=noisy(nominal.R))
        )
    W = params.n_scenarios
    return Instance(
        horizon=params.horizon,
        states=states,
        population=population,
        initial_distribution=np.full(S, 1.0 / S),
        capacities=np.full(params.horizon - 1, params.capacity_fraction * population),
        absorbing_reward=0.0,
        scenarios=scenarios,
        scenario_probabilities=np.full(W, 1.0 / W),
    )


def chronic_care_instance(
    params: InstanceParams,
    population: int = DEFAULT_POPULATION,
    n_mc_iterations: int = DEFAULT_MC_ITERATIONS,
) -> Instance:
    """Full pipeline: nominal estimation then scenario sampling.

    The nominal uses its own sub-stream of ``params.seed`` so that instance
    and nominal are jointly reproducible from one seed.
    """
    root = np.random.SeedSequence(params.seed)
    nominal_stream, scenario_stream = root.spawn(2)
    rng = np.random.default_rng(nominal_stream)
    nominal = estimate_nominal(rng, n_mc_iterations)
    scen_params = InstanceParams(
        n_scenarios=params.n_scenarios,
        horizon=params.horizon,
        capacity_fraction=params.capacity_fraction,
        noise_radius=params.noise_radius,
        seed=int(scenario_stream.generate_state(1)[0]),
    )
    return generate_instance(scen_params, nominal, population=population)


def random_instance(
    n_states: int,
    params: InstanceParams,
    population: int = DEFAULT_POPULATION,
) -> Instance:
    """Unrestricted random instance at an arbitrary state-space size."""
    root = np.random.SeedSequence(params.seed)
    nominal_stream, scenario_stream = root.spawn(2)
    nominal = random_nominal(n_states, np.random.default_rng(nominal_stream))
    scen_params = InstanceParams(
        n_scenarios=params.n_scenarios,
        horizon=params.horizon,
        capacity_fraction=params.capacity_fraction,
        noise_radius=params.noise_radius,
        seed=int(scenario_stream.generate_state(1)[0]),
    )
    return generate_instance(scen_params, nominal, population=population)
