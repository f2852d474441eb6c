import numpy as np
import pytest

from capmdp import (
    InstanceParams,
    chronic_care_instance,
    estimate_nominal,
    generate_instance,
    random_instance,
    sample_rule_satisfying_model,
    solve_exact,
    validate_instance,
)
from capmdp.generator import (
    DEATH_PROB_CAP,
    REWARD_HI,
    REWARD_LO,
    check_chronic_rules,
    random_nominal,
)


class TestRuleSatisfyingDraws:
    def test_draws_satisfy_all_rules(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            P, Q, r, R = sample_rule_satisfying_model(rng)
            assert check_chronic_rules(P, Q, r, R) == []

    def test_rows_exactly_stochastic(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            P, Q, _, _ = sample_rule_satisfying_model(rng)
            np.testing.assert_allclose(P.sum(axis=2) + Q, 1.0, atol=1e-9)

    def test_domain_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            _, Q, r, _ = sample_rule_satisfying_model(rng)
            assert np.all(Q <= DEATH_PROB_CAP)
            assert np.all((r >= REWARD_LO) & (r <= REWARD_HI))

    def test_fixed_seed_identical_draw(self):
        a = sample_rule_satisfying_model(np.random.default_rng(9))
        b = sample_rule_satisfying_model(np.random.default_rng(9))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


class TestNominal:
    def test_single_draw_mean_is_the_draw(self):
        draw = sample_rule_satisfying_model(np.random.default_rng(5))
        nominal = estimate_nominal(np.random.default_rng(5), n_iterations=1)
        np.testing.assert_allclose(nominal.P, draw[0], atol=1e-12)
        np.testing.assert_allclose(nominal.r, draw[2], atol=1e-12)

    def test_inequalities_survive_averaging(self):
        nominal = estimate_nominal(np.random.default_rng(3), n_iterations=500)
        for a in (0, 1):
            assert nominal.P[1, a, 2] >= nominal.P[0, a, 1]
            assert nominal.P[4, a, 5] >= nominal.P[3, a, 4]
        assert check_chronic_rules(nominal.P, nominal.Q, nominal.r, nominal.R, tol=1e-9) == []

    def test_rows_renormalized(self):
        nominal = estimate_nominal(np.random.default_rng(4), n_iterations=100)
        np.testing.assert_allclose(nominal.P.sum(axis=2) + nominal.Q, 1.0, atol=1e-12)

    def test_two_seeds_agree_within_mc_error(self):
        a = estimate_nominal(np.random.default_rng(10), n_iterations=10_000)
        b = estimate_nominal(np.random.default_rng(11), n_iterations=10_000)
        assert np.abs(a.P - b.P).max() <= 0.05
        assert np.abs(a.Q - b.Q).max() <= 0.05


class TestScenarioSampling:
    def params(self, **kw):
        base = dict(n_scenarios=4, horizon=4, capacity_fraction=0.4, noise_radius=0.25, seed=12)
        base.update(kw)
        return InstanceParams(**base)

    def test_degenerate_noise_recovers_nominal(self):
        nominal = estimate_nominal(np.random.default_rng(6), n_iterations=50)
        inst = generate_instance(self.params(noise_radius=1e-12), nominal)
        for sc in inst.scenarios:
            np.testing.assert_allclose(sc.P, nominal.P, atol=1e-9)
            np.testing.assert_allclose(sc.Q, nominal.Q, atol=1e-9)
            np.testing.assert_allclose(sc.r, nominal.r, atol=1e-6)

    def test_structural_zeros_preserved(self):
        nominal = estimate_nominal(np.random.default_rng(7), n_iterations=50)
        inst = generate_instance(self.params(noise_radius=0.5), nominal)
        zeros = nominal.P == 0.0
        for sc in inst.scenarios:
            assert np.all(sc.P[zeros] == 0.0)

    def test_generated_instance_valid(self):
        nominal = estimate_nominal(np.random.default_rng(8), n_iterations=50)
        inst = generate_instance(self.params(), nominal)
        assert validate_instance(inst) == []
        assert np.all(inst.capacities == 0.4 * inst.population)
        np.testing.assert_allclose(inst.scenario_probabilities, 0.25)
        np.testing.assert_allclose(inst.initial_distribution, 1.0 / 6)
        assert inst.absorbing_reward == 0.0

    def test_determinism(self):
        nominal = estimate_nominal(np.random.default_rng(9), n_iterations=20)
        a = generate_instance(self.params(), nominal)
        b = generate_instance(self.params(), nominal)
        for x, y in zip(a.scenarios, b.scenarios):
            np.testing.assert_array_equal(x.P, y.P)
            np.testing.assert_array_equal(x.r, y.r)

    def test_chronic_pipeline_valid(self):
        inst = chronic_care_instance(self.params(), n_mc_iterations=50)
        assert validate_instance(inst) == []
        assert inst.n_states == 6

    def test_random_mode_valid(self):
        inst = random_instance(3, self.params())
        assert validate_instance(inst) == []
        assert inst.n_states == 3


def test_population_scale_covariance():
    # Capacity enters only through c = C/N: doubling N and C leaves the
    # optimal strategy unchanged and scales the value linearly.
    params = InstanceParams(n_scenarios=3, horizon=4, capacity_fraction=0.4, noise_radius=0.25, seed=77)
    small = random_instance(2, params, population=500)
    big = random_instance(2, params, population=1000)
    rs, rb = solve_exact(small), solve_exact(big)
    assert rs.best_strategy == rb.best_strategy
    assert rb.best_value / 1000 == pytest.approx(rs.best_value / 500, rel=1e-12)
