import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from baryreduce.core import (
    BadExponent,
    DimensionMismatch,
    ShapeMismatch,
    TooLarge,
    make_distribution,
)
from baryreduce.transport import (
    barycenter_objective,
    cost_matrix,
    cost_of_plan,
    solve_ot,
    solve_ot_oracle,
    wasserstein_p,
)
from conftest import random_distribution


def delta(x):
    return make_distribution(np.atleast_2d(np.asarray(x, dtype=float)), [1.0])


class TestCostMatrix:
    def test_pythagoras(self):
        C = cost_matrix(delta([0.0, 0.0]), delta([3.0, 4.0]), 2.0)
        np.testing.assert_allclose(C, [[25.0]])

    def test_same_point(self):
        C = cost_matrix(delta([0.0]), delta([0.0]), 3.0)
        np.testing.assert_allclose(C, [[0.0]])

    def test_absolute_differences(self):
        mu = make_distribution([[0.0], [1.0]], [0.5, 0.5])
        nu = make_distribution([[0.0], [2.0]], [0.5, 0.5])
        np.testing.assert_allclose(cost_matrix(mu, nu, 1.0), [[0, 2], [1, 1]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cost_matrix(delta([0.0]), delta([0.0, 0.0]), 2.0)

    def test_exponent_below_one_rejected(self):
        with pytest.raises(BadExponent):
            cost_matrix(delta([0.0]), delta([1.0]), 0.5)


class TestSolveOt:
    def test_single_coupling(self):
        plan = solve_ot(delta([0.0, 0.0]), delta([3.0, 4.0]), 1.0)
        assert plan.cost == pytest.approx(5.0)
        np.testing.assert_allclose(plan.flow, [[1.0]])

    def test_identical_distributions(self):
        mu = make_distribution([[0.0], [1.0]], [0.5, 0.5])
        plan = solve_ot(mu, mu, 2.0)
        assert plan.cost == pytest.approx(0.0, abs=1e-12)

    def test_two_by_two_derived(self):
        # one free variable f = flow(0->0) in [0, 0.4]; cost 0.9 at f=0.4
        mu = make_distribution([[0.0], [1.0]], [0.7, 0.3])
        nu = make_distribution([[0.0], [2.0]], [0.4, 0.6])
        assert solve_ot(mu, nu, 1.0).cost == pytest.approx(0.9)
        assert solve_ot_oracle(mu, nu, 1.0).cost == pytest.approx(0.9)

    def test_zero_weight_atom_dropped(self):
        mu = make_distribution([[0.0], [50.0]], [1.0, 0.0])
        nu = delta([1.0])
        plan = solve_ot(mu, nu, 2.0)
        assert plan.cost == pytest.approx(1.0)
        assert plan.flow.shape == (2, 1)
        assert plan.flow[1, 0] == 0.0

    def test_plan_is_basic(self, rng):
        mu = random_distribution(rng, 5, 3)
        nu = random_distribution(rng, 4, 3)
        plan = solve_ot(mu, nu, 2.0)
        assert (plan.flow > 1e-12).sum() <= 5 + 4 - 1
        np.testing.assert_allclose(plan.flow.sum(axis=1), mu.weights, atol=1e-9)
        np.testing.assert_allclose(plan.flow.sum(axis=0), nu.weights, atol=1e-9)


class TestOracle:
    def test_too_large(self, rng):
        mu = random_distribution(rng, 5, 1)
        nu = random_distribution(rng, 4, 1)
        with pytest.raises(TooLarge):
            solve_ot_oracle(mu, nu, 2.0)

    def test_one_by_one(self):
        plan = solve_ot_oracle(delta([1.0]), delta([4.0]), 2.0)
        assert plan.cost == pytest.approx(9.0)

    def test_identical_two_by_two(self):
        mu = make_distribution([[0.0], [1.0]], [0.5, 0.5])
        assert solve_ot_oracle(mu, mu, 2.0).cost == pytest.approx(0.0, abs=1e-12)


class TestWasserstein:
    def test_point_masses(self):
        for p in (1.0, 2.0, 3.5):
            assert wasserstein_p(delta([0.0]), delta([2.0]), p) == pytest.approx(2.0)

    def test_self_distance_zero(self, rng):
        mu = random_distribution(rng, 3, 2)
        assert wasserstein_p(mu, mu, 2.0) == pytest.approx(0.0, abs=1e-7)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), p=st.sampled_from([1.0, 2.0, 3.0]))
    def test_triangle_inequality(self, seed, p):
        r = np.random.default_rng(seed)
        mu, nu, rho = (random_distribution(r, int(r.integers(1, 4)), 2)
                       for _ in range(3))
        assert wasserstein_p(mu, rho, p) <= (
            wasserstein_p(mu, nu, p) + wasserstein_p(nu, rho, p) + 1e-7
        )

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), c=st.floats(0.1, 10.0),
           p=st.sampled_from([1.0, 2.0, 3.0]))
    def test_scaling(self, seed, c, p):
        r = np.random.default_rng(seed)
        mu = random_distribution(r, 3, 2)
        nu = random_distribution(r, 3, 2)
        base = solve_ot(mu, nu, p).cost
        scaled = solve_ot(
            make_distribution(c * mu.atoms, mu.weights),
            make_distribution(c * nu.atoms, nu.weights), p).cost
        assert scaled == pytest.approx(c**p * base, rel=1e-9, abs=1e-12)


class TestObjective:
    def test_midpoint(self):
        mus = [delta([0.0]), delta([2.0])]
        assert barycenter_objective(delta([1.0]), mus, 2.0) == pytest.approx(1.0)

    def test_zero_at_common_point(self, rng):
        mu = random_distribution(rng, 3, 2)
        assert barycenter_objective(mu, [mu, mu], 2.0) == pytest.approx(0.0, abs=1e-9)

    def test_explicit_lambdas(self):
        mus = [delta([0.0]), delta([2.0])]
        val = barycenter_objective(delta([0.0]), mus, 2.0, lambdas=[0.0, 1.0])
        assert val == pytest.approx(4.0)


class TestCostOfPlan:
    def test_identity(self):
        assert cost_of_plan([[1.0]], [[7.0]]) == 7.0

    def test_zero_flow(self):
        assert cost_of_plan(np.zeros((2, 2)), np.ones((2, 2))) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            cost_of_plan(np.zeros((2, 2)), np.ones((2, 3)))
