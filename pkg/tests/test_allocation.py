"""Allocation rules: optimality, oracle equivalence, monotonicity checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cal import (
    Allocation,
    AuctionEnv,
    CascadeModel,
    ConfigError,
    monotonicity_witness,
    optimal_allocation,
    optimal_allocation_excluding,
    social_welfare,
)
from cal.allocation import AllocationSolver, brute_force_allocation, sort_order
from conftest import enumerate_best_allocation, random_instance


def make_env(q, v, k, v_max=None):
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return AuctionEnv(n_ads=len(q), n_slots=k, qualities=q, true_values=v,
                      v_max=v_max if v_max is not None else max(1.0, float(v.max())))


SINGLE_SLOT = make_env([0.1, 0.2, 0.3], [1.0, 1.0, 1.0], 1)
SINGLE_MODEL = CascadeModel.position_dependent([])


class TestOptimalAllocation:
    def test_single_slot_true_qualities(self):
        alloc = optimal_allocation(SINGLE_SLOT, SINGLE_SLOT.true_values,
                                   SINGLE_SLOT.qualities, SINGLE_MODEL)
        assert alloc.ad_at[0] == 2

    def test_single_slot_estimated_qualities(self):
        # the inflated estimates still put the same ad on top
        alloc = optimal_allocation(SINGLE_SLOT, SINGLE_SLOT.true_values,
                                   np.array([0.1, 0.29, 0.3]), SINGLE_MODEL)
        assert alloc.ad_at[0] == 2

    def test_factorized_truthful_instance(self):
        env = make_env([1, 1, 1], [0.85, 1.0, 1.4], 2)
        model = CascadeModel.factorized([1.0], [1.0, 0.9, 0.0])
        alloc = optimal_allocation(env, env.true_values, env.qualities, model)
        assert list(alloc.ad_at[:2]) == [1, 2]

    def test_factorized_after_overbid(self):
        env = make_env([1, 1, 1], [0.85, 1.0, 1.4], 2)
        model = CascadeModel.factorized([1.0], [1.0, 0.9, 0.0])
        alloc = optimal_allocation(env, np.array([0.85, 1.0, 1.6]), env.qualities, model)
        assert list(alloc.ad_at[:2]) == [0, 2]

    def test_tie_break_lowest_index_first(self):
        env = make_env([0.5, 0.5, 0.5], [1.0, 1.0, 1.0], 2)
        model = CascadeModel.position_dependent([0.8])
        alloc = optimal_allocation(env, env.true_values, env.qualities, model)
        assert list(alloc.ad_at[:2]) == [0, 1]
        general = CascadeModel.general(np.full((2, 3), 0.8))
        alloc2 = optimal_allocation(env, env.true_values, env.qualities, general)
        assert list(alloc2.ad_at[:2]) == [0, 1]

    def test_sort_strategy_rejected_off_position_models(self):
        env = make_env([0.5, 0.5, 0.5], [1.0, 1.0, 1.0], 2)
        model = CascadeModel.factorized([0.9], [0.5, 0.5, 0.5])
        with pytest.raises(ConfigError):
            AllocationSolver(strategy="sort-by-expected-value").solve(
                env, env.true_values, env.qualities, model)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_brute_force_matches_full_enumeration(self, seed):
        r = np.random.default_rng(seed)
        env, model = random_instance(r, n_ads=int(r.integers(3, 6)), kind="general")
        got = brute_force_allocation(env, env.true_values, env.qualities, model)
        _, best_sw = enumerate_best_allocation(env, env.true_values, env.qualities, model)
        sw = social_welfare(got, env, env.true_values, model)
        assert sw == pytest.approx(best_sw, abs=1e-12)

    def test_oracle_equivalence_sort_vs_brute(self, rng):
        # the two strategies must agree in welfare on position-dependent inputs
        for _ in range(200):
            env, model = random_instance(rng, n_ads=int(rng.integers(3, 7)),
                                         n_slots=None, kind="position-dependent")
            sorted_alloc = optimal_allocation(env, env.true_values, env.qualities, model)
            brute = brute_force_allocation(env, env.true_values, env.qualities, model)
            sw_sort = social_welfare(sorted_alloc, env, env.true_values, model)
            sw_brute = social_welfare(brute, env, env.true_values, model)
            assert sw_sort == sw_brute

    def test_optimality_certificate_random_allocations(self, rng):
        env, model = random_instance(rng, n_ads=6, n_slots=3, kind="general")
        best = optimal_allocation(env, env.true_values, env.qualities, model)
        best_sw = social_welfare(best, env, env.true_values, model)
        for _ in range(1000):
            alloc = Allocation(rng.permutation(env.n_ads))
            assert best_sw >= social_welfare(alloc, env, env.true_values, model) - 1e-12


class TestExcluding:
    def test_single_slot_next_best(self):
        alloc = optimal_allocation_excluding(2, SINGLE_SLOT, SINGLE_SLOT.true_values,
                                             SINGLE_SLOT.qualities, SINGLE_MODEL)
        assert alloc.ad_at[0] == 1
        assert alloc.ad_at[-1] == 2

    def test_shift_up_after_removing_top(self, rng):
        env, model = random_instance(rng, n_ads=5, n_slots=2, kind="position-dependent")
        base = optimal_allocation(env, env.true_values, env.qualities, model)
        top = int(base.ad_at[0])
        reduced = optimal_allocation_excluding(top, env, env.true_values, env.qualities, model)
        assert reduced.ad_at[0] == base.ad_at[1]
        assert reduced.ad_at[1] == base.ad_at[2]
        # cross-check against enumeration over the remaining ads
        sw = social_welfare(reduced, env, env.true_values, model)
        best = max(
            social_welfare(Allocation(np.array(p)), env, env.true_values, model)
            for p in __import__("itertools").permutations(range(5))
            if p.index(top) >= env.n_slots)
        assert sw == pytest.approx(best, abs=1e-12)

    def test_excluding_undisplayed_keeps_prefix(self, rng):
        env, model = random_instance(rng, n_ads=6, n_slots=2, kind="position-dependent")
        base = optimal_allocation(env, env.true_values, env.qualities, model)
        undisplayed = int(base.ad_at[-1])
        reduced = optimal_allocation_excluding(undisplayed, env, env.true_values,
                                               env.qualities, model)
        assert np.array_equal(reduced.ad_at[: env.n_slots], base.ad_at[: env.n_slots])

    def test_excluded_ad_parks_last(self, rng):
        env, model = random_instance(rng, n_ads=5, n_slots=2, kind="general")
        for i in range(5):
            alloc = optimal_allocation_excluding(i, env, env.true_values, env.qualities, model)
            assert alloc.ad_at[-1] == i


class TestOrderStatisticDomination:
    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_inflated_qualities_dominate_slotwise(self, seed):
        # with q+ = q + eta, every m-th largest inflated key weakly dominates
        r = np.random.default_rng(seed)
        n = int(r.integers(2, 8))
        q = r.uniform(0.0, 0.9, n)
        eta = float(r.uniform(0.0, 0.2))
        v = r.uniform(0.0, 1.0, n)
        plain = np.sort(q * v)[::-1]
        inflated = np.sort(np.minimum(q + eta, 1.0) * v)[::-1]
        assert np.all(inflated >= plain - 1e-15)


class TestMonotonicityWitness:
    ENV = make_env([1, 1, 1], [0.85, 1.0, 1.4], 2)
    ESTIMATED = CascadeModel.factorized([1.0], [1.0, 0.9, 0.0])
    TRUE = CascadeModel.factorized([1.0], [0.89, 0.9, 0.0])

    def test_counterexample_witness(self):
        witness = monotonicity_witness(None, self.ENV, self.ESTIMATED, self.TRUE, [1.4, 1.6])
        assert witness == (2, 1.4, 1.6, 0.9, 0.89)

    def test_position_dependent_rule_shows_no_witness(self, rng):
        env, model = random_instance(rng, n_ads=4, n_slots=2, kind="position-dependent")
        grid = np.linspace(0.0, 1.0, 15)
        assert monotonicity_witness(None, env, model, model, grid) is None

    def test_single_competitor_ctr_constant(self):
        env = make_env([0.5, 0.4], [1.0, 0.2], 1)
        model = CascadeModel.position_dependent([])
        assert monotonicity_witness(None, env, model, model, [0.1, 0.5, 1.0]) is None

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ConfigError):
            monotonicity_witness(None, self.ENV, self.ESTIMATED, self.TRUE, [1.6, 1.4])


def test_sort_order_stability():
    keys = np.array([0.5, 0.7, 0.5, 0.9])
    assert list(sort_order(keys)) == [3, 1, 0, 2]
