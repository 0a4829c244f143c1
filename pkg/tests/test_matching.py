from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnifilter.matching import (BIG, MAX_BRUTE_FORCE, TIE_EPS, Assignment,
                                 CostMatrix, brute_force, hungarian)


def assert_same_assignment(a: Assignment, b: Assignment) -> None:
    assert a.match == b.match
    assert a.total_cost == b.total_cost
    assert a.infeasible_rows == b.infeasible_rows


class TestCostMatrix:
    def test_rejects_more_rows_than_cols(self):
        with pytest.raises(ValueError, match="columns"):
            CostMatrix(values=np.zeros((3, 2)))

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError, match="2-D"):
            CostMatrix(values=np.zeros(4))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            CostMatrix(values=np.array([[1.0, np.inf]]))

    def test_shape_properties(self):
        c = CostMatrix(values=np.zeros((2, 5)))
        assert (c.num_rows, c.num_cols) == (2, 5)


class TestAssignment:
    def test_rejects_duplicate_columns(self):
        with pytest.raises(ValueError, match="distinct"):
            Assignment(match=(1, 1), total_cost=0.0, infeasible_rows=())


class TestKnownOptima:
    def test_diagonal_optimum(self):
        a = hungarian(CostMatrix(values=np.array([[1.0, 2.0], [2.0, 1.0]])))
        assert a.match == (0, 1)
        assert a.total_cost == 2.0
        assert a.infeasible_rows == ()

    def test_anti_diagonal_optimum(self):
        a = hungarian(CostMatrix(values=np.array([[2.0, 1.0], [1.0, 2.0]])))
        assert a.match == (1, 0)
        assert a.total_cost == 2.0

    def test_single_cell(self):
        a = brute_force(CostMatrix(values=np.array([[7.5]])))
        assert a.match == (0,)
        assert a.total_cost == 7.5

    def test_single_row_picks_min(self):
        a = brute_force(CostMatrix(values=np.array([[3.0, 1.0, 2.0]])))
        assert a.match == (1,)
        assert a.total_cost == 1.0
        assert_same_assignment(a, hungarian(CostMatrix(values=np.array([[3.0, 1.0, 2.0]]))))

    def test_all_equal_breaks_ties_toward_small_columns(self):
        a = hungarian(CostMatrix(values=np.zeros((2, 3))))
        assert a.match == (0, 1)
        assert a.total_cost == 0.0


class TestAgainstBruteForce:
    def test_exhaustive_2x2_grid(self):
        """Every 2x2 matrix with entries in {0..3}: costs agree exactly, and
        the match vectors agree whenever the perturbed optimum is unique.
        (When two assignments tie even after perturbation — equal cost and
        equal column-index sum — float accumulation order may differ.)"""
        match_checked = 0
        for entries in itertools.product(range(4), repeat=4):
            values = np.array(entries, dtype=np.float64).reshape(2, 2)
            c = CostMatrix(values=values)
            h, b = hungarian(c), brute_force(c)
            assert h.total_cost == b.total_cost, entries
            d = values[0, 0] + values[1, 1] - (values[0, 1] + values[1, 0])
            if d != 0:  # unique optimum: no tie for the perturbation to break
                assert_same_assignment(h, b)
                match_checked += 1
        assert match_checked > 200

    def test_exhaustive_3x3_sample_costs_agree(self):
        rng = np.random.default_rng(2024)
        for _ in range(400):
            values = rng.integers(0, 4, size=(3, 3)).astype(np.float64)
            c = CostMatrix(values=values)
            assert hungarian(c).total_cost == brute_force(c).total_cost

    def test_random_rectangular_full_agreement(self):
        """Continuous random costs have a unique optimum almost surely, so
        hungarian must reproduce the oracle's match exactly."""
        rng = np.random.default_rng(99)
        for _ in range(300):
            g = int(rng.integers(1, 6))
            k = int(rng.integers(g, 9))
            c = CostMatrix(values=rng.uniform(0.0, 10.0, size=(g, k)))
            assert_same_assignment(hungarian(c), brute_force(c))

    def test_random_5x8_costs(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            c = CostMatrix(values=rng.uniform(0.0, 1.0, size=(5, 8)))
            h, b = hungarian(c), brute_force(c)
            assert h.total_cost == pytest.approx(b.total_cost, abs=1e-9)
            assert h.match == b.match


class TestInfeasibility:
    def test_sentinel_rows_reported(self):
        values = np.array([[BIG, BIG, BIG], [0.5, 0.2, 0.9]])
        a = hungarian(CostMatrix(values=values))
        assert a.infeasible_rows == (0,)
        assert a.match[1] == 1

    def test_feasible_instances_report_nothing(self):
        rng = np.random.default_rng(1)
        a = hungarian(CostMatrix(values=rng.uniform(0, 1, (4, 6))))
        assert a.infeasible_rows == ()

    def test_all_infeasible(self):
        a = hungarian(CostMatrix(values=np.full((2, 2), BIG)))
        assert a.infeasible_rows == (0, 1)
        assert a.total_cost == 2 * BIG


class TestBruteForceGuard:
    def test_large_instance_refused(self):
        g, k = 8, 15
        assert math.perm(k, g) > MAX_BRUTE_FORCE
        with pytest.raises(ValueError, match="injective assignments"):
            brute_force(CostMatrix(values=np.zeros((g, k))))

    def test_limit_boundary_is_generous(self):
        # 5x8 (6720 assignments) is far inside the guard.
        assert math.perm(8, 5) < MAX_BRUTE_FORCE


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**24), st.floats(0.1, 100.0, allow_nan=False))
    def test_scale_invariance_of_match(self, seed, scale):
        rng = np.random.default_rng(seed)
        g = int(rng.integers(1, 5))
        k = int(rng.integers(g, 8))
        values = rng.uniform(0.0, 1.0, size=(g, k))
        base = hungarian(CostMatrix(values=values))
        scaled = hungarian(CostMatrix(values=values * scale))
        assert base.match == scaled.match

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**24))
    def test_row_permutation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        g = int(rng.integers(2, 5))
        k = int(rng.integers(g, 8))
        values = rng.uniform(0.0, 1.0, size=(g, k))
        perm = rng.permutation(g)
        base = hungarian(CostMatrix(values=values))
        permuted = hungarian(CostMatrix(values=values[perm]))
        assert permuted.match == tuple(base.match[i] for i in perm)
        assert permuted.total_cost == pytest.approx(base.total_cost, abs=1e-9)

    def test_total_cost_is_unperturbed(self):
        # Perturbation steers tie-breaks but never leaks into the cost.
        a = hungarian(CostMatrix(values=np.zeros((3, 7))))
        assert a.total_cost == 0.0
        assert TIE_EPS == 1e-12
