"""Curve math: frozen example values plus structural properties.

Derived expectations were computed independently with exact rational
arithmetic (fractions.Fraction) and frozen here.
"""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ammsplit.pools import (
    Kappa,
    PoolSpec,
    curvature,
    global_curvature_bounds,
    global_kappa,
    marginal,
    pool_curvature_bounds,
    price_y_in_x,
    swap_out,
    total_output,
)

CP_100 = PoolSpec.constant_product(100, 100)
CP_100K = PoolSpec.constant_product(100_000, 100_000)

# float(Fraction(10**7, 100100)) and float(Fraction(2 * 10**10, 100100**3))
SWAP_100K_AT_100 = 99.9000999000999
MU_100K_CAP_100 = 1.994011980029958e-05


class TestSwapOut:
    def test_zero_input(self):
        assert swap_out(CP_100, 0.0) == 0.0

    def test_symmetric_half_depletion(self):
        assert swap_out(CP_100, 100.0) == 50.0

    def test_deep_pool_small_trade(self):
        assert swap_out(CP_100K, 100.0) == pytest.approx(SWAP_100K_AT_100, rel=1e-15)

    def test_constant_sum_linear_then_capped(self):
        pool = PoolSpec.constant_sum(2.0, 50.0)
        assert swap_out(pool, 10.0) == 20.0
        assert swap_out(pool, 25.0) == 50.0
        assert swap_out(pool, 40.0) == 50.0

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError):
            swap_out(CP_100, -1.0)


class TestMarginal:
    def test_spot_price_equal_reserves(self):
        assert marginal(CP_100, 0.0) == 1.0

    def test_after_half_depletion(self):
        assert marginal(CP_100, 100.0) == 0.25

    def test_constant_sum_rate(self):
        assert marginal(PoolSpec.constant_sum(2.0, 1000.0), 37.0) == 2.0

    def test_constant_sum_depletion_boundary(self):
        pool = PoolSpec.constant_sum(2.0, 50.0)
        assert marginal(pool, 25.0) == 2.0  # exact depletion: one-sided slope
        assert marginal(pool, 25.0000001) == 0.0

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError):
            marginal(CP_100, -0.5)


class TestPriceYInX:
    def test_reciprocal_of_spot(self):
        assert price_y_in_x(CP_100, 0.0) == 1.0
        assert price_y_in_x(PoolSpec.constant_product(400, 400), 0.0) == 1.0

    def test_reciprocal_after_trade(self):
        assert price_y_in_x(CP_100, 100.0) == 4.0

    def test_depleted_constant_sum_is_infinite(self):
        pool = PoolSpec.constant_sum(2.0, 50.0)
        assert price_y_in_x(pool, 26.0) == math.inf


class TestCurvature:
    def test_at_spot(self):
        assert curvature(CP_100, 0.0) == -0.02

    def test_after_half_depletion(self):
        assert curvature(CP_100, 100.0) == -0.0025

    def test_constant_sum_is_flat(self):
        assert curvature(PoolSpec.constant_sum(1.0, 10.0), 5.0) == 0.0


class TestCurvatureBounds:
    def test_equal_reserve_pool(self):
        b = pool_curvature_bounds(CP_100, 100.0)
        assert b.smoothness == pytest.approx(0.02, rel=1e-15)
        assert b.strong_concavity == pytest.approx(0.0025, rel=1e-15)

    def test_deep_pool(self):
        b = pool_curvature_bounds(CP_100K, 100.0)
        assert b.smoothness == pytest.approx(2e-5, rel=1e-15)
        assert b.strong_concavity == pytest.approx(MU_100K_CAP_100, rel=1e-15)

    def test_constant_sum(self):
        b = pool_curvature_bounds(PoolSpec.constant_sum(1.0, 10.0), 100.0)
        assert b.smoothness == 0.0 and b.strong_concavity == 0.0

    def test_nonpositive_cap_rejected(self):
        with pytest.raises(ValueError):
            pool_curvature_bounds(CP_100, 0.0)


class TestGlobalKappa:
    @pytest.mark.parametrize(
        "s,expected",
        [(1, 8), (2, 8), (5, 9), (10, 13), (50, 53), (100, 103), (500, 503), (1000, 1003)],
    )
    def test_two_tier_family(self, s, expected):
        pools = [CP_100] * 5 + [PoolSpec.constant_product(100 * s, 100 * s)] * 5
        assert global_kappa(pools, 100.0).rounded == expected

    def test_flat_pool_makes_kappa_infinite(self):
        pools = [CP_100, PoolSpec.constant_sum(1.0, 10.0)]
        kappa = global_kappa(pools, 100.0)
        assert not kappa.is_finite
        with pytest.raises(ValueError):
            kappa.rounded

    def test_empty_pool_list_rejected(self):
        with pytest.raises(ValueError):
            global_kappa([], 100.0)

    def test_value_at_least_one(self):
        with pytest.raises(ValueError):
            Kappa(0.5)


class TestPoolSpecValidation:
    def test_nonpositive_reserves_rejected(self):
        with pytest.raises(ValueError):
            PoolSpec.constant_product(0.0, 100.0)
        with pytest.raises(ValueError):
            PoolSpec.constant_product(100.0, -1.0)

    def test_constant_sum_needs_positive_rate_and_reserve(self):
        with pytest.raises(ValueError):
            PoolSpec.constant_sum(0.0, 10.0)
        with pytest.raises(ValueError):
            PoolSpec.constant_sum(1.0, 0.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            PoolSpec("stable_swap", 1.0, 1.0)


reserves = st.floats(min_value=10.0, max_value=1e6)


@given(
    rx=reserves,
    ry=reserves,
    t_a=st.floats(min_value=0.0, max_value=10.0),
    gap=st.floats(min_value=1e-6, max_value=10.0),
)
def test_swap_out_strictly_increasing(rx, ry, t_a, gap):
    pool = PoolSpec.constant_product(rx, ry)
    a = t_a * rx
    b = (t_a + gap) * rx
    assert swap_out(pool, a) < swap_out(pool, b)


# Dyadic grids make t*a + (1-t)*b exact, so the 1e-12 absolute slack only
# has to absorb the curve evaluations themselves.
dyadic_reserve = st.integers(min_value=16 * 16, max_value=256 * 16).map(lambda k: k / 16)
dyadic_amount = st.integers(min_value=0, max_value=256 * 64).map(lambda k: k / 64)


@given(
    rx=dyadic_reserve,
    ry=dyadic_reserve,
    a=dyadic_amount,
    b=dyadic_amount,
    k=st.integers(min_value=0, max_value=64),
)
@settings(max_examples=300)
def test_swap_out_concave(rx, ry, a, b, k):
    pool = PoolSpec.constant_product(rx, ry)
    t = k / 64
    mix = t * a + (1 - t) * b
    assert swap_out(pool, mix) >= t * swap_out(pool, a) + (1 - t) * swap_out(pool, b) - 1e-12


@given(
    rx=st.floats(min_value=10.0, max_value=1e5),
    ry=st.floats(min_value=10.0, max_value=1e5),
    t_scale=st.floats(min_value=1e-3, max_value=10.0),
)
def test_marginal_matches_finite_difference(rx, ry, t_scale):
    pool = PoolSpec.constant_product(rx, ry)
    x_in = t_scale * rx
    h = 1e-4 * (rx + x_in)
    fd = (swap_out(pool, x_in + h) - swap_out(pool, x_in - h)) / (2 * h)
    assert fd == pytest.approx(marginal(pool, x_in), rel=1e-6)


@given(
    rx=st.floats(min_value=10.0, max_value=1e5),
    ry=st.floats(min_value=10.0, max_value=1e5),
    t_scale=st.floats(min_value=1e-3, max_value=10.0),
)
def test_curvature_matches_finite_difference_of_marginal(rx, ry, t_scale):
    pool = PoolSpec.constant_product(rx, ry)
    x_in = t_scale * rx
    h = 1e-4 * (rx + x_in)
    fd = (marginal(pool, x_in + h) - marginal(pool, x_in - h)) / (2 * h)
    assert fd == pytest.approx(curvature(pool, x_in), rel=1e-6)


@given(
    rx=reserves,
    ry=reserves,
    cap_scale=st.floats(min_value=1e-2, max_value=10.0),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=50)
def test_curvature_within_bounds_on_range(rx, ry, cap_scale, seed):
    pool = PoolSpec.constant_product(rx, ry)
    x_cap = cap_scale * rx
    bounds = pool_curvature_bounds(pool, x_cap)
    rng = random.Random(seed)
    for _ in range(1000):
        x = rng.uniform(0.0, x_cap)
        neg_second = -curvature(pool, x)
        assert bounds.strong_concavity - 1e-12 <= neg_second <= bounds.smoothness + 1e-12


def test_global_bounds_cover_each_pool():
    pools = [CP_100, CP_100K, PoolSpec.constant_product(500, 2000)]
    g = global_curvature_bounds(pools, 100.0)
    for pool in pools:
        b = pool_curvature_bounds(pool, 100.0)
        assert g.strong_concavity <= b.strong_concavity
        assert g.smoothness >= b.smoothness


def test_total_output_sums_outputs():
    pools = [CP_100, CP_100]
    assert total_output(pools, [50.0, 50.0]) == pytest.approx(200 / 3, rel=1e-15)
    assert total_output(pools, [100.0, 0.0]) == 50.0


def test_fraction_oracle_agrees_with_closed_forms():
    # Recompute the frozen constants from exact rationals.
    assert float(Fraction(10**7, 100100)) == SWAP_100K_AT_100
    assert float(Fraction(2 * 10**10, 100100**3)) == MU_100K_CAP_100
