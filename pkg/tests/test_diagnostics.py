"""Bound checks over solve traces: worked two-pool numbers, then the
full battery on random instances (the clearing price must sit inside
every round's interval and the optimality gap must shrink under the
envelope)."""

import math
import random

import pytest

from ammsplit.diagnostics import (
    build_bound_report,
    check_gradient_estimate,
    check_improvement,
    check_linear_rate,
    check_nested_intervals,
    empirical_contraction,
    final_interval,
    objective,
    rate_envelope_factor,
)
from ammsplit.instances import random_instance
from ammsplit.oracle import solve_exact
from ammsplit.pools import PoolSpec, marginal, total_output
from ammsplit.transfer import Allocation, replay_amounts, solve

CP_100 = PoolSpec.constant_product(100, 100)
TWO_POOLS = [CP_100, CP_100]


@pytest.fixture(scope="module")
def two_pool_run():
    result = solve(TWO_POOLS, 100.0)
    oracle = solve_exact(TWO_POOLS, 100.0)
    return result, oracle


class TestObjective:
    def test_balanced_split(self):
        assert objective(TWO_POOLS, Allocation((50.0, 50.0), 100.0)) == pytest.approx(
            200 / 3, rel=1e-15
        )

    def test_single_funded_pool(self):
        assert objective(TWO_POOLS, Allocation((100.0, 0.0), 100.0)) == 50.0


class TestWorkedTwoPoolNumbers:
    def test_improvement_bound(self, two_pool_run):
        result, oracle = two_pool_run
        rows = check_improvement(result.trace, 0.02, oracle.objective)
        assert len(rows) == 1
        row = rows[0]
        assert row.lhs == pytest.approx(50 / 3, rel=1e-12)  # 66.667 - 50
        assert row.rhs == pytest.approx(5.2734375, rel=1e-12)  # 3 * 0.75^2 / 0.32
        assert row.passed

    def test_improvement_requires_curvature(self):
        with pytest.raises(ValueError):
            check_improvement([], 0.0, 1.0)

    def test_empty_trace_is_vacuous(self):
        assert check_improvement([], 0.02, 1.0) == []
        assert check_gradient_estimate([], 0.0025, 2, 1.0) == []
        assert check_linear_rate([], 8.0, 2, 1.0) == []

    def test_gradient_estimate(self, two_pool_run):
        result, oracle = two_pool_run
        rows = check_gradient_estimate(result.trace, 0.0025, 2, oracle.objective)
        row = rows[0]
        assert row.applicable
        assert row.lhs == 0.75
        # sqrt(0.0025 * (50/3) / 4)
        assert row.rhs == pytest.approx(0.10206207261596575, rel=1e-12)
        assert row.passed

    def test_gradient_estimate_skips_flat_pools(self, two_pool_run):
        result, oracle = two_pool_run
        rows = check_gradient_estimate(result.trace, 0.0, 2, oracle.objective)
        assert all(not row.applicable and row.passed for row in rows)

    def test_envelope_factor(self):
        assert rate_envelope_factor(8.0, 2) == pytest.approx(0.994140625, rel=1e-15)

    def test_linear_rate_rows(self, two_pool_run):
        result, oracle = two_pool_run
        rows = check_linear_rate(result.trace, 8.0, 2, oracle.objective)
        assert len(rows) == 2  # round 0 plus the terminal state
        assert rows[0].lhs == pytest.approx(50 / 3, rel=1e-12)
        assert rows[0].passed  # envelope anchors at h0
        assert rows[1].lhs == pytest.approx(0.0, abs=1e-12)
        assert rows[1].passed

    def test_linear_rate_needs_finite_kappa(self, two_pool_run):
        result, oracle = two_pool_run
        with pytest.raises(ValueError):
            check_linear_rate(result.trace, math.inf, 2, oracle.objective)

    def test_nested_intervals(self, two_pool_run):
        result, _ = two_pool_run
        rows = check_nested_intervals(
            result.trace, terminal=final_interval(TWO_POOLS, result.allocation)
        )
        assert len(rows) == 2
        assert rows[0].lo == 0.25 and rows[0].hi == 1.0
        assert rows[1].lo == pytest.approx(4 / 9, rel=1e-15)
        assert rows[1].hi == pytest.approx(4 / 9, rel=1e-15)
        assert all(row.nested for row in rows)

    def test_report_assembles_everything(self, two_pool_run):
        result, oracle = two_pool_run
        report = build_bound_report(TWO_POOLS, result, oracle.objective)
        assert report.all_passed
        assert report.kappa == 8.0
        assert report.n_pools == 2
        assert report.smoothness == pytest.approx(0.02, rel=1e-15)
        assert report.strong_concavity == pytest.approx(0.0025, rel=1e-15)
        assert len(report.rows) == 2
        terminal = report.rows[-1]
        assert terminal.g is None and terminal.improvement is None
        assert terminal.h == pytest.approx(0.0, abs=1e-12)


class TestDegenerateTraces:
    def test_single_pool_report(self):
        result = solve([CP_100], 100.0)
        oracle = solve_exact([CP_100], 100.0)
        report = build_bound_report([CP_100], result, oracle.objective)
        assert report.all_passed
        assert len(report.rows) == 1

    def test_flat_pool_report_skips_rate_and_gradient(self):
        pools = [CP_100, PoolSpec.constant_sum(5.0, 100.0)]
        result = solve(pools, 100.0)
        oracle = solve_exact(pools, 100.0)
        report = build_bound_report(pools, result, oracle.objective)
        assert not math.isfinite(report.kappa)
        assert all(row.rate_pass is None for row in report.rows)
        assert all(row.lemma4_pass is None for row in report.rows)
        assert report.all_passed


class TestRandomInstanceBattery:
    def test_all_checks_pass_on_random_traces(self):
        rng = random.Random(21)
        for _ in range(80):
            pools, total_x = random_instance(rng)
            result = solve(pools, total_x)
            oracle = solve_exact(pools, total_x)
            report = build_bound_report(pools, result, oracle.objective)
            assert report.all_passed, report.failures

    def test_optimum_dominates_every_round(self):
        rng = random.Random(22)
        for _ in range(80):
            pools, total_x = random_instance(rng)
            result = solve(pools, total_x)
            oracle = solve_exact(pools, total_x)
            report = build_bound_report(pools, result, oracle.objective)
            for row in report.rows:
                assert row.h >= -1e-9

    def test_gap_monotone_within_noise(self):
        rng = random.Random(23)
        for _ in range(60):
            pools, total_x = random_instance(rng)
            result = solve(pools, total_x)
            oracle = solve_exact(pools, total_x)
            report = build_bound_report(pools, result, oracle.objective)
            hs = [row.h for row in report.rows]
            for before, after in zip(hs, hs[1:]):
                assert after <= before + 1e-12 * oracle.objective

    def test_clearing_price_inside_every_interval(self):
        rng = random.Random(24)
        for _ in range(60):
            pools, total_x = random_instance(rng)
            result = solve(pools, total_x)
            oracle = solve_exact(pools, total_x)
            report = build_bound_report(pools, result, oracle.objective)
            for row in report.rows:
                assert row.interval_lo - 1e-9 <= oracle.lambda_star <= row.interval_hi + 1e-9

    def test_every_marginal_within_gap_of_clearing_price(self):
        rng = random.Random(25)
        for _ in range(40):
            pools, total_x = random_instance(rng)
            result = solve(pools, total_x)
            oracle = solve_exact(pools, total_x)
            states = replay_amounts(pools, result)
            for record, state in zip(result.trace, states):
                worst = max(
                    abs(marginal(p, a) - oracle.lambda_star)
                    for p, a in zip(pools, state)
                )
                assert worst <= record.gap_g + 1e-9

    def test_contraction_factor_reported(self):
        pools = [CP_100, PoolSpec.constant_product(400, 400), PoolSpec.constant_product(900, 900)]
        result = solve(pools, 100.0)
        oracle = solve_exact(pools, 100.0)
        factor = empirical_contraction(result.trace, oracle.objective)
        assert factor is not None
        assert 0.0 < factor < 1.0
        report = build_bound_report(pools, result, oracle.objective)
        assert report.contraction == factor
