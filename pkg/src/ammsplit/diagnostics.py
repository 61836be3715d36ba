"""Per-round checks of the solver's progress guarantees.

Given a solve trace and the oracle optimum F(x*), these turn the
solver's provable per-round properties into pass/fail rows with measured
slack: a lower bound on each round's objective improvement, a lower
bound on the price gap in terms of the remaining optimality gap, a
geometric decay envelope on the optimality gap, and nesting of the
donor/receiver price intervals. All tolerances are fixed here, not
configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .pools import PoolSpec, global_curvature_bounds, global_kappa, total_output
from .transfer import Allocation, RoundRecord, SolveResult, _donor_index, _marginals, _receiver_index

# Fixed check tolerances: absolute slack on improvement and gap bounds is
# 1e-12 relative to F(x*); rounds with an optimality gap below 1e-9 of
# F(x*) are excluded from the gap-estimate check (both sides vanish into
# rounding noise there); interval nesting allows 1e-12 absolute.
REL_SLACK = 1e-12
GAP_FLOOR_REL = 1e-9
ENVELOPE_REL = 1e-9
INTERVAL_SLACK = 1e-12


class CheckRow(NamedTuple):
    round_index: int
    lhs: float
    rhs: float
    passed: bool
    applicable: bool = True

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


class IntervalRow(NamedTuple):
    round_index: int
    lo: float
    hi: float
    nested: bool  # within the previous row's interval (first row: True)


def objective(pools: Sequence[PoolSpec], alloc: Allocation) -> float:
    """Total Y output of an allocation."""
    return total_output(pools, alloc.amounts)


def check_improvement(
    trace: Sequence[RoundRecord], smoothness: float, f_star: float
) -> list[CheckRow]:
    """Each round must improve the objective by at least 3g^2/(16L)."""
    if not smoothness > 0.0:
        raise ValueError("smoothness must be positive for the improvement bound")
    tol = REL_SLACK * abs(f_star)
    rows = []
    for record in trace:
        gained = record.objective_after - record.objective_before
        bound = 3.0 * record.gap_g * record.gap_g / (16.0 * smoothness)
        rows.append(
            CheckRow(record.round_index, gained, bound, gained >= bound - tol)
        )
    return rows


def check_gradient_estimate(
    trace: Sequence[RoundRecord],
    strong_concavity: float,
    n_pools: int,
    f_star: float,
) -> list[CheckRow]:
    """The price gap must dominate sqrt(mu * h / (2N)) while the
    optimality gap h is meaningfully positive.

    Rows with h below GAP_FLOOR_REL * F(x*) are marked not applicable;
    with mu = 0 every row is (the bound is vacuous for flat pools).
    """
    rows = []
    for record in trace:
        h = f_star - record.objective_before
        if strong_concavity <= 0.0 or h <= GAP_FLOOR_REL * abs(f_star):
            rows.append(
                CheckRow(record.round_index, record.gap_g, math.nan, True, False)
            )
            continue
        bound = math.sqrt(strong_concavity * h / (2.0 * n_pools))
        rows.append(
            CheckRow(
                record.round_index,
                record.gap_g,
                bound,
                record.gap_g >= bound - REL_SLACK * abs(f_star),
            )
        )
    return rows


def rate_envelope_factor(kappa: float, n_pools: int) -> float:
    """Per-round geometric decay factor 1 - 3/(32 * kappa * N)."""
    return 1.0 - 3.0 / (32.0 * kappa * n_pools)


def check_linear_rate(
    trace: Sequence[RoundRecord], kappa: float, n_pools: int, f_star: float
) -> list[CheckRow]:
    """The optimality gap h_k must stay under the geometric envelope
    (1 - 3/(32*kappa*N))^k * h_0 at every visited state, including the
    state after the final round (k = len(trace))."""
    if not math.isfinite(kappa):
        raise ValueError("kappa must be finite for the decay envelope")
    if not trace:
        return []
    factor = rate_envelope_factor(kappa, n_pools)
    h0 = f_star - trace[0].objective_before
    tol = REL_SLACK * abs(f_star)
    rows = []
    for k, record in enumerate(trace):
        h = f_star - record.objective_before
        envelope = factor**k * h0 * (1.0 + ENVELOPE_REL) + tol
        rows.append(CheckRow(k, h, envelope, h <= envelope))
    h_end = f_star - trace[-1].objective_after
    k = len(trace)
    envelope = factor**k * h0 * (1.0 + ENVELOPE_REL) + tol
    rows.append(CheckRow(k, h_end, envelope, h_end <= envelope))
    return rows


def empirical_contraction(
    trace: Sequence[RoundRecord], f_star: float
) -> float | None:
    """Geometric mean of h_{k+1}/h_k over rounds where both gaps are
    meaningfully positive; None when fewer than one usable ratio.

    Informational only: quantifies how much faster the solver contracts
    than the worst-case envelope.
    """
    floor = GAP_FLOOR_REL * abs(f_star)
    logs = []
    for record in trace:
        h_before = f_star - record.objective_before
        h_after = f_star - record.objective_after
        if h_before > floor and h_after > floor:
            logs.append(math.log(h_after / h_before))
    if not logs:
        return None
    return math.exp(math.fsum(logs) / len(logs))


def _record_interval(record: RoundRecord) -> tuple[float, float]:
    lo = 0.0 if math.isinf(record.price_donor) else 1.0 / record.price_donor
    hi = 0.0 if math.isinf(record.price_receiver) else 1.0 / record.price_receiver
    return lo, hi


def final_interval(
    pools: Sequence[PoolSpec], alloc: Allocation
) -> tuple[float, float]:
    """[lowest funded marginal, highest marginal] at an allocation."""
    marginals = _marginals(pools, alloc.amounts)
    return (
        marginals[_donor_index(marginals, alloc.amounts)],
        marginals[_receiver_index(marginals)],
    )


def check_nested_intervals(
    trace: Sequence[RoundRecord],
    terminal: tuple[float, float] | None = None,
) -> list[IntervalRow]:
    """Donor/receiver marginal intervals must be nested round over round.

    Optionally append the terminal interval (from final_interval) so the
    last transfer's effect is covered too.
    """
    intervals = [_record_interval(r) for r in trace]
    if terminal is not None:
        intervals.append(terminal)
    rows = []
    prev = None
    for k, (lo, hi) in enumerate(intervals):
        nested = (
            prev is None
            or (lo >= prev[0] - INTERVAL_SLACK and hi <= prev[1] + INTERVAL_SLACK)
        )
        rows.append(IntervalRow(k, lo, hi, nested))
        prev = (lo, hi)
    return rows


@dataclass(frozen=True)
class RoundBounds:
    """One row of the bound report; None fields mean not applicable
    (terminal row, or a skipped/vacuous check)."""

    round_index: int
    h: float
    g: float | None
    improvement: float | None
    lemma3_rhs: float | None
    lemma3_pass: bool | None
    lemma4_rhs: float | None
    lemma4_pass: bool | None
    envelope: float | None
    rate_pass: bool | None
    interval_lo: float
    interval_hi: float
    nested: bool


@dataclass(frozen=True)
class BoundReport:
    rows: tuple[RoundBounds, ...]
    smoothness: float
    strong_concavity: float
    kappa: float
    n_pools: int
    optimum_objective: float
    oracle_tol: float
    contraction: float | None

    @property
    def all_passed(self) -> bool:
        return all(
            flag is not False
            for row in self.rows
            for flag in (row.lemma3_pass, row.lemma4_pass, row.rate_pass, row.nested)
        )

    @property
    def failures(self) -> list[RoundBounds]:
        return [
            row
            for row in self.rows
            if False in (row.lemma3_pass, row.lemma4_pass, row.rate_pass, row.nested)
        ]


def build_bound_report(
    pools: Sequence[PoolSpec],
    result: SolveResult,
    optimum_objective: float,
    oracle_tol: float = 1e-9,
) -> BoundReport:
    """Run every per-round check on a solve result and assemble one report.

    Rows 0..rounds-1 describe executed rounds; a terminal row carries the
    final optimality gap, envelope value, and price interval. Checks that
    need finite curvature ratios are skipped (None flags) when some pool
    is flat.
    """
    pools = tuple(pools)
    total_x = result.allocation.total_x
    bounds = global_curvature_bounds(pools, total_x)
    kappa = global_kappa(pools, total_x).value
    trace = result.trace
    f_star = optimum_objective
    n = len(pools)

    improvement_rows = (
        check_improvement(trace, bounds.smoothness, f_star)
        if bounds.smoothness > 0.0
        else [CheckRow(r.round_index, math.nan, math.nan, True, False) for r in trace]
    )
    gradient_rows = check_gradient_estimate(trace, bounds.strong_concavity, n, f_star)
    rate_rows = (
        check_linear_rate(trace, kappa, n, f_star) if math.isfinite(kappa) else None
    )
    interval_rows = check_nested_intervals(
        trace, terminal=final_interval(pools, result.allocation)
    )

    rows: list[RoundBounds] = []
    for k, record in enumerate(trace):
        imp = improvement_rows[k]
        grad = gradient_rows[k]
        rate = rate_rows[k] if rate_rows is not None else None
        rows.append(
            RoundBounds(
                round_index=k,
                h=f_star - record.objective_before,
                g=record.gap_g,
                improvement=record.objective_after - record.objective_before,
                lemma3_rhs=imp.rhs if imp.applicable else None,
                lemma3_pass=imp.passed if imp.applicable else None,
                lemma4_rhs=grad.rhs if grad.applicable else None,
                lemma4_pass=grad.passed if grad.applicable else None,
                envelope=rate.rhs if rate is not None else None,
                rate_pass=rate.passed if rate is not None else None,
                interval_lo=interval_rows[k].lo,
                interval_hi=interval_rows[k].hi,
                nested=interval_rows[k].nested,
            )
        )

    terminal_rate = rate_rows[-1] if rate_rows else None
    terminal_interval = interval_rows[-1] if interval_rows else None
    h_end = f_star - (trace[-1].objective_after if trace else objective(pools, result.allocation))
    rows.append(
        RoundBounds(
            round_index=len(trace),
            h=h_end,
            g=None,
            improvement=None,
            lemma3_rhs=None,
            lemma3_pass=None,
            lemma4_rhs=None,
            lemma4_pass=None,
            envelope=terminal_rate.rhs if terminal_rate is not None else None,
            rate_pass=terminal_rate.passed if terminal_rate is not None else None,
            interval_lo=terminal_interval.lo if terminal_interval else math.nan,
            interval_hi=terminal_interval.hi if terminal_interval else math.nan,
            nested=terminal_interval.nested if terminal_interval else True,
        )
    )

    return BoundReport(
        rows=tuple(rows),
        smoothness=bounds.smoothness,
        strong_concavity=bounds.strong_concavity,
        kappa=kappa,
        n_pools=n,
        optimum_objective=f_star,
        oracle_tol=oracle_tol,
        contraction=empirical_contraction(trace, f_star),
    )
