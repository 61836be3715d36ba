"""Pairwise-transfer solver for splitting one sell order across pools.

State is a nonnegative allocation of the input amount over N pools. Each
round moves mass from the donor (the funded pool quoting the highest
price of Y, i.e. the lowest marginal) to the receiver (the pool quoting
the lowest price of Y, i.e. the highest marginal). The transfer size is
found by halving from half the donor's allocation until the two prices
no longer cross; the loop stops once the relative donor/receiver price
gap falls below the configured tolerance.

All allocation arithmetic runs on a fixed dyadic grid: amounts are
integer multiples of a power-of-two quantum derived from the input
amount, so mass is conserved bit-exactly across any number of rounds and
identical inputs produce identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .pools import CONSTANT_SUM, PoolSpec, marginal, total_output

CONVERGED = "converged"
MAX_ROUNDS_HIT = "max_rounds_hit"
DEGENERATE_SINGLE_POOL = "degenerate_single_pool"

ALL_TO_BEST = "all_to_best"
MARGINAL_GREEDY = "marginal_greedy"

_SUM_RTOL = 1e-12


def grid_quantum(total_x: float) -> float:
    """Power-of-two mass quantum for a given input amount.

    total_x is an exact integer multiple of the quantum and every
    multiple in [0, total_x] is exactly representable, so adding and
    subtracting grid amounts is exact.
    """
    if not (total_x > 0.0 and math.isfinite(total_x)):
        raise ValueError(f"total_x must be positive and finite, got {total_x}")
    _, exp = math.frexp(total_x)  # total_x = m * 2**exp, m in [0.5, 1)
    return math.ldexp(1.0, exp - 53)


@dataclass(frozen=True)
class Allocation:
    """Nonnegative split of the input amount across pools."""

    amounts: tuple[float, ...]
    total_x: float

    def __post_init__(self) -> None:
        if not self.total_x > 0.0:
            raise ValueError(f"total_x must be positive, got {self.total_x}")
        if any(a < 0.0 for a in self.amounts):
            raise ValueError(f"negative amount in allocation: {self.amounts}")
        if abs(math.fsum(self.amounts) - self.total_x) > _SUM_RTOL * self.total_x:
            raise ValueError(
                f"amounts sum to {math.fsum(self.amounts)!r}, expected {self.total_x!r}"
            )

    def __len__(self) -> int:
        return len(self.amounts)


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-10
    max_rounds: int = 100_000
    max_halvings: int = 200
    init: str = ALL_TO_BEST
    greedy_chunks: int = 1000

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_rounds < 1 or self.max_halvings < 1:
            raise ValueError("max_rounds and max_halvings must be >= 1")
        if self.init not in (ALL_TO_BEST, MARGINAL_GREEDY):
            raise ValueError(f"unknown init strategy: {self.init!r}")
        if self.greedy_chunks < 1:
            raise ValueError("greedy_chunks must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    """One applied transfer: who, how much, and the state around it.

    Prices and gap_g are evaluated before the transfer; exhausted marks
    rounds where the halving search ran out of candidates and the
    smallest grid mass was applied regardless.
    """

    round_index: int
    donor: int
    receiver: int
    delta: float
    halvings: int
    price_donor: float
    price_receiver: float
    objective_before: float
    objective_after: float
    gap_g: float
    exhausted: bool = False


@dataclass(frozen=True)
class SolveResult:
    allocation: Allocation
    rounds: int
    trace: tuple[RoundRecord, ...]
    termination: str


@dataclass(frozen=True)
class PhiEvaluator:
    """Signed price spread after moving t from donor to receiver.

    phi(t) = (receiver marginal at x_R + t) - (donor marginal at x_D - t).
    A transfer of t is legitimate iff phi(t) >= 0 (prices do not cross).
    A constant_sum receiver quotes its rate up to and including exact
    depletion (zero price impact over its whole capacity), so legitimacy
    never binds from its side as long as transfers are capped there.
    """

    donor_pool: PoolSpec
    receiver_pool: PoolSpec
    x_donor: float
    x_receiver: float

    def __call__(self, t: float) -> float:
        return marginal(self.receiver_pool, self.x_receiver + t) - marginal(
            self.donor_pool, self.x_donor - t
        )


class DeltaSearch(NamedTuple):
    delta: float
    halvings: int
    exhausted: bool


def find_legitimate_delta(
    phi: Callable[[float], float],
    x_donor: float,
    max_halvings: int,
    *,
    quantum: float = 0.0,
    max_delta: float | None = None,
) -> DeltaSearch:
    """First candidate in x_D/2, x_D/4, ... with phi(delta) >= 0.

    With a positive quantum, candidates are floored to the grid and never
    drop below one quantum; max_delta additionally caps candidates (used
    for receivers with finite capacity). If every candidate fails, the
    last (smallest) one is returned with the exhausted flag set.
    """
    if not x_donor > 0.0:
        raise ValueError(f"x_donor must be positive, got {x_donor}")
    if not phi(0.0) > 0.0:
        raise RuntimeError(
            "phi(0) <= 0: donor and receiver prices are not strictly ordered"
        )
    if quantum:
        donor_units = round(x_donor / quantum)
        cap_units = None if max_delta is None else math.floor(max_delta / quantum)
        if cap_units is not None and cap_units < 1:
            raise ValueError("max_delta is below one quantum of transferable mass")
        delta = 0.0
        halvings = 0
        for halvings in range(max_halvings + 1):
            raw = donor_units >> (halvings + 1)
            units = max(raw, 1)
            if cap_units is not None:
                units = min(units, cap_units)
            delta = units * quantum
            if phi(delta) >= 0.0:
                return DeltaSearch(delta, halvings, False)
            if raw <= 1:
                break  # no smaller mass exists on the grid
        return DeltaSearch(delta, halvings, True)

    delta = x_donor
    halvings = 0
    for halvings in range(max_halvings + 1):
        delta = math.ldexp(x_donor, -(halvings + 1))
        if max_delta is not None:
            delta = min(delta, max_delta)
        if phi(delta) >= 0.0:
            return DeltaSearch(delta, halvings, False)
        if delta == 0.0:
            break  # underflowed to zero; nothing smaller to try
    return DeltaSearch(delta, halvings, True)


def _marginals(pools: Sequence[PoolSpec], amounts: Sequence[float]) -> list[float]:
    return [marginal(p, a) for p, a in zip(pools, amounts)]


def _donor_index(marginals: Sequence[float], amounts: Sequence[float]) -> int:
    funded = [i for i, a in enumerate(amounts) if a > 0.0]
    if not funded:
        raise ValueError("no funded pool: allocation is all zero")
    return min(funded, key=marginals.__getitem__)


def _receiver_index(marginals: Sequence[float]) -> int:
    return max(range(len(marginals)), key=lambda i: (marginals[i], -i))


def select_donor(pools: Sequence[PoolSpec], alloc: Allocation) -> int:
    """Funded pool with the highest price of Y (lowest marginal); ties go
    to the lowest index."""
    return _donor_index(_marginals(pools, alloc.amounts), alloc.amounts)


def select_receiver(pools: Sequence[PoolSpec], alloc: Allocation) -> int:
    """Pool (funded or not) with the lowest price of Y (highest
    marginal); ties go to the lowest index."""
    if not pools:
        raise ValueError("empty pool list")
    return _receiver_index(_marginals(pools, alloc.amounts))


def _price(marginal_value: float) -> float:
    return math.inf if marginal_value <= 0.0 else 1.0 / marginal_value


def relative_price_gap(pools: Sequence[PoolSpec], alloc: Allocation) -> float:
    """(P_D - P_R) / P_D for the current donor/receiver pair, in [0, 1].

    A depleted constant_sum donor has infinite price; the gap is then 1.
    If every pool is depleted the gap is 0 (nothing can improve).
    """
    marginals = _marginals(pools, alloc.amounts)
    m_d = marginals[_donor_index(marginals, alloc.amounts)]
    m_r = marginals[_receiver_index(marginals)]
    if m_r <= 0.0:
        return 0.0
    if m_d <= 0.0:
        return 1.0
    return (m_r - m_d) / m_r


def _init_units(
    pools: Sequence[PoolSpec],
    quantum: float,
    total_units: int,
    strategy: str,
    chunks: int,
) -> list[int]:
    n = len(pools)
    units = [0] * n
    if strategy == ALL_TO_BEST:
        spots = [marginal(p, 0.0) for p in pools]
        units[_receiver_index(spots)] = total_units
        return units
    if strategy != MARGINAL_GREEDY:
        raise ValueError(f"unknown init strategy: {strategy!r}")
    base, remainder = divmod(total_units, chunks)
    amounts = [0.0] * n
    for c in range(chunks):
        chunk_units = base + (1 if c < remainder else 0)
        if chunk_units == 0:
            continue
        best = _receiver_index(_marginals(pools, amounts))
        units[best] += chunk_units
        amounts[best] = units[best] * quantum
    return units


def init_allocation(
    pools: Sequence[PoolSpec],
    total_x: float,
    strategy: str = ALL_TO_BEST,
    chunks: int = 1000,
) -> Allocation:
    """Starting allocation.

    all_to_best puts the whole amount on the pool with the best spot
    price of Y (highest initial marginal). marginal_greedy splits the
    amount into `chunks` near-equal pieces and assigns each to the pool
    with the highest current marginal. A uniform split is deliberately
    not offered: transfers out of a pool that never earned its allocation
    can overshoot, and both greedy variants avoid that by construction.
    """
    if not pools:
        raise ValueError("empty pool list")
    if not total_x > 0.0:
        raise ValueError(f"total_x must be positive, got {total_x}")
    quantum = grid_quantum(total_x)
    total_units = round(total_x / quantum)
    units = _init_units(pools, quantum, total_units, strategy, chunks)
    return Allocation(tuple(u * quantum for u in units), total_x)


def _eligible_receiver(
    pools: Sequence[PoolSpec],
    marginals: Sequence[float],
    amounts: Sequence[float],
    quantum: float,
) -> int | None:
    """Receiver index, skipping constant_sum pools with no grid capacity
    left before depletion (they cannot absorb any positive mass)."""
    best = None
    best_marginal = -math.inf
    for i, pool in enumerate(pools):
        if pool.kind == CONSTANT_SUM:
            capacity = math.floor((pool.depletion_input - amounts[i]) / quantum)
            if capacity < 1:
                continue
        if marginals[i] > best_marginal:
            best = i
            best_marginal = marginals[i]
    return best


def solve(
    pools: Sequence[PoolSpec],
    total_x: float,
    config: SolverConfig | None = None,
) -> SolveResult:
    """Run the transfer loop to a relative price gap below epsilon.

    Per round: pick donor and receiver; stop as converged when they
    coincide or the gap is below epsilon; otherwise find a legitimate
    transfer by halving, apply it, and append a trace record. Receivers
    that are constant_sum pools are capped at their depletion input.
    """
    pools = tuple(pools)
    if not pools:
        raise ValueError("empty pool list")
    if not total_x > 0.0:
        raise ValueError(f"total_x must be positive, got {total_x}")
    config = config or SolverConfig()

    if len(pools) == 1:
        return SolveResult(
            Allocation((total_x,), total_x), 0, (), DEGENERATE_SINGLE_POOL
        )

    quantum = grid_quantum(total_x)
    total_units = round(total_x / quantum)
    units = _init_units(
        pools, quantum, total_units, config.init, config.greedy_chunks
    )
    amounts = [u * quantum for u in units]

    trace: list[RoundRecord] = []
    objective_now = total_output(pools, amounts)
    termination = MAX_ROUNDS_HIT
    for round_index in range(config.max_rounds):
        marginals = _marginals(pools, amounts)
        donor = _donor_index(marginals, amounts)
        receiver = _eligible_receiver(pools, marginals, amounts, quantum)
        if receiver is None or receiver == donor:
            termination = CONVERGED
            break
        m_d, m_r = marginals[donor], marginals[receiver]
        gap = 1.0 if m_d <= 0.0 else (m_r - m_d) / m_r
        if gap < config.epsilon:
            termination = CONVERGED
            break

        phi = PhiEvaluator(pools[donor], pools[receiver], amounts[donor], amounts[receiver])
        cap = None
        if pools[receiver].kind == CONSTANT_SUM:
            cap = pools[receiver].depletion_input - amounts[receiver]
        found = find_legitimate_delta(
            phi, amounts[donor], config.max_halvings, quantum=quantum, max_delta=cap
        )
        delta_units = round(found.delta / quantum)
        units[donor] -= delta_units
        units[receiver] += delta_units
        amounts[donor] = units[donor] * quantum
        amounts[receiver] = units[receiver] * quantum

        objective_next = total_output(pools, amounts)
        trace.append(
            RoundRecord(
                round_index=round_index,
                donor=donor,
                receiver=receiver,
                delta=found.delta,
                halvings=found.halvings,
                price_donor=_price(m_d),
                price_receiver=_price(m_r),
                objective_before=objective_now,
                objective_after=objective_next,
                gap_g=m_r - m_d,
                exhausted=found.exhausted,
            )
        )
        objective_now = objective_next

    return SolveResult(
        Allocation(tuple(amounts), total_x), len(trace), tuple(trace), termination
    )


def replay_amounts(
    pools: Sequence[PoolSpec], result: SolveResult
) -> list[tuple[float, ...]]:
    """Allocation before each round, plus the final state, reconstructed
    exactly by walking the trace backwards from the final allocation.

    Returns rounds+1 states; states[k] is the allocation round k saw and
    states[-1] is the final allocation. Exact because every delta is a
    grid multiple.
    """
    quantum = grid_quantum(result.allocation.total_x)
    units = [round(a / quantum) for a in result.allocation.amounts]
    states = [tuple(result.allocation.amounts)]
    for record in reversed(result.trace):
        delta_units = round(record.delta / quantum)
        units[record.donor] += delta_units
        units[record.receiver] -= delta_units
        states.append(tuple(u * quantum for u in units))
    states.reverse()
    return states
