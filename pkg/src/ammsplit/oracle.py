"""Independent reference solvers for the split problem.

Two routes that share no code with the transfer loop: a bisection on the
common marginal price (the equal-marginal-price optimality condition,
inverted in closed form per pool) and, for up to three pools, an
exhaustive simplex-grid search. The bisection result carries a
certificate: every funded pool's marginal sits within tol of lambda*,
and every unfunded pool's spot marginal is at most lambda* + tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .pools import CONSTANT_PRODUCT, CONSTANT_SUM, PoolSpec, marginal, swap_out
from .transfer import Allocation

_BISECTION_ITERATIONS = 200


class OracleConvergenceError(RuntimeError):
    """Bisection could not match the target amount; never silent."""


@dataclass(frozen=True)
class OracleResult:
    allocation: Allocation
    lambda_star: float
    objective: float


def invert_marginal(pool: PoolSpec, lam: float) -> float:
    """Input amount at which the pool's marginal equals lam.

    Clamped to 0 when the spot marginal is already at or below lam. A
    constant_sum pool has no unique root: this returns its demand lower
    envelope — 0 for lam >= rate, the full depletion input for lam < rate
    (flat pools absorb residual mass separately in solve_exact).
    """
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    if pool.kind == CONSTANT_PRODUCT:
        root = math.sqrt(pool.reserve_x * pool.reserve_y / lam) - pool.reserve_x
        return max(0.0, root)
    return pool.depletion_input if lam < pool.rate else 0.0


def total_demand(pools: Sequence[PoolSpec], lam: float) -> float:
    """Total input absorbed at marginal price lam; non-increasing in lam."""
    return math.fsum(invert_marginal(p, lam) for p in pools)


def _solve_all_constant_sum(
    pools: Sequence[PoolSpec], total_x: float
) -> OracleResult:
    # Flat curves: fill pools by descending rate until the amount is
    # placed; mass beyond everyone's depletion buys nothing and is parked
    # in the last pool.
    order = sorted(range(len(pools)), key=lambda i: (-pools[i].rate, i))
    amounts = [0.0] * len(pools)
    remaining = total_x
    lambda_star = pools[order[-1]].rate
    for i in order:
        take = min(remaining, pools[i].depletion_input)
        amounts[i] = take
        remaining -= take
        if remaining <= 0.0:
            lambda_star = pools[i].rate
            break
    if remaining > 0.0:
        amounts[order[-1]] += remaining
        lambda_star = 0.0
    allocation = Allocation(tuple(amounts), total_x)
    objective = math.fsum(swap_out(p, a) for p, a in zip(pools, amounts))
    return OracleResult(allocation, lambda_star, objective)


def solve_exact(
    pools: Sequence[PoolSpec],
    total_x: float,
    tol: float = 1e-9,
    callback: Callable[[float, float], None] | None = None,
) -> OracleResult:
    """Optimal allocation via bisection on the shared marginal price.

    Brackets lambda between the largest spot marginal (demand 0) and a
    value low enough that demand covers total_x, then bisects; pools
    whose rate coincides with lambda* (flat pools) absorb mass after the
    curved pools, capped at depletion, and any remaining residual lands
    on the pool with the least curvature at its allocation. callback, if
    given, receives (lambda, demand) at every bisection step.
    """
    pools = tuple(pools)
    if not pools:
        raise ValueError("empty pool list")
    if not total_x > 0.0:
        raise ValueError(f"total_x must be positive, got {total_x}")

    if all(p.kind == CONSTANT_SUM for p in pools):
        return _solve_all_constant_sum(pools, total_x)

    lam_hi = max(marginal(p, 0.0) for p in pools)
    positive_ends = [m for m in (marginal(p, total_x) for p in pools) if m > 0.0]
    lam_lo = min(positive_ends) if positive_ends else lam_hi
    for _ in range(_BISECTION_ITERATIONS):
        if lam_lo < lam_hi and total_demand(pools, lam_lo) >= total_x:
            break
        lam_lo *= 0.5
    else:
        raise OracleConvergenceError("could not bracket the marginal price")

    lo, hi = lam_lo, lam_hi
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # interval at floating-point resolution
        demand = total_demand(pools, mid)
        if callback is not None:
            callback(mid, demand)
        if demand >= total_x:
            lo = mid
        else:
            hi = mid
    lambda_star = 0.5 * (lo + hi)

    # Curved pools take their closed-form share; flat pools at the final
    # price take what is left, by index, capped at depletion.
    amounts = [0.0] * len(pools)
    flat = []
    for i, pool in enumerate(pools):
        if pool.kind == CONSTANT_SUM:
            if pool.rate > hi:
                amounts[i] = pool.depletion_input
            elif pool.rate >= lo:
                flat.append(i)
        else:
            amounts[i] = invert_marginal(pool, lambda_star)
    residual = total_x - math.fsum(amounts)
    for i in flat:
        if residual <= 0.0:
            break
        amounts[i] = min(residual, pools[i].depletion_input)
        residual = total_x - math.fsum(amounts)

    # Park the (ulp-scale) closing residual on the flattest pool that can
    # absorb it without breaking the price certificate: a flat-window
    # constant_sum pool with spare capacity (zero curvature, marginal
    # stays at lambda*) or else the least-curved funded curved pool.
    if residual != 0.0:
        candidates: list[tuple[float, int]] = []
        for i, pool in enumerate(pools):
            adjusted = amounts[i] + residual
            if pool.kind == CONSTANT_SUM:
                if i in flat and 0.0 <= adjusted <= pool.depletion_input:
                    candidates.append((0.0, i))
            elif amounts[i] > 0.0 and adjusted >= 0.0:
                denom = pool.reserve_x + amounts[i]
                candidates.append(
                    (2.0 * pool.reserve_x * pool.reserve_y / denom**3, i)
                )
        if not candidates:
            # Degenerate corner (no funded curved pool, no flat window):
            # accept the least-curved pool that stays feasible.
            for i, pool in enumerate(pools):
                if pool.kind == CONSTANT_PRODUCT and amounts[i] + residual >= 0.0:
                    denom = pool.reserve_x + amounts[i]
                    candidates.append(
                        (2.0 * pool.reserve_x * pool.reserve_y / denom**3, i)
                    )
        if not candidates:
            raise OracleConvergenceError(
                f"residual {residual!r} has no pool to absorb it"
            )
        target = min(candidates)[1]
        amounts[target] += residual

    final_sum = math.fsum(amounts)
    if abs(final_sum - total_x) > max(tol, 1e-12) * total_x:
        raise OracleConvergenceError(
            f"allocated {final_sum!r} of {total_x!r} (tol {tol})"
        )

    allocation = Allocation(tuple(amounts), total_x)
    objective = math.fsum(swap_out(p, a) for p, a in zip(pools, amounts))
    return OracleResult(allocation, lambda_star, objective)


def _swap_out_grid(pool: PoolSpec, x_in: np.ndarray) -> np.ndarray:
    if pool.kind == CONSTANT_PRODUCT:
        return pool.reserve_y * x_in / (pool.reserve_x + x_in)
    return np.minimum(pool.rate * x_in, pool.reserve_y)


def brute_force(
    pools: Sequence[PoolSpec], total_x: float, grid_points: int
) -> Allocation:
    """Exhaustive search over the simplex grid {i * total_x / G}.

    Supports up to three pools; the best grid point is within
    O(total_x * max L / G) of optimal in objective. Ties resolve to the
    lexicographically first grid point.
    """
    pools = tuple(pools)
    if not 1 <= len(pools) <= 3:
        raise ValueError("brute force supports 1 to 3 pools")
    if grid_points < 10:
        raise ValueError("grid_points must be >= 10")
    if not total_x > 0.0:
        raise ValueError(f"total_x must be positive, got {total_x}")

    step_grid = np.arange(grid_points + 1) * (total_x / grid_points)
    if len(pools) == 1:
        return Allocation((total_x,), total_x)

    if len(pools) == 2:
        x0 = step_grid
        x1 = np.maximum(total_x - x0, 0.0)
        values = _swap_out_grid(pools[0], x0) + _swap_out_grid(pools[1], x1)
        best = int(np.argmax(values))
        return Allocation((float(x0[best]), float(x1[best])), total_x)

    best_value = -math.inf
    best_point = (total_x, 0.0, 0.0)
    for i in range(grid_points + 1):
        x0 = float(step_grid[i])
        x1 = step_grid[: grid_points - i + 1]
        x2 = np.maximum(total_x - x0 - x1, 0.0)
        values = (
            swap_out(pools[0], x0)
            + _swap_out_grid(pools[1], x1)
            + _swap_out_grid(pools[2], x2)
        )
        j = int(np.argmax(values))
        if values[j] > best_value:
            best_value = float(values[j])
            best_point = (float(x0), float(x1[j]), float(x2[j]))
    return Allocation(best_point, total_x)
