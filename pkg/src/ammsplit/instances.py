"""Seeded random instance generation for property checks.

Pool count uniform in [2, max_pools]; reserves log-uniform in [10, 1e6]
per side independently; input amount a uniform fraction of the smallest
X reserve (optionally capped). Spans curvature ratios from ~1 to ~1e6
without forcing depletion.
"""

from __future__ import annotations

import random

from .pools import PoolSpec

RESERVE_LOG10_RANGE = (1.0, 6.0)


def random_instance(
    rng: random.Random,
    max_pools: int = 10,
    max_total: float | None = None,
) -> tuple[tuple[PoolSpec, ...], float]:
    n = rng.randint(2, max_pools)
    lo, hi = RESERVE_LOG10_RANGE
    pools = tuple(
        PoolSpec.constant_product(
            10.0 ** rng.uniform(lo, hi), 10.0 ** rng.uniform(lo, hi)
        )
        for _ in range(n)
    )
    ceiling = min(p.reserve_x for p in pools)
    if max_total is not None:
        ceiling = min(ceiling, max_total)
    total_x = rng.uniform(1e-6, 1.0) * ceiling
    return pools, total_x
