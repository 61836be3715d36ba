"""Trading-curve math for AMM pools.

Two pool kinds are supported: constant-product pools quoted by reserves
(x, y), and constant-sum pools quoted by a fixed rate with a finite Y
reserve. Everything is closed form: output, marginal price, curvature,
and the curvature extremes over a trade range.

Sign conventions: the output curve E(x_in) is nonnegative, increasing
and concave, so E'' <= 0 everywhere; `curvature` returns the signed
second derivative, while the bounds below are stated for -E''.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

CONSTANT_PRODUCT = "constant_product"
CONSTANT_SUM = "constant_sum"


@dataclass(frozen=True)
class PoolSpec:
    """One pool: curve kind plus the parameters defining it.

    constant_product uses (reserve_x, reserve_y); constant_sum uses
    (rate, reserve_y) and ignores reserve_x. Instances are immutable.
    """

    kind: str
    reserve_x: float = 0.0
    reserve_y: float = 0.0
    rate: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == CONSTANT_PRODUCT:
            if not (self.reserve_x > 0.0 and self.reserve_y > 0.0):
                raise ValueError(
                    "constant_product pool requires reserve_x > 0 and reserve_y > 0"
                )
        elif self.kind == CONSTANT_SUM:
            if not self.rate > 0.0:
                raise ValueError("constant_sum pool requires rate > 0")
            if not self.reserve_y > 0.0:
                raise ValueError("constant_sum pool requires reserve_y > 0")
        else:
            raise ValueError(f"unknown pool kind: {self.kind!r}")

    @classmethod
    def constant_product(cls, reserve_x: float, reserve_y: float) -> "PoolSpec":
        return cls(CONSTANT_PRODUCT, float(reserve_x), float(reserve_y))

    @classmethod
    def constant_sum(cls, rate: float, reserve_y: float) -> "PoolSpec":
        return cls(CONSTANT_SUM, 0.0, float(reserve_y), float(rate))

    @property
    def depletion_input(self) -> float:
        """Input that empties the Y reserve (inf for constant_product)."""
        if self.kind == CONSTANT_SUM:
            return self.reserve_y / self.rate
        return math.inf


def _check_x_in(x_in: float) -> None:
    if not x_in >= 0.0:
        raise ValueError(f"x_in must be nonnegative, got {x_in}")


def swap_out(pool: PoolSpec, x_in: float) -> float:
    """Amount of Y received for selling x_in of X into the pool."""
    _check_x_in(x_in)
    if pool.kind == CONSTANT_PRODUCT:
        return pool.reserve_y * x_in / (pool.reserve_x + x_in)
    return min(pool.rate * x_in, pool.reserve_y)


def marginal(pool: PoolSpec, x_in: float) -> float:
    """Marginal price of X in Y after selling x_in (slope of the curve).

    A constant_sum pool quotes its rate up to and including the exact
    depletion input (the one-sided slope from below) and 0 strictly past
    it; the closed boundary keeps a pool filled exactly to depletion from
    quoting a free exit.
    """
    _check_x_in(x_in)
    if pool.kind == CONSTANT_PRODUCT:
        denom = pool.reserve_x + x_in
        return pool.reserve_x * pool.reserve_y / (denom * denom)
    return pool.rate if x_in <= pool.depletion_input else 0.0


def price_y_in_x(pool: PoolSpec, x_in: float) -> float:
    """Price of Y in X: reciprocal marginal, inf once depleted."""
    m = marginal(pool, x_in)
    if m <= 0.0:
        return math.inf
    return 1.0 / m


def curvature(pool: PoolSpec, x_in: float) -> float:
    """Signed second derivative of the output curve (always <= 0)."""
    _check_x_in(x_in)
    if pool.kind == CONSTANT_PRODUCT:
        denom = pool.reserve_x + x_in
        return -2.0 * pool.reserve_x * pool.reserve_y / (denom * denom * denom)
    return 0.0


def total_output(pools: Sequence[PoolSpec], amounts: Sequence[float]) -> float:
    """Sum of outputs for one amount per pool (exactly-rounded sum)."""
    return math.fsum(swap_out(p, a) for p, a in zip(pools, amounts, strict=True))


@dataclass(frozen=True)
class CurvatureBounds:
    """Extremes of -E'' over [0, x_cap]: mu <= -E''(x) <= L."""

    smoothness: float
    strong_concavity: float
    x_cap: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.strong_concavity <= self.smoothness:
            raise ValueError(
                f"need 0 <= strong_concavity <= smoothness, got "
                f"{self.strong_concavity} / {self.smoothness}"
            )


def pool_curvature_bounds(pool: PoolSpec, x_cap: float) -> CurvatureBounds:
    """Curvature extremes for a single pool over [0, x_cap].

    -E'' is monotone decreasing for both supported kinds, so the extremes
    sit at the range endpoints; evaluating `curvature` there keeps the
    bounds ulp-consistent with interior evaluations. For constant_product
    these equal 2y/x^2 at 0 and 2xy/(x+x_cap)^3 at x_cap; constant_sum is
    flat (both zero).
    """
    if not x_cap > 0.0:
        raise ValueError(f"x_cap must be positive, got {x_cap}")
    return CurvatureBounds(-curvature(pool, 0.0), -curvature(pool, x_cap), x_cap)


def global_curvature_bounds(
    pools: Iterable[PoolSpec], x_cap: float
) -> CurvatureBounds:
    """Worst-case bounds across pools: largest L, smallest mu."""
    per_pool = [pool_curvature_bounds(p, x_cap) for p in pools]
    if not per_pool:
        raise ValueError("empty pool list")
    return CurvatureBounds(
        max(b.smoothness for b in per_pool),
        min(b.strong_concavity for b in per_pool),
        x_cap,
    )


@dataclass(frozen=True)
class Kappa:
    """Liquidity heterogeneity: global L over global mu; inf when any
    pool is flat (mu = 0)."""

    value: float

    def __post_init__(self) -> None:
        if not self.value >= 1.0:
            raise ValueError(f"kappa must be >= 1 (or inf), got {self.value}")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def rounded(self) -> int:
        """Round half up to the nearest integer, for reporting."""
        if not self.is_finite:
            raise ValueError("kappa is infinite; no integer rounding")
        return math.floor(self.value + 0.5)


def global_kappa(pools: Sequence[PoolSpec], x_cap: float) -> Kappa:
    """Ratio of the global smoothness to the global strong concavity."""
    if not pools:
        raise ValueError("empty pool list")
    bounds = global_curvature_bounds(pools, x_cap)
    if bounds.strong_concavity == 0.0:
        return Kappa(math.inf)
    return Kappa(bounds.smoothness / bounds.strong_concavity)
