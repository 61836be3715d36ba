"""Optimal split of a fixed-size swap across AMM pools.

The transfer solver moves allocation mass pairwise between pools until
their marginal prices agree to a relative tolerance; an independent
bisection oracle provides the exact optimum, and the diagnostics module
verifies the solver's per-round progress bounds on real traces.
"""

from .diagnostics import (
    BoundReport,
    RoundBounds,
    build_bound_report,
    check_gradient_estimate,
    check_improvement,
    check_linear_rate,
    check_nested_intervals,
    objective,
)
from .experiments import ExperimentRow, Table1Row, build_instance, run_table1, run_table1_both
from .oracle import OracleResult, brute_force, invert_marginal, solve_exact
from .pools import (
    CurvatureBounds,
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
from .transfer import (
    Allocation,
    DeltaSearch,
    PhiEvaluator,
    RoundRecord,
    SolveResult,
    SolverConfig,
    find_legitimate_delta,
    init_allocation,
    relative_price_gap,
    select_donor,
    select_receiver,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "BoundReport",
    "CurvatureBounds",
    "DeltaSearch",
    "ExperimentRow",
    "Kappa",
    "OracleResult",
    "PhiEvaluator",
    "PoolSpec",
    "RoundBounds",
    "RoundRecord",
    "SolveResult",
    "SolverConfig",
    "Table1Row",
    "build_bound_report",
    "build_instance",
    "brute_force",
    "check_gradient_estimate",
    "check_improvement",
    "check_linear_rate",
    "check_nested_intervals",
    "curvature",
    "find_legitimate_delta",
    "global_curvature_bounds",
    "global_kappa",
    "init_allocation",
    "invert_marginal",
    "marginal",
    "objective",
    "pool_curvature_bounds",
    "price_y_in_x",
    "relative_price_gap",
    "run_table1",
    "run_table1_both",
    "select_donor",
    "select_receiver",
    "solve",
    "solve_exact",
    "swap_out",
    "total_output",
]
