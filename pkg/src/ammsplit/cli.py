"""Command-line front end.

Subcommands:
  solve   — solve an instance JSON file, optionally dumping trace/bounds CSV
  table1  — reproduce the two-tier kappa/rounds sweep
  check   — random-instance property verification (solver vs oracle vs bounds)

Exit codes are the machine contract: 0 success, 1 input error,
2 non-convergence, 3 reproduction mismatch, 4 property failure.
"""

from __future__ import annotations

import argparse
import math
import random
import sys
from typing import Sequence

from . import diagnostics, formats
from .experiments import TABLE1_S_VALUES, reference_kappa, run_table1_both
from .instances import random_instance
from .oracle import solve_exact
from .pools import total_output
from .transfer import (
    CONVERGED,
    DEGENERATE_SINGLE_POOL,
    MAX_ROUNDS_HIT,
    SolverConfig,
    replay_amounts,
    solve,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_MISMATCH = 3
EXIT_PROPERTY = 4

ORACLE_MATCH_RTOL = 1e-8


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ammsplit",
        description="Split a fixed sell amount optimally across AMM pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance JSON file")
    p_solve.add_argument("instance", help="path to the instance JSON")
    p_solve.add_argument("--epsilon", type=float, help="relative price gap tolerance")
    p_solve.add_argument("--max-rounds", type=int, help="round cap")
    p_solve.add_argument(
        "--init", help="all_to_best or marginal_greedy[:chunks] (overrides the file)"
    )
    p_solve.add_argument(
        "--with-oracle",
        action="store_true",
        help="also run the exact oracle and report the optimality gap",
    )
    p_solve.add_argument("--trace", metavar="PATH", help="write the round trace CSV")
    p_solve.add_argument(
        "--bounds", metavar="PATH", help="write the bound report CSV (runs the oracle)"
    )
    p_solve.set_defaults(handler=cmd_solve)

    p_table = sub.add_parser("table1", help="reproduce the kappa/rounds sweep")
    p_table.add_argument("--csv", metavar="PATH", help="also write the rows as CSV")
    p_table.set_defaults(handler=cmd_table1)

    p_check = sub.add_parser("check", help="verify bounds on random instances")
    p_check.add_argument("--seed", type=int, default=42)
    p_check.add_argument("--instances", type=int, default=100)
    p_check.set_defaults(handler=cmd_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except formats.InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def cmd_solve(args: argparse.Namespace) -> int:
    pools, amount_in, config = formats.load_instance(args.instance)
    overrides = {}
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.max_rounds is not None:
        overrides["max_rounds"] = args.max_rounds
    if args.init is not None:
        init, chunks = formats.parse_init_flag(args.init)
        overrides["init"] = init
        overrides["greedy_chunks"] = chunks
    if overrides:
        try:
            config = SolverConfig(
                epsilon=overrides.get("epsilon", config.epsilon),
                max_rounds=overrides.get("max_rounds", config.max_rounds),
                max_halvings=config.max_halvings,
                init=overrides.get("init", config.init),
                greedy_chunks=overrides.get("greedy_chunks", config.greedy_chunks),
            )
        except ValueError as exc:
            raise formats.InstanceFormatError(str(exc)) from exc

    result = solve(pools, amount_in, config)
    final_objective = total_output(pools, result.allocation.amounts)

    print(f"termination: {result.termination}")
    print(f"rounds: {result.rounds}")
    print("allocation: " + " ".join(formats.fmt(a) for a in result.allocation.amounts))
    lo, hi = diagnostics.final_interval(pools, result.allocation)
    print(f"final price interval (Y per X): [{formats.fmt(lo)}, {formats.fmt(hi)}]")
    print(f"objective: {formats.fmt(final_objective)}")

    oracle_result = None
    if args.with_oracle or args.bounds:
        oracle_result = solve_exact(pools, amount_in)
    if args.with_oracle and oracle_result is not None:
        h_end = oracle_result.objective - final_objective
        rel = h_end / oracle_result.objective if oracle_result.objective else 0.0
        print(f"oracle objective: {formats.fmt(oracle_result.objective)}")
        print(f"h_end: {formats.fmt(h_end)}")
        print(f"relative optimality gap: {formats.fmt(rel)}")

    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as stream:
            formats.write_trace_csv(stream, result)
    if args.bounds and oracle_result is not None:
        report = diagnostics.build_bound_report(pools, result, oracle_result.objective)
        with open(args.bounds, "w", encoding="utf-8", newline="") as stream:
            formats.write_bounds_csv(stream, report)

    if result.termination == MAX_ROUNDS_HIT:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_table1(args: argparse.Namespace) -> int:
    rows = run_table1_both()
    print(formats.format_table1(rows))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as stream:
            formats.write_table1_csv(stream, rows)
    status = EXIT_OK
    for row in rows:
        if row.error is not None:
            print(f"FAIL s={row.s:g}: {row.error}", file=sys.stderr)
            status = EXIT_MISMATCH
        elif not row.kappa_match:
            print(
                f"FAIL s={row.s:g}: kappa {row.kappa} != expected {reference_kappa(row.s)}",
                file=sys.stderr,
            )
            status = EXIT_MISMATCH
        elif not row.oracle_match:
            print(
                f"FAIL s={row.s:g}: objective differs from the oracle beyond "
                f"{ORACLE_MATCH_RTOL:g} relative",
                file=sys.stderr,
            )
            status = EXIT_MISMATCH
    if status == EXIT_OK:
        print(f"all {len(rows)} rows match the reference kappa and the oracle")
    return status


def cmd_check(args: argparse.Namespace) -> int:
    if args.instances < 1:
        print("error: --instances must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    rng = random.Random(args.seed)
    config = SolverConfig()
    min_improvement_slack = math.inf
    min_gradient_slack = math.inf
    min_envelope_margin = math.inf
    max_rel_gap = -math.inf
    rounds_total = 0
    failures: list[str] = []

    for index in range(args.instances):
        pools, total_x = random_instance(rng)
        result = solve(pools, total_x, config)
        if result.termination != CONVERGED and result.termination != DEGENERATE_SINGLE_POOL:
            failures.append(f"instance {index}: termination={result.termination}")
            continue
        oracle_result = solve_exact(pools, total_x)
        report = diagnostics.build_bound_report(pools, result, oracle_result.objective)
        rounds_total += result.rounds

        final_objective = total_output(pools, result.allocation.amounts)
        rel_gap = (
            (oracle_result.objective - final_objective) / oracle_result.objective
        )
        max_rel_gap = max(max_rel_gap, rel_gap)
        if abs(rel_gap) > ORACLE_MATCH_RTOL:
            failures.append(
                f"instance {index}: relative optimality gap {rel_gap:.3e}"
            )

        for state in replay_amounts(pools, result):
            if math.fsum(state) != total_x or min(state) < 0.0:
                failures.append(f"instance {index}: infeasible intermediate state")
                break

        for row in report.rows:
            for flag, label in (
                (row.lemma3_pass, "improvement bound"),
                (row.lemma4_pass, "gradient estimate"),
                (row.rate_pass, "rate envelope"),
                (row.nested, "interval nesting"),
            ):
                if flag is False:
                    failures.append(
                        f"instance {index} round {row.round_index}: {label} failed"
                    )
            if row.lemma3_pass is not None and row.improvement is not None:
                min_improvement_slack = min(
                    min_improvement_slack, row.improvement - row.lemma3_rhs
                )
            if row.lemma4_pass is not None and row.g is not None:
                min_gradient_slack = min(min_gradient_slack, row.g - row.lemma4_rhs)
            if row.rate_pass is not None:
                min_envelope_margin = min(min_envelope_margin, row.envelope - row.h)

    print(f"checked {args.instances} instances (seed {args.seed})")
    print(f"total rounds: {rounds_total}")
    if min_improvement_slack < math.inf:
        print(f"min improvement-bound slack: {formats.fmt(min_improvement_slack)}")
    if min_gradient_slack < math.inf:
        print(f"min gradient-estimate slack: {formats.fmt(min_gradient_slack)}")
    if min_envelope_margin < math.inf:
        print(f"min envelope margin: {formats.fmt(min_envelope_margin)}")
    if max_rel_gap > -math.inf:
        print(f"max relative optimality gap: {formats.fmt(max_rel_gap)}")

    if failures:
        for line in failures[:20]:
            print(f"FAIL (seed {args.seed}): {line}", file=sys.stderr)
        print(f"{len(failures)} failures", file=sys.stderr)
        return EXIT_PROPERTY
    print("all bounds hold")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
