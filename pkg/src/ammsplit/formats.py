"""Instance JSON parsing and CSV serialization.

Instance files look like:

    {"pools": [{"kind": "constant_product", "reserve_x": 100, "reserve_y": 100},
               {"kind": "constant_sum", "rate": 1.5, "reserve_y": 50}],
     "amount_in": 100,
     "epsilon": 1e-10,            // optional
     "max_rounds": 100000,        // optional
     "init": "all_to_best"}       // or {"marginal_greedy": 1000}

CSV numbers are written with 17 significant digits so files round-trip
exactly and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Any, Iterable, Sequence, TextIO

from .diagnostics import BoundReport
from .experiments import Table1Row
from .pools import CONSTANT_PRODUCT, CONSTANT_SUM, PoolSpec
from .transfer import ALL_TO_BEST, MARGINAL_GREEDY, SolveResult, SolverConfig

TRACE_COLUMNS = (
    "round",
    "donor",
    "receiver",
    "delta",
    "halvings",
    "price_donor",
    "price_receiver",
    "objective",
    "gap_g",
)

BOUNDS_COLUMNS = (
    "round",
    "h",
    "g",
    "improvement",
    "lemma3_rhs",
    "lemma3_pass",
    "lemma4_rhs",
    "lemma4_pass",
    "envelope",
    "rate_pass",
    "interval_lo",
    "interval_hi",
)

TABLE1_COLUMNS = (
    "s",
    "kappa",
    "rounds_all_to_best",
    "rounds_marginal_greedy",
    "objective",
    "oracle_objective",
    "h_end",
)


class InstanceFormatError(ValueError):
    """Malformed or invalid instance input; the message names the field."""


def fmt(value: float) -> str:
    return format(value, ".17g")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def _require_number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}.{key}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InstanceFormatError(f"{where}.{key}: must be finite, got {value!r}")
    return float(value)


def pool_from_json(obj: Any, where: str = "pool") -> PoolSpec:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object, got {obj!r}")
    kind = obj.get("kind")
    try:
        if kind == CONSTANT_PRODUCT:
            return PoolSpec.constant_product(
                _require_number(obj, "reserve_x", where),
                _require_number(obj, "reserve_y", where),
            )
        if kind == CONSTANT_SUM:
            return PoolSpec.constant_sum(
                _require_number(obj, "rate", where),
                _require_number(obj, "reserve_y", where),
            )
    except ValueError as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{where}: {exc}") from exc
    raise InstanceFormatError(
        f"{where}.kind: expected {CONSTANT_PRODUCT!r} or {CONSTANT_SUM!r}, got {kind!r}"
    )


def _init_from_json(value: Any) -> tuple[str, int]:
    if value is None or value == ALL_TO_BEST:
        return ALL_TO_BEST, SolverConfig().greedy_chunks
    if isinstance(value, dict) and set(value) == {MARGINAL_GREEDY}:
        chunks = value[MARGINAL_GREEDY]
        if isinstance(chunks, bool) or not isinstance(chunks, int) or chunks < 1:
            raise InstanceFormatError(
                f"init.marginal_greedy: expected a positive integer, got {chunks!r}"
            )
        return MARGINAL_GREEDY, chunks
    raise InstanceFormatError(
        f'init: expected "all_to_best" or {{"marginal_greedy": <chunks>}}, got {value!r}'
    )


def instance_from_json(
    obj: Any,
) -> tuple[tuple[PoolSpec, ...], float, SolverConfig]:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"instance: expected an object, got {obj!r}")
    raw_pools = obj.get("pools")
    if not isinstance(raw_pools, list) or not raw_pools:
        raise InstanceFormatError("pools: expected a nonempty array")
    pools = tuple(
        pool_from_json(p, where=f"pools[{i}]") for i, p in enumerate(raw_pools)
    )
    amount_in = _require_number(obj, "amount_in", "instance")
    if amount_in <= 0.0:
        raise InstanceFormatError(f"instance.amount_in: must be > 0, got {amount_in}")
    defaults = SolverConfig()
    epsilon = (
        _require_number(obj, "epsilon", "instance")
        if "epsilon" in obj
        else defaults.epsilon
    )
    max_rounds = obj.get("max_rounds", defaults.max_rounds)
    if isinstance(max_rounds, bool) or not isinstance(max_rounds, int):
        raise InstanceFormatError(
            f"instance.max_rounds: expected an integer, got {max_rounds!r}"
        )
    init, chunks = _init_from_json(obj.get("init"))
    try:
        config = SolverConfig(
            epsilon=epsilon, max_rounds=max_rounds, init=init, greedy_chunks=chunks
        )
    except ValueError as exc:
        raise InstanceFormatError(f"instance: {exc}") from exc
    return pools, amount_in, config


def load_instance(path: str) -> tuple[tuple[PoolSpec, ...], float, SolverConfig]:
    try:
        with open(path, encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return instance_from_json(obj)


def parse_init_flag(value: str) -> tuple[str, int]:
    """CLI form: "all_to_best", "marginal_greedy", or "marginal_greedy:N"."""
    if value == ALL_TO_BEST:
        return ALL_TO_BEST, SolverConfig().greedy_chunks
    name, _, chunk_text = value.partition(":")
    if name == MARGINAL_GREEDY:
        if not chunk_text:
            return MARGINAL_GREEDY, SolverConfig().greedy_chunks
        try:
            chunks = int(chunk_text)
        except ValueError as exc:
            raise InstanceFormatError(
                f"--init: bad chunk count {chunk_text!r}"
            ) from exc
        if chunks < 1:
            raise InstanceFormatError("--init: chunk count must be >= 1")
        return MARGINAL_GREEDY, chunks
    raise InstanceFormatError(
        f"--init: expected all_to_best or marginal_greedy[:chunks], got {value!r}"
    )


def trace_rows(result: SolveResult) -> list[list[str]]:
    return [
        [
            str(r.round_index),
            str(r.donor),
            str(r.receiver),
            fmt(r.delta),
            str(r.halvings),
            fmt(r.price_donor),
            fmt(r.price_receiver),
            fmt(r.objective_after),
            fmt(r.gap_g),
        ]
        for r in result.trace
    ]


def write_trace_csv(stream: TextIO, result: SolveResult) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    writer.writerows(trace_rows(result))


def write_bounds_csv(stream: TextIO, report: BoundReport) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(BOUNDS_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                str(row.round_index),
                fmt(row.h),
                _cell(row.g),
                _cell(row.improvement),
                _cell(row.lemma3_rhs),
                _cell(row.lemma3_pass),
                _cell(row.lemma4_rhs),
                _cell(row.lemma4_pass),
                _cell(row.envelope),
                _cell(row.rate_pass),
                fmt(row.interval_lo),
                fmt(row.interval_hi),
            ]
        )


def write_table1_csv(stream: TextIO, rows: Iterable[Table1Row]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE1_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                _cell(row.s),
                str(row.kappa),
                str(row.rounds_all_to_best),
                str(row.rounds_marginal_greedy),
                fmt(row.objective),
                fmt(row.oracle_objective),
                fmt(row.h_end),
            ]
        )


def format_table1(rows: Sequence[Table1Row]) -> str:
    header = f"{'s':>6} {'kappa':>6} {'rounds(a2b)':>12} {'rounds(greedy)':>14} {'objective':>20} {'oracle':>20} {'h_end':>12}"
    lines = [header]
    for row in rows:
        if row.error is not None:
            lines.append(f"{row.s:>6g} ERROR: {row.error}")
            continue
        lines.append(
            f"{row.s:>6g} {row.kappa:>6d} {row.rounds_all_to_best:>12d} "
            f"{row.rounds_marginal_greedy:>14d} {row.objective:>20.12f} "
            f"{row.oracle_objective:>20.12f} {row.h_end:>12.3e}"
        )
    return "\n".join(lines)
