"""Benchmark orchestration: method dispatch, the results matrix, and the CSV
schema (single source of truth for reports and plots).

CSV columns (version 1, fixed order):
    Size, Inst, Method, Value, Time, Gap1, Gap2, IntervalGap

Method labels carry the resolved reduced width after an ``@`` sign
(e.g. ``pca-lb@8``); ``full`` has no width.  Missing quantities are ``-``.
Every row whose method produces a certified lower bound is checked against
the exact value when one exists; a violation aborts the run, by design.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import admm, analysis, reform
from .errors import InputError, SolverError
from .model import DroInstance

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ["Size", "Inst", "Method", "Value", "Time", "Gap1", "Gap2",
               "IntervalGap"]

METHODS = ("full", "pca-lb", "pca-ub", "odr-lb", "odr-ub", "odr-rlb",
           "heuristic-b")
LOWER_BOUND_METHODS = {"pca-lb", "odr-lb", "heuristic-b"}
UPPER_BOUND_METHODS = {"pca-ub", "odr-ub"}
SANDWICH_RTOL = 1e-6


@dataclass(frozen=True)
class RunSpec:
    """One method invocation: method name plus an optional reduced width
    (absolute int, or a fraction of the ambient dimension)."""

    method: str
    m1: int | float | None = None
    admm_config: admm.AdmmConfig | None = None
    time_limit: float = 300.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")

    def resolve_m1(self, instance: DroInstance) -> int | None:
        if self.method == "full":
            return None
        m, k = instance.m, instance.k
        if self.m1 is None:
            if self.method == "odr-rlb":
                return max(k - 1, 0)
            if self.method.startswith("pca"):
                return max(1, int(round(0.2 * m)))
            return k
        if isinstance(self.m1, float) and 0 < self.m1 <= 1:
            return max(1, int(round(self.m1 * m)))
        v = int(self.m1)
        if self.method == "odr-rlb" and not 0 <= v <= k:
            raise InputError(f"odr-rlb width {v} must lie in 0..{k}")
        if self.method != "odr-rlb" and not 1 <= v <= m:
            raise InputError(f"width {v} out of range 1..{m}")
        return v

    def label(self, instance: DroInstance) -> str:
        m1 = self.resolve_m1(instance)
        return self.method if m1 is None else f"{self.method}@{m1}"


@dataclass
class BoundReport:
    method: str
    value: float
    certified: bool
    wall_time: float
    iterations: int
    side: str                       # "lower", "upper", "exact"
    metrics: analysis.GapMetrics | None = None
    error: str | None = None


def heuristic_direction_of(instance: DroInstance) -> np.ndarray:
    """First nonzero intercept difference between pieces: the instance's
    decision-independent random cost direction."""
    pieces = instance.objective.pieces
    for j in range(1, len(pieces)):
        for i in range(j):
            d = pieces[j].d - pieces[i].d
            if np.linalg.norm(d) > 0:
                return d
    raise InputError("instance has no decision-independent random direction")


def run_method(instance: DroInstance, spec: RunSpec,
               full_value: float | None = None) -> BoundReport:
    """Dispatch one method on one instance.

    An infeasible fixed-map upper-bound problem yields the vacuous (but
    valid) bound +inf rather than an error.
    """
    m1 = spec.resolve_m1(instance)
    cfg = spec.admm_config or admm.AdmmConfig()
    method = spec.method
    try:
        if method == "full":
            value, sol = reform.solve_full(instance)
            rep = BoundReport(method=spec.label(instance), value=value,
                              certified=True, wall_time=0.0, iterations=0,
                              side="exact")
        elif method == "pca-lb":
            bv = reform.certify_lb(instance, np.eye(instance.m)[:, :m1])
            rep = BoundReport(spec.label(instance), bv.value, True,
                              bv.wall_time, bv.iterations, "lower")
        elif method == "pca-ub":
            try:
                bv = reform.certify_ub(instance, np.eye(instance.m)[:, :m1])
                rep = BoundReport(spec.label(instance), bv.value, True,
                                  bv.wall_time, bv.iterations, "upper")
            except SolverError as exc:
                if "PrimalInfeasible" not in str(exc):
                    raise
                rep = BoundReport(spec.label(instance), np.inf, True, 0.0, 0,
                                  "upper")
        elif method == "heuristic-b":
            b = analysis.heuristic_direction(
                instance, heuristic_direction_of(instance), m1)
            bv = reform.certify_lb(instance, b)
            rep = BoundReport(spec.label(instance), bv.value, True,
                              bv.wall_time, bv.iterations, "lower")
        elif method == "odr-lb":
            r = admm.run_lb(instance, m1, cfg)
            rep = BoundReport(spec.label(instance), r.certified_bound, True,
                              r.wall_time, r.iterations, "lower")
        elif method == "odr-ub":
            r = admm.run_ub(instance, m1, cfg)
            rep = BoundReport(spec.label(instance), r.certified_bound, True,
                              r.wall_time, r.iterations, "upper")
        else:  # odr-rlb
            r = admm.run_rlb(instance, m1, cfg)
            rep = BoundReport(spec.label(instance), r.certified_bound, True,
                              r.wall_time, r.iterations, "lower")
    except (SolverError, InputError) as exc:
        return BoundReport(method=spec.label(instance), value=np.nan,
                           certified=False, wall_time=0.0, iterations=0,
                           side="lower", error=str(exc))
    if full_value is not None and np.isfinite(rep.value):
        if rep.side == "lower":
            rep.metrics = analysis.gap_metrics(rep.value, None, full_value)
        elif rep.side == "upper":
            rep.metrics = analysis.gap_metrics(None, rep.value, full_value)
    return rep


class SandwichViolation(RuntimeError):
    """A certified bound landed on the wrong side of the exact value."""


def _check_tripwire(method: str, side: str, value: float,
                    full_value: float) -> None:
    slack = SANDWICH_RTOL * (1.0 + abs(full_value))
    base = method.split("@")[0]
    if base in LOWER_BOUND_METHODS and value > full_value + slack:
        raise SandwichViolation(
            f"certified lower bound {value!r} exceeds exact value "
            f"{full_value!r} ({method})")
    if base in UPPER_BOUND_METHODS and np.isfinite(value) \
            and value < full_value - slack:
        raise SandwichViolation(
            f"certified upper bound {value!r} undercuts exact value "
            f"{full_value!r} ({method})")


@dataclass
class MatrixCell:
    size: int
    inst_no: int
    instance: DroInstance
    spec: RunSpec


def run_matrix(cells: list[MatrixCell], include_times: bool = True) -> list[dict]:
    """Execute the grid; one CSV row per cell.

    The exact value for each instance (when a ``full`` cell is present) feeds
    the gap columns of its sibling cells; certified bounds are checked against
    it and a violation aborts the whole run.
    """
    pool_size = max(1, int(os.environ.get("ODR_DRO_THREADS", "1")))
    full_vals: dict[tuple[int, int], float] = {}

    def timed_run(cell: MatrixCell, full_value):
        import time as _t
        t0 = _t.perf_counter()
        rep = run_method(cell.instance, cell.spec, full_value)
        rep.wall_time = _t.perf_counter() - t0
        if rep.wall_time > cell.spec.time_limit:
            rep.error = (rep.error or "") + " time limit exceeded"
        return rep

    full_cells = [c for c in cells if c.spec.method == "full"]
    other_cells = [c for c in cells if c.spec.method != "full"]
    rows: list[tuple[MatrixCell, BoundReport]] = []

    def run_batch(batch, lookup_full):
        if pool_size == 1:
            return [timed_run(c, lookup_full(c)) for c in batch]
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            return list(pool.map(lambda c: timed_run(c, lookup_full(c)), batch))

    for cell, rep in zip(full_cells, run_batch(full_cells, lambda c: None)):
        if rep.error is None:
            full_vals[(cell.size, cell.inst_no)] = rep.value
        rows.append((cell, rep))
    lookup = lambda c: full_vals.get((c.size, c.inst_no))
    for cell, rep in zip(other_cells, run_batch(other_cells, lookup)):
        fv = lookup(cell)
        if fv is not None and rep.error is None and np.isfinite(rep.value):
            _check_tripwire(rep.method, rep.side, rep.value, fv)
        rows.append((cell, rep))

    rows.sort(key=lambda cr: (cr[0].size, cr[0].inst_no,
                              _method_order(cr[1].method)))
    out = []
    for cell, rep in rows:
        out.append(_row_dict(cell, rep, include_times))
    return out


def _method_order(label: str) -> tuple:
    base = label.split("@")[0]
    return (METHODS.index(base), label)


def _fmt(x, nd=6) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x) and np.isnan(x)):
        return "-"
    if isinstance(x, float) and np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{nd}f}"


def _row_dict(cell: MatrixCell, rep: BoundReport, include_times: bool) -> dict:
    metrics = rep.metrics
    row = {
        "Size": str(cell.size),
        "Inst": str(cell.inst_no),
        "Method": rep.method,
        "Value": "-" if rep.error else _fmt(rep.value),
        "Time": _fmt(rep.wall_time, 3) if include_times else "-",
        "Gap1": _fmt(metrics.gap1, 4) if metrics else "-",
        "Gap2": _fmt(metrics.gap2, 4) if metrics else "-",
        "IntervalGap": "-",
    }
    return row


def fill_interval_gaps(rows: list[dict]) -> None:
    """Pair each lower bound with its instance's tightest computed upper bound
    (the alternation's certified upper bound when present)."""
    by_inst: dict[tuple[str, str], dict[str, float]] = {}
    for row in rows:
        key = (row["Size"], row["Inst"])
        if row["Value"] in ("-",):
            continue
        val = float(row["Value"]) if row["Value"] not in ("inf", "-inf") \
            else (np.inf if row["Value"] == "inf" else -np.inf)
        by_inst.setdefault(key, {})[row["Method"]] = val
    for row in rows:
        base = row["Method"].split("@")[0]
        key = (row["Size"], row["Inst"])
        vals = by_inst.get(key, {})
        if base in LOWER_BOUND_METHODS and row["Value"] != "-":
            lower = float(row["Value"])
            upper = None
            if base == "pca-lb":
                mate = "pca-ub@" + row["Method"].split("@")[1]
                upper = vals.get(mate)
            if upper is None:
                ubs = [v for k_, v in vals.items()
                       if k_.split("@")[0] in UPPER_BOUND_METHODS]
                upper = min(ubs) if ubs else None
            if upper is not None:
                gm = analysis.gap_metrics(lower, upper)
                row["IntervalGap"] = _fmt(gm.interval_gap, 4)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise InputError(f"unexpected CSV columns {reader.fieldnames}")
    return list(reader)
