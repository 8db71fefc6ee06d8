"""Run solvers over instance sets and tabulate results as distance, vehicles, discharge, time and cost.

A report row is ``dataset,nC,nS,method,d,v,ed,t,cost`` where ``d`` is the
total distance, ``v`` the vehicles used, ``ed`` the energy discharged,
``t`` solver wall time in seconds and ``cost = y1 d + y2 v - y3 ed / R``.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import re
import statistics
import time
from dataclasses import dataclass
from importlib import resources

from .core import DEFAULT_WEIGHTS, CostWeights, InfeasibleError, Instance, Solution
from .dataio import GenParams
from .exact import SearchLimits, solve_exact
from .ga import GaConfig, run_ga

COLUMNS = ("dataset", "nC", "nS", "method", "d", "v", "ed", "t", "cost")
METHODS = ("exact", "ga", "rl")


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    nC: int | None
    nS: int | None
    method: str
    d: float | None
    v: float | None
    ed: float | None
    t: float | None
    cost: float | None

    @property
    def feasible(self) -> bool:
        return self.cost is not None


def row_from_solution(dataset: str, instance: Instance, method: str, solution: Solution, seconds: float) -> ReportRow:
    m = solution.metrics
    return ReportRow(dataset, len(instance.customers), len(instance.stations), method,
                     m.total_distance, float(m.vehicles_used), m.energy_discharged, seconds, m.cost)


def infeasible_row(dataset: str, instance: Instance, method: str, seconds: float) -> ReportRow:
    return ReportRow(dataset, len(instance.customers), len(instance.stations), method, None, None, None, seconds, None)


def row_cost(row: ReportRow, weights: CostWeights = DEFAULT_WEIGHTS, discharge_rate: float = 1.0) -> float:
    return weights.y1 * row.d + weights.y2 * row.v - weights.y3 * row.ed / discharge_rate


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(rows, include_time: bool = True) -> str:
    """Machine format.  ``include_time=False`` blanks the wall-time column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        vals = [getattr(r, c) for c in COLUMNS]
        if not include_time:
            vals[COLUMNS.index("t")] = None
        w.writerow([_cell(v) for v in vals])
    return buf.getvalue()


def _opt(cast, text):
    text = text.strip()
    return cast(text) if text else None


def read_report(text: str) -> list:
    """Parse report CSV; raises ValueError on a bad header or a malformed cell."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty report") from None
    if tuple(h.strip() for h in header) != COLUMNS:
        raise ValueError(f"report header must be {','.join(COLUMNS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
        try:
            rows.append(ReportRow(
                rec[0].strip(), _opt(int, rec[1]), _opt(int, rec[2]), rec[3].strip(),
                _opt(float, rec[4]), _opt(float, rec[5]), _opt(float, rec[6]), _opt(float, rec[7]),
                _opt(float, rec[8]),
            ))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return rows


def text_table(rows) -> str:
    """Aligned presentation table (two decimals)."""
    cells = [list(COLUMNS)]
    for r in rows:
        line = []
        for c in COLUMNS:
            v = getattr(r, c)
            line.append("-" if v is None else (f"{v:.2f}" if isinstance(v, float) else str(v)))
        cells.append(line)
    widths = [max(len(row[k]) for row in cells) for k in range(len(COLUMNS))]
    return "\n".join("  ".join(s.rjust(wd) for s, wd in zip(row, widths)) for row in cells) + "\n"


def family_of(row: ReportRow) -> str:
    """Dataset family: layout letters plus type digit plus node count, e.g. ``C1_25``.

    Names already in family form are returned unchanged.
    """
    if re.fullmatch(r"[A-Za-z]+\d_\d+", row.dataset):
        return row.dataset
    m = re.match(r"([A-Za-z]+)(\d)", row.dataset)
    size = (row.nC or 0) + (row.nS or 0)
    return f"{m.group(1).upper()}{m.group(2)}_{size}" if m else row.dataset


def aggregate(rows) -> list:
    """Mean of the feasible rows per (family, method), in order of first appearance."""
    groups = {}
    for r in rows:
        if r.feasible:
            groups.setdefault((family_of(r), r.method), []).append(r)
    out = []
    for (fam, method), members in groups.items():
        def mean(attr):
            return statistics.fmean(getattr(m, attr) for m in members)
        out.append(ReportRow(fam, members[0].nC, members[0].nS, method, mean("d"), mean("v"),
                             mean("ed"), mean("t"), mean("cost")))
    return out


# -- solving -----------------------------------------------------------------

def solve(method: str, instance: Instance, seed: int = 0, ga_config: GaConfig | None = None,
          limits: SearchLimits | None = None, network=None):
    """``(solution, seconds)`` with the clock around the solver call only."""
    if method == "exact":
        t0 = time.perf_counter()
        sol = solve_exact(instance, limits or SearchLimits()).solution
        return sol, time.perf_counter() - t0
    if method == "ga":
        cfg = dataclasses.replace(ga_config or GaConfig(), seed=seed)
        t0 = time.perf_counter()
        sol = run_ga(instance, cfg)[0]
        return sol, time.perf_counter() - t0
    if method == "rl":
        if network is None:
            raise ValueError("the rl method needs a trained network")
        from .rl import infer
        t0 = time.perf_counter()
        sol = infer(network, instance)
        return sol, time.perf_counter() - t0
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def run_instances(method: str, named_instances, seed: int = 0, ga_config=None, limits=None, network=None,
                  on_error=None) -> list:
    """One report row per ``(dataset, instance)`` in input order.

    An infeasible instance yields a row with empty metric cells;
    ``on_error(dataset, exc)`` is told about it and the run continues.
    """
    rows = []
    for name, inst in named_instances:
        t0 = time.perf_counter()
        try:
            sol, seconds = solve(method, inst, seed, ga_config, limits, network)
        except InfeasibleError as exc:
            rows.append(infeasible_row(name, inst, method, time.perf_counter() - t0))
            if on_error is not None:
                on_error(name, exc)
            continue
        rows.append(row_from_solution(name, inst, method, sol, seconds))
    return rows


# -- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    dataset: str
    size: int
    cost_a: float
    cost_b: float
    gap_pct: float
    time_ratio: float


def cost_gap(cost_a: float, cost_b: float) -> float:
    """Percentage by which ``cost_b`` exceeds ``cost_a`` (relative to ``|cost_a|``)."""
    if cost_a == 0:
        return 0.0 if cost_b == 0 else math.copysign(math.inf, cost_b)
    return (cost_b - cost_a) / abs(cost_a) * 100.0


def compare(rows_a, rows_b) -> tuple:
    """Per-instance gap and time ratio plus ``{size: (gap mean, gap std,
    ratio mean, ratio std)}``.

    Rows are matched by dataset name; both reports must cover the same
    datasets.  Infeasible rows are skipped.
    """
    a = {r.dataset: r for r in rows_a}
    b = {r.dataset: r for r in rows_b}
    if set(a) != set(b):
        missing = sorted(set(a) ^ set(b))
        raise ValueError(f"reports cover different instance sets; unmatched: {missing}")
    out = []
    for name in [r.dataset for r in rows_a]:
        ra, rb = a[name], b[name]
        if not (ra.feasible and rb.feasible):
            continue
        if ra.t and rb.t:
            ratio = ra.t / rb.t
        else:
            ratio = 1.0 if ra.t == rb.t else math.nan
        out.append(ComparisonRow(name, (ra.nC or 0) + (ra.nS or 0), ra.cost, rb.cost,
                                 cost_gap(ra.cost, rb.cost), ratio))
    families = {}
    for c in out:
        families.setdefault(c.size, []).append(c)
    summary = {}
    for size, members in families.items():
        gaps = [c.gap_pct for c in members]
        ratios = [c.time_ratio for c in members]
        summary[size] = (statistics.fmean(gaps), statistics.pstdev(gaps),
                         statistics.fmean(ratios), statistics.pstdev(ratios))
    return out, summary


def comparison_text(comparison, summary) -> str:
    lines = [f"{'dataset':>12} {'size':>5} {'cost_a':>10} {'cost_b':>10} {'gap%':>8} {'t_a/t_b':>8}"]
    for c in comparison:
        lines.append(f"{c.dataset:>12} {c.size:>5} {c.cost_a:>10.2f} {c.cost_b:>10.2f} "
                     f"{c.gap_pct:>8.2f} {c.time_ratio:>8.2f}")
    for size in sorted(summary):
        gm, gs, rm, rs = summary[size]
        lines.append(f"size {size}: gap {gm:.2f}% (std {gs:.2f}), time ratio {rm:.2f} (std {rs:.2f})")
    return "\n".join(lines) + "\n"


# -- table verification ------------------------------------------------------------

def verify_rows(rows, tolerance: float = 0.02, weights: CostWeights = DEFAULT_WEIGHTS) -> list:
    """``(row, residual, ok)`` with the residual between the stated and the recomputed cost."""
    out = []
    for r in rows:
        if None in (r.d, r.v, r.ed, r.cost):
            raise ValueError(f"row {r.dataset}/{r.method} lacks d, v, ed or cost")
        res = abs(row_cost(r, weights) - r.cost)
        out.append((r, res, res <= tolerance))
    return out


def packaged_table(name: str) -> str:
    """Text of a bundled table: ``instance_table.csv`` or ``family_table.csv``."""
    return resources.files("evrptwd").joinpath("data", name).read_text()


# -- configuration ------------------------------------------------------------------

SECTIONS = {"gen": GenParams, "ga": GaConfig, "weights": CostWeights, "exact": SearchLimits}


def parse_config(text: str) -> dict:
    """``section.key = value`` lines into ``{section: {key: raw_value}}``.

    Blank lines and ``#`` comments are ignored.  Unknown sections raise.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ValueError(f"config line {lineno}: key {key!r} needs a section prefix")
        section, name = key.split(".", 1)
        if section not in SECTIONS and section not in ("rl", "reward", "convert"):
            raise ValueError(f"config line {lineno}: unknown section {section!r}")
        out.setdefault(section, {})[name] = value
    return out


def _coerce(raw: str, default):
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(x) for x in raw.split(","))
    if default is None:
        if raw.lower() == "none":
            return None
        try:
            return int(raw)
        except ValueError:
            return float(raw)
    return raw


def apply_config(obj, values: dict):
    """Copy of a frozen dataclass with string ``values`` coerced to field types."""
    if not values:
        return obj
    fields = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, raw in values.items():
        if key not in fields:
            raise ValueError(f"unknown option {key!r} for {type(obj).__name__}")
        changes[key] = _coerce(raw, getattr(obj, key))
    return dataclasses.replace(obj, **changes)
