"""Benchmark harness: seeded experiment sweeps over cross-flow counts, CSV
row/summary schemas, and the statistics behind the comparison tables
(means, confidence intervals, accuracy, conditional increase, speedups,
baseline ratios and segregation penalties).

Timing rows carry per-call process-CPU time of the solver call only;
generation and I/O are excluded.  Absolute times are hardware-bound, only
ratios are meaningful across machines.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .curves import sum_concave
from .exact import exact_theta_opt
from .heuristic import heuristic_theta_opt
from .residual import ResidualInput
from .scenarios import (
    ScenarioConfig,
    aggregate_backlog,
    generate_scenario,
    scenario_seed,
    solve_disco,
)

ROW_HEADER = "iteration,n_cross,foi_segments,method,theta,backlog,cpu_time_us"
PENALTY_HEADER = "iteration,n_cross,foi_segments,method,sum_per_flow,q_agg,penalty_pct"
SUMMARY_HEADER = (
    "n_cross,mean_exact,ci95_exact,mean_heur,ci95_heur,accuracy_pct,"
    "increase_pct,ci95_increase,t_exact_ms,t_heur_ms,speedup"
)

METHODS = ("exact", "heuristic", "disco")

# backlog equality threshold for the accuracy statistic
ACCURACY_RTOL = 1e-9


@dataclass(frozen=True)
class ExperimentRow:
    iteration: int
    n_cross: int
    foi_segments: int
    method: str
    theta: float
    backlog: float
    cpu_time_us: float


@dataclass(frozen=True)
class PenaltyRow:
    iteration: int
    n_cross: int
    foi_segments: int
    method: str
    sum_per_flow: float
    q_agg: float
    penalty_pct: float


@dataclass(frozen=True)
class SummaryRow:
    n_cross: int
    mean_exact: float
    ci95_exact: float
    mean_heur: float
    ci95_heur: float
    accuracy_pct: float
    increase_pct: float
    ci95_increase: float
    t_exact_ms: float
    t_heur_ms: float
    speedup: float


@dataclass(frozen=True)
class BaselineRow:
    n_cross: int
    mean_disco: float
    ci95_disco: float
    ratio_disco_exact: float


def _solve_all(inp: ResidualInput, cross_first_bursts: list[float]):
    return {
        "exact": exact_theta_opt(inp),
        "heuristic": heuristic_theta_opt(inp)[0],
        "disco": solve_disco(inp, cross_first_bursts),
    }


def _method_backlog(method: str, inp: ResidualInput, cross_first_bursts: list[float]) -> float:
    if method == "exact":
        return exact_theta_opt(inp).backlog
    if method == "heuristic":
        return heuristic_theta_opt(inp)[0].backlog
    return solve_disco(inp, cross_first_bursts).backlog


def run_iteration(
    master_seed: int,
    iteration: int,
    n_cross: int,
    foi_segments: int,
    with_penalty: bool = True,
) -> tuple[list[ExperimentRow], list[PenaltyRow]]:
    cfg = ScenarioConfig(
        n_cross=n_cross,
        foi_segments=foi_segments,
        seed=scenario_seed(master_seed, iteration, n_cross),
    )
    scenario = generate_scenario(cfg)
    inp = scenario.residual_input()
    results = _solve_all(inp, scenario.cross_first_bursts())
    rows = [
        ExperimentRow(
            iteration=iteration,
            n_cross=n_cross,
            foi_segments=foi_segments,
            method=m,
            theta=results[m].theta,
            backlog=results[m].backlog,
            cpu_time_us=results[m].cpu_time * 1e6,
        )
        for m in METHODS
    ]
    penalties: list[PenaltyRow] = []
    if with_penalty:
        q_agg = aggregate_backlog(scenario)
        flows = [scenario.foi, *scenario.cross_flows]
        for m in METHODS:
            total = 0.0
            for j, flow in enumerate(flows):
                others = flows[:j] + flows[j + 1 :]
                flow_inp = ResidualInput(
                    foi=flow, cross=sum_concave(others), beta=scenario.beta
                )
                bursts = [c.segments[0].burst for c in others]
                total += _method_backlog(m, flow_inp, bursts)
            penalties.append(
                PenaltyRow(
                    iteration=iteration,
                    n_cross=n_cross,
                    foi_segments=foi_segments,
                    method=m,
                    sum_per_flow=total,
                    q_agg=q_agg,
                    penalty_pct=(total - q_agg) / q_agg * 100.0,
                )
            )
    return rows, penalties


def _iteration_task(args):
    return run_iteration(*args)


def worker_count() -> int:
    """Workers for experiment sweeps; defaults to 1 (fully deterministic,
    in-order execution)."""
    try:
        return max(int(os.environ.get("NCFIFO_WORKERS", "1")), 1)
    except ValueError:
        return 1


def run_experiment(
    iterations: int = 500,
    cross_min: int = 2,
    cross_max: int = 10,
    foi_segments: int = 2,
    master_seed: int = 1,
    with_penalty: bool = True,
) -> tuple[list[ExperimentRow], list[PenaltyRow]]:
    """One row per (iteration, cross count, method); scenarios are
    deterministic for a fixed master seed (timings are not)."""
    tasks = [
        (master_seed, it, n, foi_segments, with_penalty)
        for it in range(iterations)
        for n in range(cross_min, cross_max + 1)
    ]
    workers = worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_iteration_task, tasks, chunksize=8))
    else:
        outputs = [run_iteration(*t) for t in tasks]
    rows: list[ExperimentRow] = []
    penalties: list[PenaltyRow] = []
    for r, p in outputs:
        rows.extend(r)
        penalties.extend(p)
    return rows, penalties


def write_rows(path: str, rows: list[ExperimentRow]) -> None:
    _write_csv(path, ROW_HEADER, rows)


def write_penalties(path: str, rows: list[PenaltyRow]) -> None:
    _write_csv(path, PENALTY_HEADER, rows)


def write_summary(path: str, rows: list[SummaryRow]) -> None:
    _write_csv(path, SUMMARY_HEADER, rows)


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header.split(","))
        for row in rows:
            writer.writerow([getattr(row, f.name) for f in fields(row)])


def read_rows(path: str) -> list[ExperimentRow]:
    return _read_csv(path, ROW_HEADER, ExperimentRow)


def read_penalties(path: str) -> list[PenaltyRow]:
    return _read_csv(path, PENALTY_HEADER, PenaltyRow)


def _read_csv(path: str, header: str, row_type):
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header.split(","):
            raise ValueError(f"{path}: expected header {header!r}, got {got!r}")
        casts = [f.type for f in fields(row_type)]
        for rec in reader:
            if len(rec) != len(casts):
                raise ValueError(f"{path}: malformed row {rec!r}")
            vals = [int(v) if c == "int" else (v if c == "str" else float(v)) for v, c in zip(rec, casts)]
            out.append(row_type(*vals))
    if not out:
        raise ValueError(f"{path}: no data rows")
    return out


def _mean_ci(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, 0.0
    return mean, float(1.96 * arr.std(ddof=1) / math.sqrt(len(arr)))


def backlogs_identical(heur: float, exact: float) -> bool:
    return abs(heur - exact) <= ACCURACY_RTOL * max(1.0, exact)


def summarize(rows: list[ExperimentRow]) -> list[SummaryRow]:
    by_cell: dict[tuple[int, str], dict[int, ExperimentRow]] = {}
    for r in rows:
        by_cell.setdefault((r.n_cross, r.method), {})[r.iteration] = r
    out = []
    for n in sorted({r.n_cross for r in rows}):
        exact = by_cell.get((n, "exact"), {})
        heur = by_cell.get((n, "heuristic"), {})
        iters = sorted(set(exact) & set(heur))
        ex = [exact[i].backlog for i in iters]
        he = [heur[i].backlog for i in iters]
        mean_ex, ci_ex = _mean_ci(ex)
        mean_he, ci_he = _mean_ci(he)
        same = [backlogs_identical(h, e) for h, e in zip(he, ex)]
        accuracy = 100.0 * sum(same) / len(same) if same else 0.0
        increases = [
            (h - e) / e * 100.0 for h, e, s in zip(he, ex, same) if not s and e > 0
        ]
        inc_mean, inc_ci = _mean_ci(increases)
        t_ex = sum(exact[i].cpu_time_us for i in iters) / 1000.0
        t_he = sum(heur[i].cpu_time_us for i in iters) / 1000.0
        out.append(
            SummaryRow(
                n_cross=n,
                mean_exact=mean_ex,
                ci95_exact=ci_ex,
                mean_heur=mean_he,
                ci95_heur=ci_he,
                accuracy_pct=accuracy,
                increase_pct=inc_mean,
                ci95_increase=inc_ci,
                t_exact_ms=t_ex,
                t_heur_ms=t_he,
                speedup=t_ex / t_he if t_he > 0 else math.inf,
            )
        )
    return out


def baseline_rows(rows: list[ExperimentRow]) -> list[BaselineRow]:
    by_cell: dict[tuple[int, str], list[float]] = {}
    for r in rows:
        by_cell.setdefault((r.n_cross, r.method), []).append(r.backlog)
    out = []
    for n in sorted({r.n_cross for r in rows}):
        disco = by_cell.get((n, "disco"), [])
        exact = by_cell.get((n, "exact"), [])
        if not disco or not exact:
            continue
        mean_disco, ci_disco = _mean_ci(disco)
        mean_exact, _ = _mean_ci(exact)
        out.append(
            BaselineRow(
                n_cross=n,
                mean_disco=mean_disco,
                ci95_disco=ci_disco,
                ratio_disco_exact=mean_disco / mean_exact if mean_exact > 0 else math.inf,
            )
        )
    return out


def penalty_series(penalties: list[PenaltyRow]) -> dict[str, list[tuple[int, float]]]:
    """Mean segregation penalty per (method, cross count), plot-ready."""
    grouped: dict[tuple[str, int], list[float]] = {}
    for p in penalties:
        grouped.setdefault((p.method, p.n_cross), []).append(p.penalty_pct)
    series: dict[str, list[tuple[int, float]]] = {m: [] for m in METHODS}
    for (m, n), vals in sorted(grouped.items()):
        series.setdefault(m, []).append((n, float(np.mean(vals))))
    return series


def render_summary(summary: list[SummaryRow], rows: list[ExperimentRow]) -> str:
    """Aligned text table, one column per cross count."""
    ns = [s.n_cross for s in summary]
    per_call_ex = []
    per_call_he = []
    counts: dict[tuple[int, str], int] = {}
    for r in rows:
        counts[(r.n_cross, r.method)] = counts.get((r.n_cross, r.method), 0) + 1
    for s in summary:
        n_ex = counts.get((s.n_cross, "exact"), 1)
        n_he = counts.get((s.n_cross, "heuristic"), 1)
        per_call_ex.append(1000.0 * s.t_exact_ms / n_ex)
        per_call_he.append(1000.0 * s.t_heur_ms / n_he)
    lines = []
    width = 9

    def row(label: str, vals, fmt="{:.1f}") -> str:
        cells = "".join(fmt.format(v).rjust(width) for v in vals)
        return f"{label:<16}{cells}"

    lines.append(row("cross flows", ns, "{:d}"))
    lines.append(row("mean exact", [s.mean_exact for s in summary]))
    lines.append(row("ci95 exact", [s.ci95_exact for s in summary]))
    lines.append(row("mean heuristic", [s.mean_heur for s in summary]))
    lines.append(row("ci95 heuristic", [s.ci95_heur for s in summary]))
    lines.append(row("accuracy %", [s.accuracy_pct for s in summary]))
    lines.append(row("increase %", [s.increase_pct for s in summary]))
    lines.append(row("ci95 increase", [s.ci95_increase for s in summary]))
    lines.append(row("t exact ms", [s.t_exact_ms for s in summary]))
    lines.append(row("t heur ms", [s.t_heur_ms for s in summary]))
    lines.append(row("us/call exact", per_call_ex))
    lines.append(row("us/call heur", per_call_he))
    lines.append(row("speedup", [s.speedup for s in summary]))
    return "\n".join(lines)


def render_baseline(baseline: list[BaselineRow]) -> str:
    lines = ["baseline (default theta) vs exact:"]
    for b in baseline:
        lines.append(
            f"  n={b.n_cross}: mean={b.mean_disco:.2f} ci95={b.ci95_disco:.3f} "
            f"ratio={b.ratio_disco_exact:.2f}"
        )
    return "\n".join(lines)


def render_penalties(series: dict[str, list[tuple[int, float]]]) -> str:
    lines = ["mean segregation penalty [%]:"]
    for m in METHODS:
        if series.get(m):
            cells = " ".join(f"{n}:{p:.1f}" for n, p in series[m])
            lines.append(f"  {m:<10} {cells}")
    return "\n".join(lines)
