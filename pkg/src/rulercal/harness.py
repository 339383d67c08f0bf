"""Run orchestration: wire an oracle to the search, persist artifacts.

A calibration run optionally truncates the lattice first, re-estimates the
upper ruler bound at the (possibly new) extremes, runs the stochastic
ruler search with the smallest requested threshold as its stop rule, and
reports one result row per requested threshold by scanning the trace for
the first evaluation that met it.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .abm.model import make_abm_run_fn, run_replication
from .benchmarks import MonotoneTestProblem, make_problem
from .config import RunConfig
from .objective import CalibrationTargets, ReplicationOracle, fractional_deviation
from .ruler import (
    STOP_BUDGET,
    STOP_THRESHOLD,
    RulerParams,
    SRTrace,
    estimate_ruler_bounds,
    run_sr,
)
from .seeding import generator
from .space import DiscreteSpace, SolutionMatrix
from .truncation import TruncationReport, truncate

__all__ = ["ResultRow", "CalibrationResult", "run_calibration", "result_rows_csv",
           "simulate_records", "EXIT_THRESHOLD", "EXIT_BUDGET"]

logger = logging.getLogger(__name__)

EXIT_THRESHOLD = 0
EXIT_BUDGET = 3

RESULT_COLUMNS = ("delta", "delta_avg", "h_hat", "delta_avg_obtained",
                  "y_hat_1", "y_hat_2", "y_hat_3",
                  "x_1", "x_2", "x_3", "t_f", "stop_reason", "wall_time_s")


@dataclass(frozen=True)
class ResultRow:
    """One summary row per stop threshold, calibration-table style."""

    delta: float
    delta_avg: float
    h_hat: float
    delta_avg_obtained: float
    y_hat: tuple[float, ...]
    x: tuple[float, ...]
    t_f: int
    stop_reason: str
    wall_time_s: float

    def as_csv_values(self) -> list:
        return [self.delta, self.delta_avg, self.h_hat, self.delta_avg_obtained,
                *self.y_hat, *self.x, self.t_f, self.stop_reason,
                round(self.wall_time_s, 3)]


@dataclass
class CalibrationResult:
    rows: list[ResultRow]
    trace: SRTrace
    ruler: RulerParams
    truncation: TruncationReport | None
    oracle_calls: int
    replications: int
    exit_code: int
    oracle_log: "OracleLog | None" = None


def build_run_fn(config: RunConfig):
    """Replication function (x, seed) -> outcome array for the configured oracle."""
    if config.oracle == "abm":
        return make_abm_run_fn(config.model)
    problem = synthetic_problem(config)
    return problem.run_fn


def synthetic_problem(config: RunConfig) -> MonotoneTestProblem:
    s = config.synthetic
    return make_problem(config.space(), s.intercepts, s.weights,
                        config.targets, noise_sd=s.noise_sd, kind=s.kind)


class OracleLog:
    """JSON-lines log of every oracle evaluation (the aggregate objective,
    its outcome vector, and the per-replicate values behind it)."""

    def __init__(self):
        self.lines: list[str] = []

    def __call__(self, phase, call_index, x, result):
        self.lines.append(json.dumps({
            "phase": phase,
            "call": call_index,
            "x": list(x),
            "h_hat": result.h_hat,
            "y_hat": list(result.y_hat),
            "k": result.k,
            "replicates": [{"seed": r.seed, "h": r.h, "y": list(r.outcome)}
                           for r in result.replicates],
        }))

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")


def make_oracle(config: RunConfig, phase: str, k: int | None = None,
                log: OracleLog | None = None) -> ReplicationOracle:
    return ReplicationOracle(
        build_run_fn(config), CalibrationTargets(config.targets),
        k=config.k_replicates if k is None else k,
        master_seed=config.master_seed, phase=phase, n_jobs=config.n_jobs,
        on_result=log,
    )


def _resolve_start(config: RunConfig, space: DiscreteSpace,
                   truncation: TruncationReport | None):
    start = config.ruler.start
    if start == "xl":
        if truncation is not None:
            return truncation.default_start(space)
        return space.x_min
    if start == "xr":
        return space.x_max
    indices = tuple(int(v) for v in start.split(","))
    return space.point(indices)


def run_calibration(config: RunConfig, out_dir: str | Path | None = None) -> CalibrationResult:
    """Execute the configured calibration and optionally persist artifacts."""
    space = config.space()
    targets = CalibrationTargets(config.targets)
    t_start = time.perf_counter()
    log = OracleLog()

    truncation = None
    candidates: SolutionMatrix | None = None
    sst_calls = 0
    sst_reps = 0
    if config.sst.enabled:
        sst_oracle = make_oracle(config, phase="sst", k=config.sst.replicates, log=log)
        noiseless = (config.oracle == "synthetic"
                     and all(sd == 0 for sd in config.synthetic.noise_sd))
        if not noiseless:
            logger.warning(
                "solution-space truncation under a stochastic oracle is heuristic; "
                "eliminations use k=%s replicates per diagonal point", sst_oracle.k)
        truncation = truncate(space, sst_oracle, targets)
        candidates = truncation.surviving
        sst_calls = sst_oracle.calls
        sst_reps = sst_oracle.replications

    bounds_oracle = make_oracle(config, phase="bounds", log=log)
    if config.ruler.b is None:
        x_l = truncation.new_x_l if truncation is not None else space.x_min
        x_r = truncation.new_x_r if truncation is not None else space.x_max
        ruler = estimate_ruler_bounds(
            bounds_oracle, x_l, x_r, a=config.ruler.a,
            delta=min(config.ruler.deltas), budget=config.ruler.budget,
            mt_schedule=config.ruler.mt_schedule)
    else:
        ruler = RulerParams(a=config.ruler.a, b=config.ruler.b,
                            delta=min(config.ruler.deltas), budget=config.ruler.budget,
                            mt_schedule=config.ruler.mt_schedule)

    sr_oracle = make_oracle(config, phase="sr", log=log)
    rng = generator(config.master_seed, "sr-loop")
    start_x = _resolve_start(config, space, truncation)
    trace = run_sr(sr_oracle, space, ruler, start_x, rng, candidates=candidates)
    wall = time.perf_counter() - t_start

    n = targets.n
    rows = []
    for delta in config.ruler.deltas:
        meeting = trace.first_meeting(delta)
        if meeting is not None:
            t_f, x, h_hat, y_hat = meeting
            rows.append(ResultRow(
                delta=delta, delta_avg=fractional_deviation(delta, n),
                h_hat=h_hat, delta_avg_obtained=fractional_deviation(h_hat, n),
                y_hat=y_hat, x=x, t_f=t_f, stop_reason=STOP_THRESHOLD,
                wall_time_s=wall))
        else:
            nan = float("nan")
            rows.append(ResultRow(
                delta=delta, delta_avg=fractional_deviation(delta, n),
                h_hat=trace.best_h_hat, delta_avg_obtained=fractional_deviation(trace.best_h_hat, n),
                y_hat=trace.best_y_hat or (nan,) * n, x=trace.best_x or (nan,) * space.m,
                t_f=trace.t_f, stop_reason=STOP_BUDGET, wall_time_s=wall))

    result = CalibrationResult(
        rows=rows, trace=trace, ruler=ruler, truncation=truncation,
        oracle_calls=sst_calls + bounds_oracle.calls + sr_oracle.calls,
        replications=sst_reps + bounds_oracle.replications + sr_oracle.replications,
        exit_code=EXIT_THRESHOLD if trace.stop_reason == STOP_THRESHOLD else EXIT_BUDGET,
        oracle_log=log,
    )
    if out_dir is not None:
        write_artifacts(result, Path(out_dir))
    return result


def result_rows_csv(rows) -> str:
    """CSV table of result rows. For the standard 3-outcome, 3-parameter
    calibration the header is exactly RESULT_COLUMNS; other shapes follow
    the same y_hat_i / x_j pattern."""
    rows = list(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        header = ("delta", "delta_avg", "h_hat", "delta_avg_obtained",
                  *(f"y_hat_{i + 1}" for i in range(len(rows[0].y_hat))),
                  *(f"x_{j + 1}" for j in range(len(rows[0].x))),
                  "t_f", "stop_reason", "wall_time_s")
    else:
        header = RESULT_COLUMNS
    writer.writerow(header)
    for row in rows:
        writer.writerow(row.as_csv_values())
    return buf.getvalue()


def write_artifacts(result: CalibrationResult, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sr_trace.jsonl").write_text(result.trace.to_json_lines())
    (out_dir / "results.csv").write_text(result_rows_csv(result.rows))
    if result.oracle_log is not None:
        (out_dir / "oracle_log.jsonl").write_text(result.oracle_log.text())
    if result.truncation is not None:
        (out_dir / "truncation.json").write_text(result.truncation.to_json())
        surviving_csv = io.StringIO()
        writer = csv.writer(surviving_csv, lineterminator="\n")
        writer.writerow([f"x_{i + 1}" for i in range(result.truncation.surviving.values.shape[1])])
        writer.writerows(result.truncation.surviving.values.tolist())
        (out_dir / "surviving_space.csv").write_text(surviving_csv.getvalue())
    (out_dir / "summary.txt").write_text(format_summary(result))


def format_summary(result: CalibrationResult) -> str:
    lines = []
    lines.append(f"stop reason : {result.trace.stop_reason}")
    lines.append(f"iterations  : {result.trace.t_f}")
    if result.trace.stop_reason == STOP_BUDGET:
        # Budget exhausted: report both the point the walk ended on and the
        # best evaluation observed anywhere along it.
        lines.append(f"incumbent   : {result.trace.incumbent_x}")
        lines.append(f"best seen   : {result.trace.best_x} "
                     f"(h_hat={result.trace.best_h_hat:.6g})")
    lines.append(f"ruler       : a={result.ruler.a}, b={result.ruler.b:.6g}, "
                 f"delta={result.ruler.delta}, budget={result.ruler.budget}")
    if result.truncation is not None:
        tr = result.truncation
        lines.append(f"truncation  : removed {tr.eliminated_total} of "
                     f"{tr.eliminated_total + tr.surviving.row_count} points "
                     f"({tr.oracle_calls} oracle calls)")
        lines.append(f"new bounds  : x_l={tr.new_x_l}, x_r={tr.new_x_r}")
    lines.append(f"oracle calls: {result.oracle_calls} "
                 f"({result.replications} replications)")
    lines.append("")
    lines.append(result_rows_csv(result.rows))
    return "\n".join(lines)


def simulate_records(config: RunConfig, seeds, as_json: bool = False) -> str:
    """Run single replications and format {seed, params, outcomes, runtime} records."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one replication seed is required")
    records = []
    for seed in seeds:
        t0 = time.perf_counter()
        outcome = run_replication(config.model, seed)
        runtime_ms = 1000.0 * (time.perf_counter() - t0)
        records.append({
            "seed": int(seed),
            "x1": config.model.x1, "x2": config.model.x2, "x3": config.model.x3,
            "y1": outcome.y1, "y2": outcome.y2, "y3": outcome.y3,
            "runtime_ms": round(runtime_ms, 3),
        })
    if as_json:
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()
