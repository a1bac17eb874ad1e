"""Monte-Carlo batches over seeds, aggregation and the s_add sweep."""

from __future__ import annotations

import csv
import io
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .dynamics import ModelParams, RunResult, run
from .fields import ContractError
from .geometry import Scenario

BATCH_HEADER = ["variant", "k_S", "k_Sdyn", "s_add", "n_runs", "mean_T", "sd_T",
                "mean_Ti", "sd_Ti", "mean_right", "sd_right", "incomplete_runs"]
RUN_HEADER = ["seed", "T", "T_i", "right_exit_count", "left_exit_count", "completed"]
TRACE_HEADER = ["id", "speed", "exit_time", "exit_taken"]

DEFAULT_RUNS = 20
FULL_RUNS = 100


def _stats(values):
    if not values:
        return None, None
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


@dataclass(frozen=True)
class AggregateMetrics:
    n_runs: int
    mean_T: float
    sd_T: float
    mean_Ti: float | None
    sd_Ti: float | None
    mean_right: float
    sd_right: float
    incomplete_runs: int = 0

    @property
    def se_right(self) -> float:
        return self.sd_right / self.n_runs ** 0.5

    @classmethod
    def from_runs(cls, results) -> "AggregateMetrics":
        results = list(results)
        if not results:
            raise ContractError("cannot aggregate zero runs")
        # Sorting by seed makes the float sums independent of completion order.
        results.sort(key=lambda r: r.seed)
        mean_T, sd_T = _stats([r.T for r in results])
        mean_Ti, sd_Ti = _stats([r.T_i for r in results if r.T_i is not None])
        mean_right, sd_right = _stats([float(r.right_exit_count) for r in results])
        return cls(len(results), mean_T, sd_T, mean_Ti, sd_Ti, mean_right, sd_right,
                   sum(not r.completed for r in results))


@dataclass(frozen=True)
class BatchResult:
    scenario: Scenario
    params: ModelParams
    metrics: AggregateMetrics
    runs: tuple[RunResult, ...]

    def csv_row(self) -> list[str]:
        m, p = self.metrics, self.params
        return [self.scenario.variant, _fmt(p.k_S), _fmt(p.k_Sdyn), _fmt(p.s_add),
                str(m.n_runs), _fmt(m.mean_T), _fmt(m.sd_T), _fmt(m.mean_Ti), _fmt(m.sd_Ti),
                _fmt(m.mean_right), _fmt(m.sd_right), str(m.incomplete_runs)]


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def _run_one(args):
    scenario, params, seed, keep_agents = args
    return run(scenario, params, seed, keep_agents)


def default_jobs() -> int:
    return os.cpu_count() or 1


def batch(scenario: Scenario, params: ModelParams, n_runs: int = DEFAULT_RUNS,
          base_seed: int = 0, jobs: int = 1, keep_agents: bool = False) -> BatchResult:
    """Run seeds ``base_seed .. base_seed + n_runs - 1`` and aggregate.

    Results do not depend on ``jobs``; each run owns its generator.
    """
    if n_runs < 1:
        raise ContractError("n_runs must be >= 1")
    tasks = [(scenario, params, base_seed + i, keep_agents) for i in range(n_runs)]
    if jobs > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n_runs)) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return BatchResult(scenario, params, AggregateMetrics.from_runs(results), tuple(results))


def sadd_sweep(scenario: Scenario, params: ModelParams, sadd_values, n_runs: int = DEFAULT_RUNS,
               base_seed: int = 0, jobs: int = 1) -> list[BatchResult]:
    """One batch per ``s_add`` value, ``k_Sdyn`` held at ``params.k_Sdyn``."""
    sadd_values = list(sadd_values)
    if not sadd_values:
        raise ContractError("sadd_values must be non-empty")
    for s in sadd_values:
        if s < 1:
            raise ContractError(f"s_add must be >= 1, got {s}")
    return [batch(scenario, params.with_(s_add=float(s)), n_runs, base_seed, jobs)
            for s in sadd_values]


def sweep_table(results) -> list[tuple[float, float]]:
    return [(b.params.s_add, b.metrics.mean_right) for b in results]


def batch_csv(batches) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BATCH_HEADER)
    for b in batches:
        writer.writerow(b.csv_row())
    return buf.getvalue()


def runs_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    for r in results:
        writer.writerow([r.seed, _fmt(r.T), _fmt(r.T_i), r.right_exit_count,
                         r.left_exit_count, int(r.completed)])
    return buf.getvalue()


def trace_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    writer.writerows(result.trace_rows())
    return buf.getvalue()


def read_batch_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
