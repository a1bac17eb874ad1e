import random
import statistics

import pytest

from quickfield.dynamics import ModelParams, run
from quickfield.experiment import (BATCH_HEADER, AggregateMetrics, batch, batch_csv,
                                   read_batch_csv, runs_csv, sadd_sweep, sweep_table,
                                   trace_csv)
from quickfield.fields import ContractError


def test_single_run_batch(small_room):
    b = batch(small_room, ModelParams(), n_runs=1, base_seed=7)
    r = run(small_room, ModelParams(), seed=7)
    m = b.metrics
    assert b.runs == (r,)
    assert (m.mean_T, m.mean_Ti, m.mean_right) == (r.T, r.T_i, r.right_exit_count)
    assert m.sd_T == m.sd_Ti == m.sd_right == 0.0


def test_batch_seeds_and_means(small_room):
    b = batch(small_room, ModelParams(), n_runs=6, base_seed=10)
    assert [r.seed for r in b.runs] == list(range(10, 16))
    Ts = [r.T for r in b.runs]
    assert min(Ts) <= b.metrics.mean_T <= max(Ts)
    assert b.metrics.sd_T == pytest.approx(statistics.stdev(Ts))
    assert b.metrics.incomplete_runs == 0


def test_batch_deterministic(small_room):
    p = ModelParams(k_Sdyn=0.0)
    assert batch(small_room, p, 4).runs == batch(small_room, p, 4).runs


def test_batch_parallel_matches_serial(small_room):
    serial = batch(small_room, ModelParams(), 4, jobs=1)
    parallel = batch(small_room, ModelParams(), 4, jobs=2)
    assert serial.runs == parallel.runs and serial.metrics == parallel.metrics


def test_aggregation_permutation_invariant(small_room):
    runs = list(batch(small_room, ModelParams(), 8).runs)
    shuffled = runs[:]
    random.Random(1).shuffle(shuffled)
    assert AggregateMetrics.from_runs(runs) == AggregateMetrics.from_runs(shuffled)


def test_incomplete_runs_counted(small_room):
    m = batch(small_room, ModelParams(max_time=3), 3).metrics
    assert m.incomplete_runs == 3


def test_contracts(small_room):
    with pytest.raises(ContractError):
        batch(small_room, ModelParams(), 0)
    with pytest.raises(ContractError):
        sadd_sweep(small_room, ModelParams(), [])
    with pytest.raises(ContractError):
        sadd_sweep(small_room, ModelParams(), [2, 0.5])
    with pytest.raises(ContractError):
        AggregateMetrics.from_runs([])


def test_sweep_rows_in_input_order(small_room):
    rows = sadd_sweep(small_room, ModelParams(), [5, 1, 2], n_runs=2)
    assert [b.params.s_add for b in rows] == [5.0, 1.0, 2.0]
    assert all(b.params.k_Sdyn == 1.0 for b in rows)
    assert [s for s, _ in sweep_table(rows)] == [5.0, 1.0, 2.0]


def test_sadd_one_equals_ddpf_off(small_room):
    # A unit surcharge makes the dynamic field vanish, so trajectories coincide.
    on = sadd_sweep(small_room, ModelParams(), [1], n_runs=5)[0]
    off = batch(small_room, ModelParams(k_Sdyn=0.0), 5)
    assert [r.right_exit_count for r in on.runs] == [r.right_exit_count for r in off.runs]
    assert on.metrics.mean_T == off.metrics.mean_T


def test_csv_outputs(small_room):
    b = batch(small_room, ModelParams(), 2, keep_agents=True)
    text = batch_csv([b])
    assert text.splitlines()[0] == ",".join(BATCH_HEADER)
    row = read_batch_csv(text)[0]
    assert row["n_runs"] == "2" and row["s_add"] == "10.0000"
    assert float(row["mean_T"]) == pytest.approx(b.metrics.mean_T, abs=1e-4)
    assert runs_csv(b.runs).splitlines()[0] == "seed,T,T_i,right_exit_count,left_exit_count,completed"
    trace = trace_csv(b.runs[0]).splitlines()
    assert trace[0] == "id,speed,exit_time,exit_taken" and len(trace) == 19
    assert trace[1].split(",")[3] in ("left", "right")
