"""Discrete-event serving simulator: arrivals, queueing, storage caps."""

import dataclasses
import math

import numpy as np
import pytest

from pisim.costmodel import load_shipped_model, phase_costs
from pisim.desim import (
    ConfigInfeasible,
    PIPELINED,
    SERIAL,
    SWEEP_COLUMNS,
    SimConfig,
    aggregate,
    capacity_bundles,
    poisson_arrival_times,
    run_many,
    simulate,
    stability_limit,
    sweep_point,
    write_sweep_csv,
)
from pisim.netarch import build_preset

CM = load_shipped_model("table")


def costs_for(proto="sg", model="resnet32", dataset="cifar100"):
    return phase_costs(CM, proto, build_preset(model, dataset))


# --- arrivals ---------------------------------------------------------------


def test_zero_rate_means_no_arrivals():
    rng = np.random.default_rng(0)
    assert poisson_arrival_times(rng, 0.0, 1000.0).size == 0


def test_arrivals_sorted_and_inside_horizon():
    rng = np.random.default_rng(1)
    t = poisson_arrival_times(rng, 0.5, 5000.0)
    assert np.all(np.diff(t) >= 0)
    assert t.size == 0 or (t[0] >= 0 and t[-1] < 5000.0)


def test_arrival_count_within_three_sigma():
    rng = np.random.default_rng(2)
    rate, horizon = 2.0, 50_000.0
    n = poisson_arrival_times(rng, rate, horizon).size
    lam = rate * horizon
    assert abs(n - lam) <= 3 * math.sqrt(lam)


def test_interarrival_moments():
    rng = np.random.default_rng(3)
    t = poisson_arrival_times(rng, 1.0, 200_000.0)
    gaps = np.diff(t)
    # exponential(1): mean 1, var 1
    assert abs(gaps.mean() - 1.0) < 0.02
    assert abs(gaps.var() - 1.0) < 0.05


# --- serial engine ----------------------------------------------------------


def test_serial_idle_latency_is_sum_of_phases():
    costs = costs_for()
    cfg = SimConfig(arrival_rate=1e-4, horizon_s=400_000.0, concurrency=SERIAL)
    m = simulate(costs, cfg, seed=5)
    total = costs.offline_latency_s + costs.online_latency_s
    assert m.completed > 0
    for rec in m.records:
        if not rec.finished:
            continue
        assert rec.latency_s >= total - 1e-9
        assert rec.queue_wait_s == 0.0
    # with sparse arrivals most requests see an idle server
    idle = [r for r in m.records if r.finished and abs(r.latency_s - total) < 1e-9]
    assert len(idle) >= m.completed // 2


def test_latency_decomposition_identity():
    costs = costs_for("cg", "resnet18", "cifar100")
    for mode in (SERIAL, PIPELINED):
        cfg = SimConfig(arrival_rate=2e-3, horizon_s=100_000.0, concurrency=mode)
        m = simulate(costs, cfg, seed=1)
        for rec in m.records:
            if not rec.finished:
                continue
            parts = rec.precompute_wait_s + rec.queue_wait_s + rec.online_s
            slack = rec.online_start_s - max(
                rec.arrival_s, rec.bundle_ready_s, 0.0
            ) - rec.queue_wait_s
            assert parts + slack == pytest.approx(rec.latency_s, abs=1e-6)


def test_fifo_order_and_monotone_completion():
    costs = costs_for("cg")
    cfg = SimConfig(arrival_rate=5e-3, horizon_s=50_000.0, concurrency=PIPELINED)
    m = simulate(costs, cfg, seed=3)
    done = [r.done_s for r in m.records if r.finished]
    assert done == sorted(done)
    idx = [r.index for r in m.records]
    assert idx == sorted(idx)


def test_censoring_leaves_unfinished_records():
    costs = costs_for()
    cfg = SimConfig(arrival_rate=2e-2, horizon_s=20_000.0, concurrency=SERIAL)
    m = simulate(costs, cfg, seed=0)
    assert m.saturated
    assert m.completed < m.arrived
    unfinished = [r for r in m.records if not r.finished]
    assert unfinished
    for rec in unfinished:
        assert rec.done_s is None
        assert math.isnan(rec.latency_s)


def test_stability_limit_serial_and_pipelined():
    costs = costs_for()
    serial = stability_limit(costs, SimConfig(arrival_rate=1e-3, concurrency=SERIAL))
    assert serial == pytest.approx(1.0 / (costs.offline_latency_s + costs.online_latency_s))
    free = SimConfig(arrival_rate=1e-3, concurrency=PIPELINED)
    assert stability_limit(costs, free) == pytest.approx(1.0 / costs.online_latency_s)
    one_slot = SimConfig(
        arrival_rate=1e-3,
        concurrency=PIPELINED,
        client_capacity_bytes=float(costs.client_storage_delta_bytes),
    )
    assert capacity_bundles(costs, one_slot) == 1
    assert stability_limit(costs, one_slot) == pytest.approx(1.0 / costs.offline_latency_s)


def test_saturated_flag_tracks_limit():
    costs = costs_for()
    lim = stability_limit(costs, SimConfig(arrival_rate=1.0, concurrency=SERIAL))
    below = simulate(costs, SimConfig(arrival_rate=lim * 0.5, horizon_s=50_000, concurrency=SERIAL))
    above = simulate(costs, SimConfig(arrival_rate=lim * 2.0, horizon_s=50_000, concurrency=SERIAL))
    assert not below.saturated
    assert above.saturated
    assert above.mean_latency_s > below.mean_latency_s


def test_pipelined_more_client_storage_helps():
    costs = costs_for("sg", "resnet18", "tinyimagenet")
    means = []
    for gb in (64.0, 128.0, 256.0):
        cfg = SimConfig(
            arrival_rate=0.004,
            horizon_s=86_400.0,
            concurrency=PIPELINED,
            client_capacity_bytes=gb * 1e9,
        )
        means.append(simulate(costs, cfg, seed=0).mean_latency_s)
    assert means[0] > means[1] > means[2]


def test_peak_storage_respects_capacity():
    costs = costs_for("sg", "resnet18", "tinyimagenet")
    cap = 128.0e9
    cfg = SimConfig(
        arrival_rate=0.004,
        horizon_s=86_400.0,
        concurrency=PIPELINED,
        client_capacity_bytes=cap,
    )
    m = simulate(costs, cfg, seed=2)
    assert 0 < m.peak_client_storage_bytes <= cap
    bundle = costs.client_storage_delta_bytes
    assert m.peak_client_storage_bytes == capacity_bundles(costs, cfg) * bundle


def test_infeasible_capacity_raises():
    costs = costs_for("sg", "resnet18", "cifar100")
    cfg = SimConfig(
        arrival_rate=1e-3, concurrency=SERIAL, client_capacity_bytes=8.0e9
    )
    with pytest.raises(ConfigInfeasible):
        simulate(costs, cfg)


def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(arrival_rate=-1.0)
    with pytest.raises(ValueError):
        SimConfig(arrival_rate=1e-3, horizon_s=0.0)
    with pytest.raises(ValueError):
        SimConfig(arrival_rate=1e-3, concurrency="warp")
    with pytest.raises(ValueError):
        SimConfig(arrival_rate=1e-3, n_runs=0)


def test_simulate_is_deterministic():
    costs = costs_for("cg")
    cfg = SimConfig(arrival_rate=1e-3, horizon_s=50_000.0, concurrency=PIPELINED)
    a = simulate(costs, cfg, seed=42)
    b = simulate(costs, cfg, seed=42)
    assert a == b
    c = simulate(costs, cfg, seed=43)
    assert a.records != c.records


# --- aggregation and sweeps -------------------------------------------------


def test_run_many_ci_shrinks_with_more_runs():
    costs = costs_for("cg")
    base = dict(arrival_rate=1e-3, horizon_s=30_000.0, concurrency=PIPELINED, keep_records=False)
    small = run_many(costs, SimConfig(n_runs=4, **base), base_seed=0)
    big = run_many(costs, SimConfig(n_runs=64, **base), base_seed=100)
    assert small.ci95_latency_s > big.ci95_latency_s
    ratio = small.ci95_latency_s / big.ci95_latency_s
    # 16x the runs shrinks the interval about 4x
    assert 2.0 < ratio < 8.0


def test_sweep_point_schema_and_infeasible_row():
    costs = costs_for("sg", "resnet18", "cifar100")
    ok_cfg = SimConfig(arrival_rate=1e-4, horizon_s=30_000.0, n_runs=2, concurrency=SERIAL)
    row = sweep_point(costs, ok_cfg)
    assert list(row) == SWEEP_COLUMNS
    assert row["feasible"] is True
    assert row["failure"] == ""

    bad_cfg = dataclasses.replace(ok_cfg, client_capacity_bytes=8.0e9)
    bad = sweep_point(costs, bad_cfg)
    assert list(bad) == SWEEP_COLUMNS
    assert bad["feasible"] is False
    assert "bundle" in bad["failure"]
    assert math.isnan(bad["mean_latency_s"])


def test_write_sweep_csv_deterministic(tmp_path):
    costs = costs_for()
    cfg = SimConfig(arrival_rate=1e-4, horizon_s=30_000.0, n_runs=2, concurrency=SERIAL)
    rows = [sweep_point(costs, cfg)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_sweep_csv(rows, p1)
    write_sweep_csv(rows, p2)
    assert p1.read_bytes() == p2.read_bytes()
    header = p1.read_text().splitlines()[0]
    assert header == ",".join(SWEEP_COLUMNS)


def test_aggregate_means_match_hand_average():
    costs = costs_for("cg")
    cfg = SimConfig(arrival_rate=1e-3, horizon_s=20_000.0, n_runs=3, concurrency=SERIAL)
    runs = [simulate(costs, cfg, seed=s) for s in range(3)]
    agg = aggregate(runs)
    assert agg.mean_latency_s == pytest.approx(
        np.mean([r.mean_latency_s for r in runs])
    )
    assert agg.runs == tuple(runs)
