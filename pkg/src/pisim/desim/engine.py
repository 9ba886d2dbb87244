"""Discrete-event engine for offline/online serving with precompute bundles.

Two concurrency modes:

serial: one machine pair runs the offline phase then the online phase for
each request back to back. At most one bundle exists at a time, so storage
capacity never limits throughput.

pipelined: offline bundle builds run in parallel, limited only by how many
finished-but-unconsumed bundles fit in storage. Bundles are consumed in
FIFO order (k-th request uses k-th bundle) and the online phase is served
by a single resource. Storage is reserved when a build starts and released
when the bundle's request begins its online phase.
"""

from __future__ import annotations

import heapq
import math
from collections import deque

import numpy as np

from ..costmodel.types import PhaseCosts
from .arrivals import poisson_arrival_times
from .config import SERIAL, ConfigInfeasible, SimConfig
from .metrics import AggregateMetrics, RequestRecord, RunMetrics, aggregate, summarize_run

# Heap tie-break priorities at equal timestamps. Bundle completions are
# visible to arrivals in the same instant, and a finished online slot is
# reusable before the next arrival is admitted.
_OFFLINE_DONE = 0
_ONLINE_DONE = 1
_ARRIVAL = 2


def _bundle_bytes(costs: PhaseCosts) -> tuple[int, int]:
    return costs.client_storage_delta_bytes, costs.server_storage_delta_bytes


def capacity_bundles(costs: PhaseCosts, config: SimConfig) -> float:
    """How many unconsumed bundles fit in storage; math.inf when unbounded."""
    client_b, server_b = _bundle_bytes(costs)
    cap = math.inf
    if server_b > 0:
        cap = min(cap, math.floor(config.server_capacity_bytes / server_b))
    if config.client_capacity_bytes is not None and client_b > 0:
        cap = min(cap, math.floor(config.client_capacity_bytes / client_b))
    return cap


def _check_feasible(costs: PhaseCosts, config: SimConfig) -> None:
    client_b, server_b = _bundle_bytes(costs)
    if server_b > config.server_capacity_bytes:
        raise ConfigInfeasible(
            f"one bundle needs {server_b} server bytes but capacity is "
            f"{config.server_capacity_bytes:.3g}"
        )
    if config.client_capacity_bytes is not None and client_b > config.client_capacity_bytes:
        raise ConfigInfeasible(
            f"one bundle needs {client_b} client bytes but capacity is "
            f"{config.client_capacity_bytes:.3g}"
        )


def stability_limit(costs: PhaseCosts, config: SimConfig) -> float:
    """Largest arrival rate the configuration can sustain long-run.

    Serial service handles one request per offline+online span. Pipelined
    service is limited by bundle throughput (capacity / offline time) or by
    the single online resource, whichever binds first.
    """
    off = costs.offline_latency_s
    on = costs.online_latency_s
    if config.concurrency == SERIAL:
        total = off + on
        return math.inf if total <= 0 else 1.0 / total
    cap = capacity_bundles(costs, config)
    build_rate = math.inf if off <= 0 or math.isinf(cap) else cap / off
    online_rate = math.inf if on <= 0 else 1.0 / on
    return min(build_rate, online_rate)


def _simulate_serial(
    costs: PhaseCosts, config: SimConfig, arrivals: np.ndarray
) -> tuple[list[RequestRecord], int, int]:
    off = costs.offline_latency_s
    on = costs.online_latency_s
    horizon = config.horizon_s
    records: list[RequestRecord] = []
    t_free = 0.0
    for k, a in enumerate(arrivals):
        start = max(float(a), t_free)
        ready = start + off
        done = ready + on
        t_free = done
        records.append(
            RequestRecord(
                index=k,
                arrival_s=float(a),
                bundle_ready_s=ready,
                online_start_s=ready if ready <= horizon else None,
                done_s=done if done <= horizon else None,
            )
        )
    client_b, server_b = _bundle_bytes(costs)
    if not records:
        return records, 0, 0
    return records, client_b, server_b


def _simulate_pipelined(
    costs: PhaseCosts, config: SimConfig, arrivals: np.ndarray
) -> tuple[list[RequestRecord], int, int]:
    off = costs.offline_latency_s
    on = costs.online_latency_s
    client_b, server_b = _bundle_bytes(costs)
    cap = capacity_bundles(costs, config)
    if cap < 1:
        raise ConfigInfeasible("storage capacity cannot hold a single bundle")
    horizon = config.horizon_s
    n = len(arrivals)

    heap: list[tuple[float, int, int, int]] = []
    seq = 0
    for k, a in enumerate(arrivals):
        heap.append((float(a), _ARRIVAL, seq, k))
        seq += 1
    heapq.heapify(heap)

    started = 0  # builds begun (never more than n in total)
    built = 0  # builds finished
    consumed = 0  # bundles released to online starts
    ready_times: list[float] = []
    pending: deque[int] = deque()
    server_free = True
    online_start: list[float | None] = [None] * n
    done: list[float | None] = [None] * n
    peak_live = 0

    def start_builds(t: float) -> None:
        nonlocal started, seq, peak_live
        while started < n and started - consumed < cap:
            ready_times.append(t + off)
            heapq.heappush(heap, (t + off, _OFFLINE_DONE, seq, started))
            seq += 1
            started += 1
            peak_live = max(peak_live, started - consumed)

    def serve(t: float) -> None:
        nonlocal server_free, consumed, seq
        while server_free and pending and built > consumed:
            k = pending.popleft()
            online_start[k] = t
            consumed += 1
            start_builds(t)
            server_free = False
            heapq.heappush(heap, (t + on, _ONLINE_DONE, seq, k))
            seq += 1

    start_builds(0.0)
    while heap:
        t, prio, _, k = heapq.heappop(heap)
        if t > horizon:
            break
        if prio == _OFFLINE_DONE:
            built += 1
            serve(t)
        elif prio == _ONLINE_DONE:
            done[k] = t
            server_free = True
            serve(t)
        else:
            pending.append(k)
            serve(t)

    records = [
        RequestRecord(
            index=k,
            arrival_s=float(arrivals[k]),
            bundle_ready_s=ready_times[k] if k < len(ready_times) else math.inf,
            online_start_s=online_start[k],
            done_s=done[k],
        )
        for k in range(n)
    ]
    return records, peak_live * client_b, peak_live * server_b


def simulate(costs: PhaseCosts, config: SimConfig, seed: int = 0) -> RunMetrics:
    """Run one arrival realization and summarize it.

    The same seed always produces the same arrival times and therefore the
    same schedule; both phases are deterministic given the arrivals.
    """
    _check_feasible(costs, config)
    rng = np.random.default_rng(seed)
    arrivals = poisson_arrival_times(rng, config.arrival_rate, config.horizon_s)
    if config.concurrency == SERIAL:
        records, peak_c, peak_s = _simulate_serial(costs, config, arrivals)
    else:
        records, peak_c, peak_s = _simulate_pipelined(costs, config, arrivals)
    saturated = config.arrival_rate > stability_limit(costs, config)
    return summarize_run(costs, config, seed, records, saturated, peak_c, peak_s)


def run_many(costs: PhaseCosts, config: SimConfig, base_seed: int = 0) -> AggregateMetrics:
    """Simulate config.n_runs independent realizations, seeds base_seed+i."""
    runs = [simulate(costs, config, base_seed + i) for i in range(config.n_runs)]
    return aggregate(runs)
