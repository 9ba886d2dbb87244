"""Arrival-process generation."""

from __future__ import annotations

import numpy as np


def poisson_arrival_times(
    rng: np.random.Generator, rate: float, horizon_s: float
) -> np.ndarray:
    """Arrival instants of a Poisson process on [0, horizon).

    Exponential inter-arrival gaps, cumulative-summed and truncated.
    Draws in blocks sized off the expectation so one call usually
    suffices.
    """
    if rate <= 0:
        return np.empty(0, dtype=np.float64)
    expected = rate * horizon_s
    block = max(16, int(expected + 4 * np.sqrt(expected) + 16))
    times = np.cumsum(rng.exponential(1.0 / rate, size=block))
    while times.size and times[-1] < horizon_s:
        more = np.cumsum(rng.exponential(1.0 / rate, size=block)) + times[-1]
        times = np.concatenate([times, more])
    return times[times < horizon_s]
