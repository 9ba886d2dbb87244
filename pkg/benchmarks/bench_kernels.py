#!/usr/bin/env python3
"""Time the modular-arithmetic kernels under both backends.

Runs each kernel on protocol-sized inputs with the plain numpy
implementation and the jitted one, checks they agree exactly, and
prints a per-kernel timing table. When numba is not installed the
"numba" column times the undecorated Python loops, which makes the
fallback cost visible rather than hiding it.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pisim import _kernels as K
from pisim._backend import BACKEND, USE_NUMBA
from pisim.field import FIELD_MODULUS


def _time_best(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(scale: int, rng: np.random.Generator):
    p = FIELD_MODULUS

    def elems(shape):
        return rng.integers(0, p, size=shape, dtype=np.int64)

    x = elems((16, 8 * scale, 8 * scale))
    w = elems((16, 16, 3, 3)) % 7
    b = elems(16) % 7
    n = 65536 * scale
    return [
        ("conv2d_mod", (x, w, b, 1, 1, p)),
        ("matvec_mod", (elems((256, 1024 * scale)) % 7, elems(1024 * scale), elems(256) % 7, p)),
        ("sumpool_mod", (elems((16, 16 * scale, 16 * scale)), 2, 2, p)),
        ("relu_remask_mod", (elems(n), elems(n), elems(n), p)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--scale", type=int, default=4,
                        help="multiplier on tensor edge sizes")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {BACKEND} (numba importable: {USE_NUMBA})")
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, call_args in _cases(args.scale, rng):
        fn_np = getattr(K, f"{name}_numpy")
        fn_nb = getattr(K, f"{name}_numba")
        ref = fn_np(*call_args)
        got = fn_nb(*call_args)  # first call also compiles
        if not np.array_equal(np.asarray(ref), np.asarray(got)):
            raise SystemExit(f"{name}: backends disagree")
        t_np = _time_best(fn_np, call_args, args.repeats)
        t_nb = _time_best(fn_nb, call_args, args.repeats)
        print(f"{name:<18}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.2f}x")


if __name__ == "__main__":
    main()
