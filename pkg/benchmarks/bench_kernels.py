"""Time the compiled kernels against the pure-Python fallback.

Run from the repository root::

    python3 benchmarks/bench_kernels.py

Both backends produce bit-identical outputs (the test suite asserts it);
this script only reports how much wall time the extension saves on the
two hot paths: rectangular assignment solving and pairwise box costs.
"""
from __future__ import annotations

import time

import numpy as np

from omnifilter._kernels import _pure, backend_name

try:
    from omnifilter._kernels import _native
except ImportError:
    _native = None

LAP_SHAPES = ((6, 300), (50, 300), (300, 300))
BOX_SHAPES = ((6, 300), (50, 1000), (300, 2000))
REPEATS = 5


def best_of(fn, *args) -> float:
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def row(label: str, pure_s: float, native_s: float | None) -> None:
    if native_s is None:
        print(f"{label:<28} {pure_s * 1e3:>10.3f} ms {'-':>12} {'-':>9}")
    else:
        print(f"{label:<28} {pure_s * 1e3:>10.3f} ms {native_s * 1e3:>9.3f} ms "
              f"{pure_s / native_s:>8.1f}x")


def main() -> None:
    rng = np.random.default_rng(0)
    print(f"active backend: {backend_name()}")
    print(f"{'case':<28} {'pure':>13} {'native':>12} {'speedup':>9}")
    for g, k in LAP_SHAPES:
        cost = rng.uniform(0.0, 10.0, size=(g, k))
        pure_s = best_of(_pure.solve_lap, cost)
        native_s = best_of(_native.solve_lap, cost) if _native else None
        row(f"solve_lap {g}x{k}", pure_s, native_s)
    for g, k in BOX_SHAPES:
        gt = rng.uniform(0.2, 0.8, size=(g, 4))
        pred = rng.uniform(0.2, 0.8, size=(k, 4))
        pure_s = best_of(_pure.box_match_cost, gt, pred, 2.0, 5.0)
        native_s = (best_of(_native.box_match_cost, gt, pred, 2.0, 5.0)
                    if _native else None)
        row(f"box_match_cost {g}x{k}", pure_s, native_s)
    if _native is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
