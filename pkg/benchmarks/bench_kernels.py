"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call includes JIT compilation (or cache load) and is
reported separately.
"""

import argparse
import time

import numpy as np

from stagedtrees import _kernels


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    sizes = rng.integers(2, 5, size=5000)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    alpha = rng.uniform(0.1, 5, size=offsets[-1])
    counts = rng.integers(0, 100, size=offsets[-1]).astype(np.float64)
    yield "bd_log_score (5000 stages)", "bd_log_score", (alpha, counts, offsets)

    edge_stage = np.repeat(np.arange(len(sizes)), sizes).astype(np.int64)
    stage_alpha = np.add.reduceat(alpha, offsets[:-1])
    steps = rng.integers(0, len(alpha), size=200_000).astype(np.int64)
    record_offsets = np.arange(0, len(steps) + 1, 4, dtype=np.int64)
    yield "sequential_log_score (50k records)", "sequential_log_score", (
        alpha, edge_stage, stage_alpha, steps, record_offsets,
    )

    A = rng.uniform(0.1, 5, size=(400, 3))
    N = rng.integers(0, 100, size=(400, 3)).astype(np.float64)
    yield "merge_deltas (400 stages)", "merge_deltas", (A, N)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':38s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s} {'first call s':>13s}")
    for name, kernel, data in cases(rng):
        numpy_fn = getattr(_kernels, f"{kernel}_numpy")
        numba_fn = getattr(_kernels, f"{kernel}_numba")
        t0 = time.perf_counter()
        numba_fn(*data)
        first = time.perf_counter() - t0
        slow = best_of(numpy_fn, data, args.repeat)
        fast = best_of(numba_fn, data, args.repeat)
        print(f"{name:38s} {slow:10.5f} {fast:10.5f} {slow / fast:8.1f} {first:13.3f}")


if __name__ == "__main__":
    main()
