"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times the support scan (restricted eigenvalue extremes) and the two
assignment scans on fixed random inputs, checks that both backends agree,
and prints one line per case.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from riphard import kernels
from riphard.generators import random_e13
from riphard.sat import e13_masks


def _best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def support_cases():
    rng = np.random.default_rng(0)
    for p, k in ((12, 6), (16, 8), (18, 9)):
        A = rng.standard_normal((p + 4, p)) / np.sqrt(p + 4)
        yield f"support scan p={p} k={k}", A.T @ A, k


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    if kernels.COMPILED is None:
        print("compiled kernels not built; only the fallback is available")
        return
    backends = (("compiled", kernels.COMPILED), ("python", kernels.PYTHON))
    print(f"{'case':34s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")

    for label, gram, k in support_cases():
        results, times = [], []
        for _, mod in backends:
            times.append(
                _best_time(lambda: results.append(kernels.restricted_scan(gram, k, args.workers, mod)), args.repeat)
            )
        a, b = results[0], results[-1]
        assert a[1] == b[1] and a[3] == b[3], "backends chose different supports"
        assert abs(a[0] - b[0]) < 1e-9 and abs(a[2] - b[2]) < 1e-9, "backends disagree"
        print(f"{label:34s} {times[0]:10.4f} {times[1]:10.4f} {times[1] / times[0]:8.2f}x")

    for n in (16, 20):
        masks = e13_masks(random_e13(n, seed=n))
        results, times = [], []
        for _, mod in backends:
            times.append(_best_time(lambda: results.append(kernels.e13_best(masks, n, mod)), args.repeat))
        assert results[0] == results[-1], "backends disagree"
        print(f"{f'assignment scan n={n}':34s} {times[0]:10.4f} {times[1]:10.4f} {times[1] / times[0]:8.2f}x")


if __name__ == "__main__":
    main()
