"""Backend selection and work partitioning for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``RIPHARD_PURE_PYTHON=1`` forces the numpy fallback. Both backends
are always reachable as :data:`COMPILED` (possibly ``None``) and
:data:`PYTHON` so tests and benchmarks can compare them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from math import comb
from types import ModuleType

import numpy as np

from riphard import _kernels_py as PYTHON

try:
    from riphard import _kernels as COMPILED
except ImportError:  # extension not built
    COMPILED = None

if COMPILED is not None and not os.environ.get("RIPHARD_PURE_PYTHON"):
    impl: ModuleType = COMPILED
    BACKEND = "compiled"
else:
    impl = PYTHON
    BACKEND = "python"


def e13_best(masks: np.ndarray, num_vars: int, backend: ModuleType | None = None):
    return (backend or impl).e13_best(np.ascontiguousarray(masks, dtype=np.uint64), 0, 1 << num_vars)


def cnf_best(pos: np.ndarray, neg: np.ndarray, num_vars: int, backend: ModuleType | None = None):
    return (backend or impl).cnf_best(
        np.ascontiguousarray(pos, dtype=np.uint64),
        np.ascontiguousarray(neg, dtype=np.uint64),
        0,
        1 << num_vars,
    )


def sym_extremes(mat, backend: ModuleType | None = None) -> tuple[float, float]:
    return (backend or impl).sym_extremes(np.ascontiguousarray(mat, dtype=float))


def unrank_combination(rank: int, p: int, k: int) -> tuple[int, ...]:
    """The ``rank``-th k-subset of range(p) in lexicographic order."""
    if not 0 <= rank < comb(p, k):
        raise IndexError(rank)
    out = []
    x = 0
    for i in range(k):
        while True:
            below = comb(p - x - 1, k - i - 1)
            if rank < below:
                break
            rank -= below
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def restricted_scan(
    gram: np.ndarray,
    k: int,
    workers: int = 1,
    backend: ModuleType | None = None,
) -> tuple[float, tuple[int, ...], float, tuple[int, ...]]:
    """Extreme eigenvalues of all k-by-k principal submatrices of ``gram``.

    Supports are split into contiguous rank ranges, one per worker. Merging
    by (value, support) reproduces the sequential first-in-order tie-break,
    so the result does not depend on ``workers``.
    """
    mod = backend or impl
    gram = np.ascontiguousarray(gram, dtype=float)
    p = gram.shape[0]
    total = comb(p, k)
    workers = max(1, min(int(workers), total))
    bounds = [total * i // workers for i in range(workers + 1)]
    chunks = [(bounds[i], bounds[i + 1] - bounds[i]) for i in range(workers) if bounds[i + 1] > bounds[i]]

    def run(chunk):
        start, count = chunk
        first = np.array(unrank_combination(start, p, k), dtype=np.int64)
        return mod.restricted_range(gram, k, first, count)

    if len(chunks) == 1:
        results = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(run, chunks))
    lo, lo_support = min((r[0], tuple(r[1])) for r in results)
    hi_neg, hi_support = min((-r[2], tuple(r[3])) for r in results)
    return lo, lo_support, -hi_neg, hi_support
