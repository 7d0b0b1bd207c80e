"""Pure-Python/numpy fallback for :mod:`riphard._kernels`.

Same signatures and tie-break semantics; eigenvalues come from LAPACK
(``numpy.linalg.eigvalsh``) instead of the hand-written tridiagonal QL, so values may differ in
the last few ulps.
"""

from __future__ import annotations

import numpy as np

CHUNK = 1 << 16
BATCH = 4096


def _scan(start: int, stop: int, count_fn):
    best, best_code = -1, start
    for lo in range(start, stop, CHUNK):
        codes = np.arange(lo, min(lo + CHUNK, stop), dtype=np.uint64)
        sat = count_fn(codes)
        i = int(np.argmax(sat))
        if sat[i] > best:
            best, best_code = int(sat[i]), lo + i
    return best, best_code


def e13_best(masks: np.ndarray, start: int, stop: int) -> tuple[int, int]:
    def count(codes):
        sat = np.zeros(codes.shape, dtype=np.int64)
        for mask in masks:
            sat += np.bitwise_count(codes & mask) == 1
        return sat

    return _scan(start, stop, count)


def cnf_best(pos: np.ndarray, neg: np.ndarray, start: int, stop: int) -> tuple[int, int]:
    def count(codes):
        sat = np.zeros(codes.shape, dtype=np.int64)
        inverted = ~codes
        for pm, nm in zip(pos, neg):
            sat += ((codes & pm) != 0) | ((inverted & nm) != 0)
        return sat

    return _scan(start, stop, count)


def sym_extremes(mat: np.ndarray) -> tuple[float, float]:
    w = np.linalg.eigvalsh(np.asarray(mat, dtype=float))
    return float(w[0]), float(w[-1])


def _next_combination(comb: list[int], p: int) -> bool:
    k = len(comb)
    pos = k - 1
    while pos >= 0 and comb[pos] == p - k + pos:
        pos -= 1
    if pos < 0:
        return False
    comb[pos] += 1
    for i in range(pos + 1, k):
        comb[i] = comb[i - 1] + 1
    return True


def restricted_range(gram: np.ndarray, k: int, first, count: int):
    p = gram.shape[0]
    comb = [int(c) for c in first]
    best_lo = best_hi = None
    arg_lo = arg_hi = None
    remaining = count
    exhausted = False
    while remaining > 0 and not exhausted:
        batch = []
        while len(batch) < min(BATCH, remaining):
            batch.append(tuple(comb))
            if not _next_combination(comb, p):
                exhausted = True
                break
        remaining -= len(batch)
        idx = np.array(batch, dtype=np.intp)
        sub = gram[idx[:, :, None], idx[:, None, :]]
        w = np.linalg.eigvalsh(sub)
        lo, hi = w[:, 0], w[:, -1]
        i, j = int(np.argmin(lo)), int(np.argmax(hi))
        if best_lo is None or lo[i] < best_lo:
            best_lo, arg_lo = float(lo[i]), batch[i]
        if best_hi is None or hi[j] > best_hi:
            best_hi, arg_hi = float(hi[j]), batch[j]
    return best_lo, arg_lo, best_hi, arg_hi
