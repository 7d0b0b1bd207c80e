# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: assignment scans and restricted Gram spectra.

Interface mirrors :mod:`riphard._kernels_py` exactly.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

cdef int MAX_SWEEPS = 100
cdef double EPS = 2.220446049250313e-16


def e13_best(const unsigned long long[:] masks, unsigned long long start,
             unsigned long long stop):
    """First assignment code in [start, stop) maximizing exactly-one clauses."""
    cdef Py_ssize_t m = masks.shape[0], j
    cdef unsigned long long code, hit, best_code = start
    cdef long best = -1, sat
    with nogil:
        for code in range(start, stop):
            sat = 0
            for j in range(m):
                hit = code & masks[j]
                if hit != 0 and (hit & (hit - 1)) == 0:  # exactly one bit
                    sat += 1
            if sat > best:
                best = sat
                best_code = code
    return best, best_code


def cnf_best(const unsigned long long[:] pos, const unsigned long long[:] neg,
             unsigned long long start, unsigned long long stop):
    cdef Py_ssize_t m = pos.shape[0], j
    cdef unsigned long long code, best_code = start
    cdef long best = -1, sat
    with nogil:
        for code in range(start, stop):
            sat = 0
            for j in range(m):
                if (code & pos[j]) != 0 or (~code & neg[j]) != 0:
                    sat += 1
            if sat > best:
                best = sat
                best_code = code
    return best, best_code


cdef int _tridiag_ql_extremes(double* a, int k, double* d, double* e,
                              double* lo, double* hi) noexcept nogil:
    """Extreme eigenvalues of the k-by-k row-major symmetric ``a`` (destroyed).

    Householder reduction to tridiagonal form, then implicit QL with Wilkinson
    shifts; eigenvalues only. Returns 0 on success, 1 if QL fails to converge.
    """
    cdef int i, j, l, m, it, kk
    cdef double scale, h, f, g, hh, r, s, c, p, b, dd
    # tridiagonalize, working on the lower triangle
    for i in range(k - 1, 0, -1):
        l = i - 1
        h = 0.0
        scale = 0.0
        if l > 0:
            for kk in range(l + 1):
                scale += fabs(a[i * k + kk])
            if scale == 0.0:
                e[i] = a[i * k + l]
            else:
                for kk in range(l + 1):
                    a[i * k + kk] /= scale
                    h += a[i * k + kk] * a[i * k + kk]
                f = a[i * k + l]
                g = -sqrt(h) if f >= 0.0 else sqrt(h)
                e[i] = scale * g
                h -= f * g
                a[i * k + l] = f - g
                f = 0.0
                for j in range(l + 1):
                    g = 0.0
                    for kk in range(j + 1):
                        g += a[j * k + kk] * a[i * k + kk]
                    for kk in range(j + 1, l + 1):
                        g += a[kk * k + j] * a[i * k + kk]
                    e[j] = g / h
                    f += e[j] * a[i * k + j]
                hh = f / (h + h)
                for j in range(l + 1):
                    f = a[i * k + j]
                    g = e[j] - hh * f
                    e[j] = g
                    for kk in range(j + 1):
                        a[j * k + kk] -= f * e[kk] + g * a[i * k + kk]
        else:
            e[i] = a[i * k + l]
    for i in range(k):
        d[i] = a[i * k + i]
    # implicit QL on (d, e)
    for i in range(1, k):
        e[i - 1] = e[i]
    e[k - 1] = 0.0
    for l in range(k):
        it = 0
        while True:
            m = l
            while m < k - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_SWEEPS:
                return 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = sqrt(g * g + 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = sqrt(f * f + g * g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    lo[0] = d[0]
    hi[0] = d[0]
    for i in range(1, k):
        if d[i] < lo[0]:
            lo[0] = d[i]
        if d[i] > hi[0]:
            hi[0] = d[i]
    return 0


def sym_extremes(double[:, :] mat):
    """(min, max) eigenvalue of a small symmetric matrix."""
    cdef int k = mat.shape[0], i, j
    cdef double lo, hi
    cdef int status
    cdef double* a = <double*> malloc((k * k + 2 * k) * sizeof(double))
    if a == NULL:
        raise MemoryError()
    try:
        for i in range(k):
            for j in range(k):
                a[i * k + j] = mat[i, j]
        status = _tridiag_ql_extremes(a, k, a + k * k, a + k * k + k, &lo, &hi)
    finally:
        free(a)
    if status:
        raise ArithmeticError("QL iteration did not converge")
    return lo, hi


def restricted_range(const double[:, :] gram, int k, long[:] first, long count):
    """Scan ``count`` supports in lexicographic order starting at ``first``.

    Returns ``(min_val, min_support, max_val, max_support)``; strict
    comparisons keep the earliest support among exact ties.
    """
    cdef int p = gram.shape[0], i, j, pos
    cdef long it
    cdef double lo, hi, best_lo = 0.0, best_hi = 0.0
    cdef long* comb = <long*> malloc(k * sizeof(long))
    cdef long* arg_lo = <long*> malloc(k * sizeof(long))
    cdef long* arg_hi = <long*> malloc(k * sizeof(long))
    cdef int failed = 0
    cdef double* a = <double*> malloc((k * k + 2 * k) * sizeof(double))
    if comb == NULL or arg_lo == NULL or arg_hi == NULL or a == NULL:
        free(comb); free(arg_lo); free(arg_hi); free(a)
        raise MemoryError()
    try:
        for i in range(k):
            comb[i] = first[i]
        with nogil:
            for it in range(count):
                for i in range(k):
                    for j in range(k):
                        a[i * k + j] = gram[comb[i], comb[j]]
                if _tridiag_ql_extremes(a, k, a + k * k, a + k * k + k, &lo, &hi):
                    failed = 1
                    break
                if it == 0 or lo < best_lo:
                    best_lo = lo
                    for i in range(k):
                        arg_lo[i] = comb[i]
                if it == 0 or hi > best_hi:
                    best_hi = hi
                    for i in range(k):
                        arg_hi[i] = comb[i]
                # advance to the next k-subset of range(p)
                pos = k - 1
                while pos >= 0 and comb[pos] == p - k + pos:
                    pos -= 1
                if pos < 0:
                    break
                comb[pos] += 1
                for i in range(pos + 1, k):
                    comb[i] = comb[i - 1] + 1
        lo_support = tuple([arg_lo[i] for i in range(k)])
        hi_support = tuple([arg_hi[i] for i in range(k)])
    finally:
        free(comb); free(arg_lo); free(arg_hi); free(a)
    if failed:
        raise ArithmeticError("QL iteration did not converge")
    return float(best_lo), lo_support, float(best_hi), hi_support
