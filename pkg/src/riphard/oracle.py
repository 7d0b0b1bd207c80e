"""Exhaustive restricted-isometry queries.

Every query enumerates all column supports of one size and takes extreme
eigenvalues of the corresponding principal submatrices of the Gram matrix.
Supports of exactly ``k`` columns suffice for "at most k" statements: a
vector on a smaller support is also supported on any size-k superset.

All functions accept a :class:`~riphard.rational.RationalMatrix` or a 2-d
float array.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import comb, floor, sqrt

import numpy as np

from riphard import kernels
from riphard.errors import CapacityError, InputError
from riphard.rational import Matrix, RationalMatrix, as_float
from riphard.sat import E13Instance

DEFAULT_BUDGET = 10**7
DEFAULT_TOLERANCE = 1e-9
ZERO_TOLERANCE = 1e-7


def _normalize_sign(x: np.ndarray, tail: slice | None = None) -> np.ndarray:
    """Flip so the sum over ``tail`` (default: all) is positive; ties go to the first nonzero entry."""
    s = float(np.sum(x[tail] if tail is not None else x))
    nz = np.flatnonzero(x)
    if s < 0 or (s == 0 and nz.size and x[nz[0]] < 0):
        x = -x
    return x + 0.0  # no negative zeros in reports


def _support_count(p: int, k: int, budget: int) -> int:
    if not 1 <= k <= p:
        raise InputError(f"sparsity k={k} must lie in 1..{p}")
    count = comb(p, k)
    if count > budget:
        raise CapacityError(f"C({p}, {k}) = {count} supports exceeds the enumeration budget of {budget}")
    return count


@dataclass(frozen=True)
class RipReport:
    """Extreme restricted eigenvalues at one sparsity level.

    ``witness_vector`` is a unit vector attaining whichever extreme sets
    ``delta_star`` (the lower one on ties).
    """

    k: int
    min_restricted_eig: float
    max_restricted_eig: float
    witness_support_min: tuple[int, ...]
    witness_support_max: tuple[int, ...]
    witness_vector: tuple[float, ...]
    delta_star: float
    tolerance: float

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("witness_support_min", "witness_support_max", "witness_vector"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RipReport":
        d = dict(d)
        for key in ("witness_support_min", "witness_support_max", "witness_vector"):
            d[key] = tuple(d[key])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def restricted_extremes(
    X: Matrix,
    k: int,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    tolerance: float = DEFAULT_TOLERANCE,
    backend=None,
) -> RipReport:
    A = as_float(X)
    p = A.shape[1]
    _support_count(p, k, budget)
    gram = A.T @ A
    lo, lo_support, hi, hi_support = kernels.restricted_scan(gram, k, workers=workers, backend=backend)
    delta_star = max(hi - 1.0, 1.0 - lo, 0.0)
    use_min = 1.0 - lo >= hi - 1.0
    support = lo_support if use_min else hi_support
    idx = list(support)
    _, vecs = np.linalg.eigh(gram[np.ix_(idx, idx)])
    witness = np.zeros(p)
    witness[idx] = vecs[:, 0] if use_min else vecs[:, -1]
    witness = _normalize_sign(witness)
    return RipReport(
        k=k,
        min_restricted_eig=float(lo),
        max_restricted_eig=float(hi),
        witness_support_min=tuple(lo_support),
        witness_support_max=tuple(hi_support),
        witness_vector=tuple(float(x) for x in witness),
        delta_star=float(delta_star),
        tolerance=float(tolerance),
    )


def rip_delta(X: Matrix, k: int, **kwargs) -> float:
    """Smallest delta with X in RIP(k, delta)."""
    return restricted_extremes(X, k, **kwargs).delta_star


def is_rip(X: Matrix, k: int, delta, *, tolerance: float = DEFAULT_TOLERANCE, **kwargs) -> bool:
    if k < 1:
        return True
    return rip_delta(X, k, tolerance=tolerance, **kwargs) <= float(delta) + tolerance


def rip_max_k(X: Matrix, delta, *, tolerance: float = DEFAULT_TOLERANCE, **kwargs) -> int:
    """Largest k with X in RIP(k, delta), or 0 if even k = 1 fails."""
    if not float(delta) > 0:
        raise InputError("delta must be positive")
    p = as_float(X).shape[1]
    best = 0
    for k in range(1, p + 1):
        if not is_rip(X, k, delta, tolerance=tolerance, **kwargs):
            break
        best = k
    return best


class Verdict(str, Enum):
    IS_RIP = "IsRip"
    FAR_FROM_RIP = "FarFromRip"
    INDETERMINATE = "Indeterminate"


def _is_psd(rows: list[list[Fraction]], strict: bool = False) -> bool:
    """Exact (semi)definiteness by symmetric elimination; a zero pivot needs a zero row."""
    A = [r[:] for r in rows]
    size = len(A)
    for j in range(size):
        piv = A[j][j]
        if piv < 0 or (strict and piv == 0):
            return False
        if piv == 0:
            if any(A[j][i] for i in range(j + 1, size)):
                return False
            continue
        for i in range(j + 1, size):
            f = A[i][j] / piv
            if f:
                Ai, Aj = A[i], A[j]
                for col in range(j + 1, size):
                    Ai[col] -= f * Aj[col]
    return True


def exact_rip_violation(X: RationalMatrix, k: int, delta, *, budget: int = DEFAULT_BUDGET):
    """First size-k support (lexicographic) whose Gram block leaves ``[1-delta, 1+delta]``, else ``None``.

    Decided in exact arithmetic: ``G_S - (1-delta) I`` and ``(1+delta) I - G_S``
    must both be positive semidefinite.
    """
    if not isinstance(X, RationalMatrix):
        raise InputError("exact RIP tests need a rational matrix")
    if k < 1:
        return None
    delta = Fraction(delta)
    _support_count(X.cols, k, budget)
    G = X.gram().entries
    lo, hi = 1 - delta, 1 + delta
    for S in combinations(range(X.cols), k):
        below = [[G[a][b] - (lo if a == b else 0) for b in S] for a in S]
        above = [[(hi if a == b else 0) - G[a][b] for b in S] for a in S]
        if not (_is_psd(below) and _is_psd(above)):
            return S
    return None


def exact_min_violation(X: RationalMatrix, k: int, t, *, strict: bool = False, budget: int = DEFAULT_BUDGET):
    """First size-k support whose restricted minimum eigenvalue is below ``t`` (not above, if ``strict``)."""
    if not isinstance(X, RationalMatrix):
        raise InputError("exact tests need a rational matrix")
    t = Fraction(t)
    _support_count(X.cols, k, budget)
    G = X.gram().entries
    for S in combinations(range(X.cols), k):
        if not _is_psd([[G[a][b] - (t if a == b else 0) for b in S] for a in S], strict):
            return S
    return None


def is_rip_exact(X: RationalMatrix, k: int, delta, **kwargs) -> bool:
    return exact_rip_violation(X, k, delta, **kwargs) is None


def gap_decide(X: Matrix, k, delta, lambda1, lambda2, *, exact: bool = False, **kwargs) -> Verdict:
    """Decide between RIP(floor(k), delta) and not RIP(floor(k/lambda1), lambda2*delta).

    ``k`` may be rational; both levels are rounded down only after the
    division. IsRip takes precedence when both tests succeed. ``exact``
    switches to rational semidefiniteness tests (rational ``X`` only).
    """
    k, lambda1, lambda2 = Fraction(k), Fraction(lambda1), Fraction(lambda2)
    if lambda1 < 1 or lambda2 < 1:
        raise InputError("lambda1 and lambda2 must be at least 1")
    test = is_rip_exact if exact else is_rip
    if exact:
        kwargs = {"budget": kwargs["budget"]} if "budget" in kwargs else {}
    if test(X, floor(k), Fraction(delta), **kwargs):
        return Verdict.IS_RIP
    if not test(X, floor(k / lambda1), lambda2 * Fraction(delta), **kwargs):
        return Verdict.FAR_FROM_RIP
    return Verdict.INDETERMINATE


# --------------------------------------------------------------------------
# norms


def operator_norm(X: Matrix) -> float:
    A = as_float(X)
    if A.size == 0:
        return 0.0
    gram = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    return sqrt(max(float(np.linalg.eigvalsh(gram)[-1]), 0.0))


def schur_bound_squared(X: Matrix):
    """max_{i,j} (row-i l1 norm) * (column-j l1 norm); exact for rational input."""
    if isinstance(X, RationalMatrix):
        return max(X.row_l1(), default=Fraction(0)) * max(X.col_l1(), default=Fraction(0))
    A = np.abs(as_float(X))
    if A.size == 0:
        return 0.0
    return float(A.sum(axis=1).max() * A.sum(axis=0).max())


def schur_bound(X: Matrix) -> float:
    """Upper bound on the operator norm from row and column l1 norms."""
    return sqrt(float(schur_bound_squared(X)))


# --------------------------------------------------------------------------
# sparse minimizer


@dataclass(frozen=True)
class MinimizerReport:
    """Minimizer of ||X w||^2 over ||w||^2 = 2n, ||w||_0 <= k.

    ``w`` is split into thirds ``(w_plus, w_minus, v)``; the sign is fixed so
    that ``v`` has nonnegative mean.
    """

    n: int
    k: int
    w: tuple[float, ...]
    support: tuple[int, ...]
    objective: float
    eigen_objective: float

    @property
    def w_plus(self) -> np.ndarray:
        return np.array(self.w[: self.n])

    @property
    def w_minus(self) -> np.ndarray:
        return np.array(self.w[self.n : 2 * self.n])

    @property
    def v(self) -> np.ndarray:
        return np.array(self.w[2 * self.n :])

    @property
    def v_bar(self) -> float:
        return float(np.mean(self.v))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "w": list(self.w),
            "w_plus": self.w_plus.tolist(),
            "w_minus": self.w_minus.tolist(),
            "v": self.v.tolist(),
            "v_bar": self.v_bar,
            "objective": self.objective,
            "eigen_objective": self.eigen_objective,
            "support": list(self.support),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MinimizerReport":
        return cls(
            n=d["n"],
            k=d["k"],
            w=tuple(d["w"]),
            support=tuple(d["support"]),
            objective=d["objective"],
            eigen_objective=d["eigen_objective"],
        )


def minimizer_sparsity(n: int, xi) -> int:
    return min(floor(2 * (1 + Fraction(xi) ** 2) * n), 3 * n)


def sparse_minimizer(
    X_tilde: Matrix,
    n: int,
    xi,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    backend=None,
) -> MinimizerReport:
    """Exact (enumerated) minimizer of the normalized sparse program.

    ``objective`` is ||X w||^2 evaluated directly from the returned ``w``;
    ``eigen_objective`` is 2n times the restricted minimum eigenvalue.
    """
    A = as_float(X_tilde)
    if A.shape[1] != 3 * n:
        raise InputError(f"matrix has {A.shape[1]} columns, expected 3n = {3 * n}")
    k = minimizer_sparsity(n, xi)
    _support_count(3 * n, k, budget)
    gram = A.T @ A
    lo, support, _, _ = kernels.restricted_scan(gram, k, workers=workers, backend=backend)
    idx = list(support)
    _, vecs = np.linalg.eigh(gram[np.ix_(idx, idx)])
    w = np.zeros(3 * n)
    w[idx] = vecs[:, 0] * sqrt(2 * n)
    w = _normalize_sign(w, slice(2 * n, 3 * n))
    return MinimizerReport(
        n=n,
        k=k,
        w=tuple(float(x) for x in w),
        support=tuple(support),
        objective=float(np.sum((A @ w) ** 2)),
        eigen_objective=float(2 * n * lo),
    )


def classify_good_bad(
    report: MinimizerReport, phi: E13Instance, zero_tol: float = ZERO_TOLERANCE
) -> tuple[frozenset[int], frozenset[int], int]:
    """Good variables (1-based), good clauses (0-based) and the bad-clause count.

    A variable is good when exactly one of its two entries is zero and the
    other lies in (2/3, 4/3); a clause is good when all its variables are good
    and its own entry of ``v`` lies in (5/6, 7/6).
    """
    if report.n != phi.num_vars:
        raise InputError(f"report has n={report.n}, instance has {phi.num_vars} variables")
    wp, wm, v = report.w_plus, report.w_minus, report.v
    good_vars = set()
    for i in range(report.n):
        zp, zm = abs(wp[i]) <= zero_tol, abs(wm[i]) <= zero_tol
        if zp != zm:
            other = wm[i] if zp else wp[i]
            if 2 / 3 < other < 4 / 3:
                good_vars.add(i + 1)
    good_clauses = {
        j
        for j, clause in enumerate(phi.clauses)
        if all(x in good_vars for x in clause) and 5 / 6 < v[j] < 7 / 6
    }
    return frozenset(good_vars), frozenset(good_clauses), phi.num_clauses - len(good_clauses)


@dataclass(frozen=True)
class MinimizerStatistics:
    """Quantities bounded by the structural lemmas on the minimizer."""

    v_spread: float
    pair_spread: float
    v_bar_sq: float
    both_nonzero: int
    both_zero: int
    top_mass: float
    bad_clauses: int
    extras: dict = field(default_factory=dict)


def minimizer_statistics(
    report: MinimizerReport, phi: E13Instance, zero_tol: float = ZERO_TOLERANCE
) -> MinimizerStatistics:
    wp, wm, v = report.w_plus, report.w_minus, report.v
    vb = report.v_bar
    zp, zm = np.abs(wp) <= zero_tol, np.abs(wm) <= zero_tol
    _, _, bad = classify_good_bad(report, phi, zero_tol)
    return MinimizerStatistics(
        v_spread=float(np.sum((v - vb) ** 2)),
        pair_spread=float(np.sum((wp + wm - vb) ** 2)),
        v_bar_sq=vb * vb,
        both_nonzero=int(np.sum(~zp & ~zm)),
        both_zero=int(np.sum(zp & zm)),
        top_mass=float(np.sum(wp**2) + np.sum(wm**2)),
        bad_clauses=bad,
    )
