"""Transforms that move the RIP parameter or reshape a matrix while keeping its RIP status.

* :func:`shift_delta_down` stacks ``mu X`` over ``nu I`` so that
  ``||X'u||^2 = mu^2 ||Xu||^2 + nu^2 ||u||^2``.
* :func:`shift_delta_up` rescales, ``X' = mu X``.
* :func:`squarify` replaces a tall matrix by the square triangular factor of
  its QR decomposition.
* :func:`block_diag` and :func:`widen_rectangular` assemble block-diagonal
  matrices, whose RIP constant is the larger of the two blocks'.

Rational inputs give rational outputs for the shifts and block assembly;
QR runs in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from riphard.errors import ConstructionError, InputError
from riphard.oracle import RipReport, operator_norm
from riphard.rational import Matrix, RationalMatrix, as_float

DENOMINATOR_CAP = 10**6
NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ShiftParams:
    """Scalars of a delta shift; ``nu`` is zero for the upward shift."""

    kind: str
    mu: Fraction
    nu: Fraction
    tau: Fraction
    lambda2_prime: Fraction

    def to_dict(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("kind", "mu", "nu", "tau", "lambda2_prime")}


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def rational_sqrt_in(lo: Fraction, hi: Fraction, *, open_hi: bool = False, cap: int = DENOMINATOR_CAP):
    """First ``a/q`` (smallest q, then smallest a) with ``lo <= (a/q)^2 <= hi``, or ``None``.

    With ``open_hi`` the upper end is excluded.
    """
    lo, hi = max(Fraction(lo), Fraction(0)), Fraction(hi)
    if hi < lo or (open_hi and hi == lo):
        return None
    for q in range(1, cap + 1):
        t = _ceil(lo * q * q)  # need a^2 >= lo q^2, i.e. a^2 >= t
        a = 0 if t <= 0 else isqrt(t - 1) + 1
        x = Fraction(a, q)
        sq = x * x
        if sq < hi or (sq == hi and not open_hi):
            return x
    return None


def _scale(X: Matrix, c: Fraction) -> Matrix:
    if isinstance(X, RationalMatrix):
        return X.scale(c)
    return as_float(X) * float(c)


def _check_unit_interval(delta, delta_prime) -> tuple[Fraction, Fraction]:
    delta, delta_prime = Fraction(delta), Fraction(delta_prime)
    for name, x in (("delta", delta), ("delta_prime", delta_prime)):
        if not 0 < x < 1:
            raise InputError(f"{name} must lie in (0, 1), got {x}")
    return delta, delta_prime


def max_shift_tau(delta_prime, lambda2) -> Fraction:
    lambda2 = Fraction(lambda2)
    return (lambda2 - 1) * Fraction(delta_prime) / (2 + 4 * lambda2)


def shift_delta_down(
    X: Matrix, delta, delta_prime, lambda2, tau=None, cap: int = DENOMINATOR_CAP
) -> tuple[Matrix, ShiftParams]:
    """Map RIP(k, delta) to RIP(k, delta_prime) for ``delta_prime < delta``.

    ``tau`` defaults to its largest admissible value.
    """
    delta, delta_prime = _check_unit_interval(delta, delta_prime)
    lambda2 = Fraction(lambda2)
    if not delta_prime < delta:
        raise InputError(f"need delta_prime < delta, got {delta_prime} >= {delta}")
    if not lambda2 > 1:
        raise InputError(f"lambda2 must exceed 1, got {lambda2}")
    bound = max_shift_tau(delta_prime, lambda2)
    tau = bound if tau is None else Fraction(tau)
    if not 0 < tau <= bound:
        raise InputError(f"tau must lie in (0, {bound}], got {tau}")
    mu = rational_sqrt_in((delta_prime - 2 * tau) / delta, (delta_prime - tau) / delta, cap=cap)
    if mu is None:
        raise ConstructionError(f"no rational mu with denominator <= {cap}")
    nu = rational_sqrt_in(1 - tau - mu * mu, 1 - mu * mu, cap=cap)
    if nu is None:
        raise ConstructionError(f"no rational nu with denominator <= {cap}")
    p = X.cols if isinstance(X, RationalMatrix) else as_float(X).shape[1]
    if isinstance(X, RationalMatrix):
        out = RationalMatrix.vstack([X.scale(mu), RationalMatrix.identity(p).scale(nu)], ("scaled", "identity"))
    else:
        out = np.vstack([as_float(X) * float(mu), np.eye(p) * float(nu)])
    return out, ShiftParams("shift-down", mu, nu, tau, (lambda2 + 1) / 2)


def shift_delta_up(
    X: Matrix, delta, delta_prime, lambda2, tol: float = NORM_TOLERANCE, cap: int = DENOMINATOR_CAP
) -> tuple[Matrix, ShiftParams]:
    """Map RIP(k, delta) to RIP(k, delta_prime) for ``delta_prime > delta`` by scaling.

    The input must satisfy ``||X||_op^2 <= 1 + delta``.
    """
    delta, delta_prime = _check_unit_interval(delta, delta_prime)
    lambda2 = Fraction(lambda2)
    if not delta < delta_prime:
        raise InputError(f"need delta < delta_prime, got {delta} >= {delta_prime}")
    if not lambda2 * delta < 1:
        raise ConstructionError(f"lambda2 * delta = {lambda2 * delta} >= 1 leaves no admissible scale")
    norm = operator_norm(X)
    if norm > np.sqrt(float(1 + delta)) + tol:
        raise InputError(f"operator norm {norm:.12g} exceeds sqrt(1 + delta) = {np.sqrt(float(1 + delta)):.12g}")
    lo = (1 - delta_prime) / (1 - delta)
    hi = (1 - delta_prime) / (1 - lambda2 * delta)
    if hi > 1:
        mu = rational_sqrt_in(lo, 1, cap=cap)
    else:
        mu = rational_sqrt_in(lo, hi, open_hi=True, cap=cap)
    if mu is None:
        raise ConstructionError(f"no rational mu with denominator <= {cap}")
    lambda2_prime = (1 - mu * mu * (1 - lambda2 * delta)) / delta_prime
    return _scale(X, mu), ShiftParams("shift-up", mu, Fraction(0), Fraction(0), lambda2_prime)


# --------------------------------------------------------------------------
# QR squarification


def householder_qr(A) -> tuple[np.ndarray, np.ndarray]:
    """Full QR of a tall matrix with ``R`` having a nonnegative diagonal.

    Columns already zero below the diagonal are left alone, so an upper
    triangular input with nonnegative diagonal comes back unchanged.
    """
    R = np.array(as_float(A), dtype=float)
    rows, cols = R.shape
    Q = np.eye(rows)
    for j in range(min(rows - 1, cols)):
        x = R[j:, j]
        if not np.any(x[1:]):
            continue
        alpha = -np.copysign(np.linalg.norm(x), x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        R[j:, :] -= 2.0 * np.outer(v, v @ R[j:, :])
        Q[:, j:] -= 2.0 * np.outer(Q[:, j:] @ v, v)
        R[j + 1 :, j] = 0.0
    for j in range(min(rows, cols)):
        if R[j, j] < 0:
            R[j, :] = -R[j, :]
            Q[:, j] = -Q[:, j]
    return Q, R


def squarify(X: Matrix, tau=None, tol: float = NORM_TOLERANCE) -> np.ndarray:
    """Top ``p x p`` block of the triangular QR factor of an ``n x p`` matrix, ``n >= p``.

    Requires ``||X||_op <= 2``. When ``tau`` is given the factorization
    residual ``||QR - X||_op`` is checked against ``tau / 4``.
    """
    A = as_float(X)
    rows, cols = A.shape
    if rows < cols:
        raise InputError(f"squarify needs rows >= cols, got {rows}x{cols}")
    norm = operator_norm(A)
    if norm > 2 + tol:
        raise InputError(f"operator norm {norm:.12g} exceeds 2")
    Q, R = householder_qr(A)
    if tau is not None:
        tau = float(Fraction(tau))
        if not tau > 0:
            raise InputError("tau must be positive")
        residual = operator_norm(Q @ R - A)
        if residual > tau / 4:
            raise ConstructionError(f"QR residual {residual:.3g} exceeds tau/4 = {tau / 4:.3g}")
    return R[:cols, :cols].copy()


def qr_guarantee_gap(X: Matrix, X_hat: Matrix, samples: int = 1000, seed: int = 0) -> float:
    """max | ||Xu||^2 - ||X_hat u||^2 | over random unit vectors ``u``."""
    A, B = as_float(X), as_float(X_hat)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((A.shape[1], samples))
    U /= np.linalg.norm(U, axis=0)
    return float(np.max(np.abs(np.sum((A @ U) ** 2, axis=0) - np.sum((B @ U) ** 2, axis=0))))


# --------------------------------------------------------------------------
# block assembly


def block_diag(A: Matrix, B: Matrix) -> Matrix:
    if isinstance(A, RationalMatrix) and isinstance(B, RationalMatrix):
        top = RationalMatrix.hstack([A, RationalMatrix.zeros(A.rows, B.cols)])
        bottom = RationalMatrix.hstack([RationalMatrix.zeros(B.rows, A.cols), B])
        return RationalMatrix.vstack([top, bottom], ("first", "second"))
    a, b = as_float(A), as_float(B)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0] :, a.shape[1] :] = b
    return out


def widen_rectangular(A: Matrix, B: Matrix, certificate: RipReport | None, k: int, delta) -> tuple[Matrix, float]:
    """Block-diagonal ``[A 0; 0 B]`` where ``B`` carries a stored RIP certificate at level ``(k, delta)``.

    The result has the same RIP(k, delta) status as ``A``. Returns the
    matrix and its achieved columns/rows ratio.
    """
    if certificate is None:
        raise InputError("widening needs a RIP certificate for the padding block")
    b_cols = B.cols if isinstance(B, RationalMatrix) else as_float(B).shape[1]
    if len(certificate.witness_vector) != b_cols:
        raise InputError(f"certificate is for {len(certificate.witness_vector)} columns, block has {b_cols}")
    if certificate.k < k:
        raise InputError(f"certificate covers k={certificate.k}, need k >= {k}")
    if certificate.delta_star > float(Fraction(delta)) + certificate.tolerance:
        raise InputError(f"certificate delta* = {certificate.delta_star:.6g} exceeds delta = {float(Fraction(delta)):.6g}")
    X = block_diag(A, B)
    rows, cols = X.shape
    return X, cols / rows
