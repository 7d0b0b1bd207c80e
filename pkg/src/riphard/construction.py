"""Exact construction of the reduction matrix and its constant ledger.

For a positive 1-in-3 instance with ``n`` variables and ``m <= n`` clauses
the reduction matrix has ``4n + m`` rows and ``3n`` columns, laid out as
five row blocks over three column blocks ``(u+, u-, v)``::

    identity-top     [ I        0        0      ]
    identity-second  [ 0        I        0      ]
    projector        [ 0        0        P / xi ]
    coupling         [ I / xi   I / xi  -I / xi ]
    clause           [ eps*Phi  0       -eps*I' ]

``P = I - 11^T / n`` and ``I'`` is the first ``m`` rows of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor

from riphard.errors import ConstructionError, InputError
from riphard.rational import RationalMatrix
from riphard.sat import Assignment, E13Instance

BLOCK_NAMES = ("identity-top", "identity-second", "projector", "coupling", "clause")


@dataclass(frozen=True)
class ReductionParams:
    """Constants tying the SAT gap ``alpha`` to the RIP gap.

    ``epsilon`` weights the clause block, ``xi`` the consistency blocks.

    ``check_order=False`` admits ``xi >= epsilon``; the matrix is still
    well defined but the minimizer bounds no longer apply.
    """

    epsilon: Fraction
    xi: Fraction
    alpha: Fraction
    check_order: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        for name in ("epsilon", "xi", "alpha"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not (0 < self.xi < 1 and 0 < self.epsilon < 1):
            raise InputError(f"xi and epsilon must lie in (0, 1), got xi={self.xi}, epsilon={self.epsilon}")
        if self.check_order and not self.xi < self.epsilon:
            raise InputError(f"need xi < epsilon, got xi={self.xi}, epsilon={self.epsilon}")
        if not 0 < self.alpha <= 1:
            raise InputError(f"alpha must lie in (0, 1], got {self.alpha}")

    @classmethod
    def hardness(cls, alpha) -> "ReductionParams":
        """epsilon = 1/5 and xi = 1/ceil(10^5/alpha), the choice that makes rho positive."""
        alpha = Fraction(alpha)
        return cls(Fraction(1, 5), Fraction(1, ceil(Fraction(10**5) / alpha)), alpha)

    @classmethod
    def demo(cls, alpha=Fraction(1, 100)) -> "ReductionParams":
        """epsilon = 1/5, xi = 1/200: the largest xi the bad-clause bound admits."""
        return cls(Fraction(1, 5), Fraction(1, 200), Fraction(alpha))

    @property
    def c1(self) -> Fraction:
        """Operator-norm bound of the unscaled matrix."""
        return 3 / self.xi

    @property
    def c2(self) -> Fraction:
        return 1 + self.xi**2

    @property
    def rho(self) -> Fraction:
        eps, xi = self.epsilon, self.xi
        return eps**2 / 36 * (Fraction(9, 13) * self.alpha - 1284 * xi**2) - 25 * xi

    @property
    def c3(self) -> Fraction:
        return self.rho

    @property
    def delta(self) -> Fraction:
        return 1 - (1 + self.rho) / (18 / self.xi**2)

    @property
    def lambda1(self) -> Fraction:
        return self.c2

    @property
    def lambda2(self) -> Fraction:
        big = 18 / self.xi**2
        return big / (big - self.rho)

    def sparsity(self, n: int) -> int:
        """floor(2 * c2 * n), the sparsity level of the far-from-RIP side."""
        return floor(2 * self.c2 * n)

    def as_dict(self) -> dict[str, str]:
        names = ("epsilon", "xi", "alpha", "c1", "c2", "rho", "delta", "lambda1", "lambda2")
        return {k: str(getattr(self, k)) for k in names}


def build_clause_matrix(phi: E13Instance) -> RationalMatrix:
    """0/1 matrix with entry (i, j) = 1 iff variable j+1 occurs in clause i."""
    n = phi.num_vars
    rows = [[1 if j + 1 in clause else 0 for j in range(n)] for clause in phi.clauses]
    return RationalMatrix.from_rows(rows, cols=n)


def build_projector(n: int) -> RationalMatrix:
    """Orthogonal projector onto the complement of the all-ones vector."""
    if n < 1:
        raise InputError("n must be positive")
    off = Fraction(-1, n)
    return RationalMatrix.from_rows([[1 + off if i == j else off for j in range(n)] for i in range(n)])


def build_reduction_matrix(phi: E13Instance, params: ReductionParams) -> RationalMatrix:
    n, m = phi.num_vars, phi.num_clauses
    if m > n:
        raise ConstructionError(
            f"instance has {m} clauses but only {n} variables; the truncated identity needs m <= n"
        )
    inv_xi, eps = 1 / params.xi, params.epsilon
    eye = RationalMatrix.identity(n)
    zero = RationalMatrix.zeros(n, n)
    hstack = RationalMatrix.hstack
    clause = hstack(
        [
            build_clause_matrix(phi).scale(eps),
            RationalMatrix.zeros(m, n),
            RationalMatrix.from_rows([eye.entries[i] for i in range(m)], cols=n).scale(-eps),
        ]
    )
    parts = [
        hstack([eye, zero, zero]),
        hstack([zero, eye, zero]),
        hstack([zero, zero, build_projector(n).scale(inv_xi)]),
        hstack([eye.scale(inv_xi), eye.scale(inv_xi), eye.scale(-inv_xi)]),
        clause,
    ]
    return RationalMatrix.vstack(parts, BLOCK_NAMES)


def build_scaled_matrix(phi: E13Instance, params: ReductionParams) -> RationalMatrix:
    """The reduction matrix divided by c1, so that its operator norm is at most 1."""
    return build_reduction_matrix(phi, params).scale(1 / params.c1)


def assignment_vector(a: Assignment) -> tuple[int, ...]:
    """0/1 vector (u+, u-, v) with u+ = a, u- = not a, v = all ones."""
    plus = [1 if b else 0 for b in a.bits]
    return tuple(plus + [1 - x for x in plus] + [1] * len(plus))


def is_assignment_vector(u) -> bool:
    if len(u) % 3:
        return False
    n = len(u) // 3
    return (
        all(x in (0, 1) for x in u)
        and all(u[i] + u[i + n] == 1 for i in range(n))
        and all(x == 1 for x in u[2 * n :])
    )


@dataclass(frozen=True)
class AssignmentValue:
    """Exact ``||X u||^2`` for an assignment vector, with its a-priori bounds."""

    value: Fraction
    unsatisfied: int
    lower: Fraction
    upper: Fraction
    no_clause_all_true: bool

    @property
    def at_lower_bound(self) -> bool:
        return self.value == self.lower


def assignment_value_exact(phi: E13Instance, params: ReductionParams, a: Assignment) -> AssignmentValue:
    """n + eps^2 * ||Phi u+ - 1||^2; the projector and coupling blocks vanish."""
    if len(a) != phi.num_vars:
        raise InputError(f"assignment has {len(a)} variables, instance has {phi.num_vars}")
    eps2 = params.epsilon**2
    residual = 0
    unsat = 0
    all_true = False
    for clause in phi.clauses:
        hits = sum(a.value(v) for v in clause)
        residual += (hits - 1) ** 2
        unsat += hits != 1
        all_true |= hits == 3
    n = phi.num_vars
    return AssignmentValue(
        value=n + eps2 * residual,
        unsatisfied=unsat,
        lower=n + eps2 * unsat,
        upper=n + 4 * eps2 * unsat,
        no_clause_all_true=not all_true,
    )
