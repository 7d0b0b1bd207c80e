"""Gadget reduction from 3-CNF to positive 1-in-3 SAT.

Each source variable ``x_i`` becomes a pair ``(w_i, y_i)`` tied by the
clause ``E1(w_i, y_i)``; ``w_i`` stands for the literal ``x_i`` and ``y_i``
for its negation. A source clause ``(a or b or c)`` becomes three clauses
over four fresh variables::

    E1(pos(a), z1, z2)   E1(pos(not b), z1, z3)   E1(pos(not c), z2, z4)

which are simultaneously satisfiable iff the source clause is satisfied.

Numbering in the output: ``w_1..w_n`` are ``1..n``, ``y_1..y_n`` are
``n+1..2n``, and source clause ``j`` (0-based) owns ``2n+4j+1..2n+4j+4``.
Gadget clauses come first (three per source clause, in order), then the
``n`` pair clauses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from riphard.errors import CapacityError, InputError
from riphard.sat import Assignment, Cnf3Instance, E13Instance, cnf_masks, e13_masks

Z_SETTINGS = tuple(product((False, True), repeat=4))


@dataclass(frozen=True)
class ReductionWitnessMap:
    """Index bookkeeping for one reduction; all variable indices 1-based, clause indices 0-based."""

    source_vars: int
    source_clauses: int
    w_index: tuple[int, ...]
    y_index: tuple[int, ...]
    z_index: tuple[tuple[int, int, int, int], ...]
    gadget_clauses: tuple[tuple[int, int, int], ...]
    pair_clause: tuple[int, ...]

    @property
    def num_vars(self) -> int:
        return 2 * self.source_vars + 4 * self.source_clauses

    @property
    def num_clauses(self) -> int:
        return 3 * self.source_clauses + self.source_vars

    @classmethod
    def for_shape(cls, n: int, m: int) -> "ReductionWitnessMap":
        return cls(
            source_vars=n,
            source_clauses=m,
            w_index=tuple(range(1, n + 1)),
            y_index=tuple(range(n + 1, 2 * n + 1)),
            z_index=tuple(tuple(2 * n + 4 * j + t for t in range(1, 5)) for j in range(m)),
            gadget_clauses=tuple((3 * j, 3 * j + 1, 3 * j + 2) for j in range(m)),
            pair_clause=tuple(3 * m + i for i in range(n)),
        )

    def to_dict(self) -> dict:
        return {
            "source_vars": self.source_vars,
            "source_clauses": self.source_clauses,
            "w_index": list(self.w_index),
            "y_index": list(self.y_index),
            "z_index": [list(z) for z in self.z_index],
            "gadget_clauses": [list(g) for g in self.gadget_clauses],
            "pair_clause": list(self.pair_clause),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReductionWitnessMap":
        return cls(
            source_vars=d["source_vars"],
            source_clauses=d["source_clauses"],
            w_index=tuple(d["w_index"]),
            y_index=tuple(d["y_index"]),
            z_index=tuple(tuple(z) for z in d["z_index"]),
            gadget_clauses=tuple(tuple(g) for g in d["gadget_clauses"]),
            pair_clause=tuple(d["pair_clause"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class GapLedger:
    """Source gap ``alpha_prime`` and the resulting target gap ``alpha = alpha_prime / 18``."""

    alpha_prime: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha_prime", Fraction(self.alpha_prime))
        if not 0 < self.alpha_prime <= 1:
            raise InputError(f"alpha_prime must lie in (0, 1], got {self.alpha_prime}")

    @property
    def alpha(self) -> Fraction:
        return self.alpha_prime / 18

    @staticmethod
    def source_floor(alpha, n: int, m: int) -> Fraction:
        """Lower bound on the source optimum when the target optimum is at least ``1 - alpha``.

        Each unsatisfied target clause accounts for at most five unsatisfied
        source clauses, so ``val(src) >= 1 - 5 * alpha * m' / m``; with
        ``m = 5n/3`` this is ``1 - 18 * alpha``.
        """
        m_out = 3 * m + n
        return 1 - 5 * Fraction(alpha) * m_out / m


def _literal_var(lit: int, n: int) -> int:
    """Output variable standing for literal ``lit``."""
    return lit if lit > 0 else n - lit


def reduce(psi: Cnf3Instance) -> tuple[E13Instance, ReductionWitnessMap]:
    if not psi.is_3cnf:
        bad = next(j for j, c in enumerate(psi.clauses) if len(c) != 3)
        raise InputError(f"clause {bad} has {len(psi.clauses[bad])} literals; the reduction needs exactly 3")
    n, m = psi.num_vars, psi.num_clauses
    wmap = ReductionWitnessMap.for_shape(n, m)
    clauses = []
    for (a, b, c), (z1, z2, z3, z4) in zip(psi.clauses, wmap.z_index):
        clauses.append((_literal_var(a, n), z1, z2))
        clauses.append((_literal_var(-b, n), z1, z3))
        clauses.append((_literal_var(-c, n), z2, z4))
    clauses += [(w, y) for w, y in zip(wmap.w_index, wmap.y_index)]
    return E13Instance(wmap.num_vars, tuple(clauses)), wmap


def _gadget_satisfied(lits: tuple[bool, bool, bool], z: tuple[bool, ...]) -> int:
    z1, z2, z3, z4 = z
    return sum(t == 1 for t in (lits[0] + z1 + z2, lits[1] + z1 + z3, lits[2] + z2 + z4))


def complete_assignment(psi: Cnf3Instance, x: Assignment, wmap: ReductionWitnessMap) -> Assignment:
    """Extend ``x`` to the reduced instance.

    ``w = x``, ``y = not x``; each gadget gets the first ``(z1..z4)`` in
    F<T lexicographic order that satisfies the most of its three clauses.
    """
    if len(x) != psi.num_vars:
        raise InputError(f"assignment has {len(x)} variables, formula has {psi.num_vars}")
    n = psi.num_vars
    bits = [False] * wmap.num_vars
    for i in range(n):
        bits[wmap.w_index[i] - 1] = x.bits[i]
        bits[wmap.y_index[i] - 1] = not x.bits[i]

    def lit(l: int) -> bool:
        return x.bits[l - 1] if l > 0 else not x.bits[-l - 1]

    for (a, b, c), zs in zip(psi.clauses, wmap.z_index):
        heads = (lit(a), not lit(b), not lit(c))
        best = max(Z_SETTINGS, key=lambda z: _gadget_satisfied(heads, z))  # max keeps the first
        for idx, val in zip(zs, best):
            bits[idx - 1] = val
    return Assignment(tuple(bits))


def lift_assignment(phi_assignment: Assignment, wmap: ReductionWitnessMap) -> Assignment:
    """x_i is true iff w_i is true and y_i is false."""
    if len(phi_assignment) != wmap.num_vars:
        raise InputError(f"assignment has {len(phi_assignment)} variables, expected {wmap.num_vars}")
    b = phi_assignment.bits
    return Assignment(tuple(b[w - 1] and not b[y - 1] for w, y in zip(wmap.w_index, wmap.y_index)))


# --------------------------------------------------------------------------
# exhaustive gap check


@dataclass(frozen=True)
class GapCheck:
    assignments: int
    violations: int
    worst_ratio_excess: int
    first_violation: int | None


def check_gap_exhaustive(
    psi: Cnf3Instance,
    phi: E13Instance,
    wmap: ReductionWitnessMap,
    factor: int = 5,
    max_vars: int = 24,
    chunk: int = 1 << 18,
) -> GapCheck:
    """Check ``unsat_src(lift(a)) <= factor * unsat_out(a)`` for every assignment ``a``.

    ``worst_ratio_excess`` is the maximum of ``unsat_src - factor * unsat_out``
    (nonpositive when the inequality holds everywhere).
    """
    N = phi.num_vars
    if N > max_vars:
        raise CapacityError(f"2^{N} assignments exceed the guard of 2^{max_vars}")
    out_masks = e13_masks(phi)
    pos, neg = cnf_masks(psi)
    w_bits = np.array([1 << (w - 1) for w in wmap.w_index], dtype=np.uint64)
    y_bits = np.array([1 << (y - 1) for y in wmap.y_index], dtype=np.uint64)
    total = 1 << N
    violations, worst, first = 0, None, None
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.uint64)
        unsat_out = np.zeros(codes.shape, dtype=np.int64)
        for mask in out_masks:
            unsat_out += np.bitwise_count(codes & mask) != 1
        lifted = np.zeros(codes.shape, dtype=np.uint64)
        for i, (wb, yb) in enumerate(zip(w_bits, y_bits)):
            on = ((codes & wb) != 0) & ((codes & yb) == 0)
            lifted |= on.astype(np.uint64) << np.uint64(i)
        unsat_src = np.zeros(codes.shape, dtype=np.int64)
        inverted = ~lifted
        for pm, nm in zip(pos, neg):
            unsat_src += ~(((lifted & pm) != 0) | ((inverted & nm) != 0))
        excess = unsat_src - factor * unsat_out
        bad = np.flatnonzero(excess > 0)
        violations += int(bad.size)
        if bad.size and first is None:
            first = lo + int(bad[0])
        m = int(excess.max())
        worst = m if worst is None else max(worst, m)
    return GapCheck(total, violations, worst, first)
