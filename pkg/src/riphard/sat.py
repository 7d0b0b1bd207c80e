"""Instance models and brute-force oracles for 3-CNF and positive 1-in-3 SAT.

Variables are numbered from 1, as in DIMACS. Clauses are addressed by their
0-based position in the instance. Assignments are enumerated in counting
order: assignment code ``c`` sets variable ``i`` true iff bit ``i - 1`` of
``c`` is set, and every brute-force search returns the first maximizer in
that order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from riphard import kernels
from riphard.errors import CapacityError, InputError, ParseError

DEFAULT_MAX_VARS = 24


@dataclass(frozen=True)
class Assignment:
    bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def value(self, var: int) -> bool:
        if not 1 <= var <= len(self.bits):
            raise InputError(f"variable {var} outside 1..{len(self.bits)}")
        return self.bits[var - 1]

    @property
    def code(self) -> int:
        return sum(1 << i for i, b in enumerate(self.bits) if b)

    @classmethod
    def from_code(cls, code: int, num_vars: int) -> "Assignment":
        return cls(tuple(bool((code >> i) & 1) for i in range(num_vars)))

    @classmethod
    def parse(cls, text: str) -> "Assignment":
        """Accepts ``TFT``, ``101`` or whitespace/comma separated tokens."""
        tokens = text.replace(",", " ").split()
        if len(tokens) == 1:
            tokens = list(tokens[0])
        table = {"t": True, "1": True, "f": False, "0": False}
        try:
            return cls(tuple(table[t.lower()] for t in tokens))
        except KeyError as exc:
            raise InputError(f"bad assignment token {exc.args[0]!r}") from None

    def __str__(self) -> str:
        return "".join("T" if b else "F" for b in self.bits)


def all_assignments(num_vars: int) -> Iterator[Assignment]:
    for code in range(1 << num_vars):
        yield Assignment.from_code(code, num_vars)


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Cnf3Instance:
    """CNF formula with signed-integer literals.

    Clause length is not enforced here so that arbitrary DIMACS files load;
    :attr:`is_3cnf` and the reduction check it.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise InputError("num_vars must be positive")
        clauses = tuple(tuple(int(lit) for lit in c) for c in self.clauses)
        for j, clause in enumerate(clauses):
            if not clause:
                raise InputError(f"clause {j} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise InputError(f"clause {j}: literal {lit} out of range 1..{self.num_vars}")
        object.__setattr__(self, "clauses", clauses)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def is_3cnf(self) -> bool:
        return all(len(c) == 3 for c in self.clauses)

    def occurrence_counts(self) -> dict[int, int]:
        """Literal slots per variable (a variable repeated in a clause counts twice)."""
        counts = Counter(abs(lit) for c in self.clauses for lit in c)
        return {v: counts.get(v, 0) for v in range(1, self.num_vars + 1)}

    def is_3sat5(self) -> bool:
        return self.is_3cnf and all(c == 5 for c in self.occurrence_counts().values())


@dataclass(frozen=True)
class E13Instance:
    """Positive 1-in-3 SAT: each clause is a set of 1 to 3 variables."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise InputError("num_vars must be positive")
        normalized = []
        for j, clause in enumerate(self.clauses):
            c = tuple(sorted(int(v) for v in clause))
            if not 1 <= len(c) <= 3:
                raise InputError(f"clause {j} has {len(c)} variables, expected 1..3")
            if len(set(c)) != len(c):
                raise InputError(f"clause {j} repeats a variable")
            if c[0] < 1 or c[-1] > self.num_vars:
                raise InputError(f"clause {j} references a variable outside 1..{self.num_vars}")
            normalized.append(c)
        object.__setattr__(self, "clauses", tuple(normalized))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def occurrence_counts(self) -> dict[int, int]:
        counts = Counter(v for c in self.clauses for v in c)
        return {v: counts.get(v, 0) for v in range(1, self.num_vars + 1)}

    @property
    def is_6_bounded(self) -> bool:
        return check_bounded(self, 6)[0]


# --------------------------------------------------------------------------
# evaluation


def eval_e1_clause(clause: Iterable[int], a: Assignment) -> bool:
    """True iff exactly one variable of ``clause`` is true under ``a``."""
    return sum(a.value(v) for v in clause) == 1


def eval_or_clause(clause: Iterable[int], a: Assignment) -> bool:
    return any(a.value(lit) if lit > 0 else not a.value(-lit) for lit in clause)


def _check_match(num_vars: int, a: Assignment):
    if len(a) != num_vars:
        raise InputError(f"assignment has {len(a)} variables, instance has {num_vars}")


def satisfied_count(inst: E13Instance, a: Assignment) -> int:
    _check_match(inst.num_vars, a)
    return sum(eval_e1_clause(c, a) for c in inst.clauses)


def unsat_count(inst: E13Instance | Cnf3Instance, a: Assignment) -> int:
    if isinstance(inst, Cnf3Instance):
        _check_match(inst.num_vars, a)
        return sum(not eval_or_clause(c, a) for c in inst.clauses)
    return inst.num_clauses - satisfied_count(inst, a)


def val(inst: E13Instance, a: Assignment) -> Fraction:
    """Fraction of clauses satisfied by ``a``."""
    if inst.num_clauses == 0:
        raise InputError("val is undefined for an instance with no clauses")
    return Fraction(satisfied_count(inst, a), inst.num_clauses)


def val_cnf(inst: Cnf3Instance, a: Assignment) -> Fraction:
    if inst.num_clauses == 0:
        raise InputError("val is undefined for an instance with no clauses")
    return Fraction(inst.num_clauses - unsat_count(inst, a), inst.num_clauses)


def _guard(num_vars: int, max_vars: int):
    if num_vars > max_vars:
        raise CapacityError(
            f"exhaustive search over 2^{num_vars} assignments exceeds the limit of 2^{max_vars}"
        )


def e13_masks(inst: E13Instance) -> np.ndarray:
    return np.array(
        [sum(1 << (v - 1) for v in c) for c in inst.clauses], dtype=np.uint64
    )


def cnf_masks(inst: Cnf3Instance) -> tuple[np.ndarray, np.ndarray]:
    # set union, not sum: a literal may repeat inside a clause
    pos = [sum(1 << (v - 1) for v in {lit for lit in c if lit > 0}) for c in inst.clauses]
    neg = [sum(1 << (v - 1) for v in {-lit for lit in c if lit < 0}) for c in inst.clauses]
    return np.array(pos, dtype=np.uint64), np.array(neg, dtype=np.uint64)


def max_val(inst: E13Instance, max_vars: int = DEFAULT_MAX_VARS) -> tuple[Fraction, Assignment]:
    if inst.num_clauses == 0:
        raise InputError("val is undefined for an instance with no clauses")
    _guard(inst.num_vars, max_vars)
    best, code = kernels.e13_best(e13_masks(inst), inst.num_vars)
    return Fraction(best, inst.num_clauses), Assignment.from_code(code, inst.num_vars)


def max_val_cnf(inst: Cnf3Instance, max_vars: int = DEFAULT_MAX_VARS) -> tuple[Fraction, Assignment]:
    if inst.num_clauses == 0:
        raise InputError("val is undefined for an instance with no clauses")
    _guard(inst.num_vars, max_vars)
    pos, neg = cnf_masks(inst)
    best, code = kernels.cnf_best(pos, neg, inst.num_vars)
    return Fraction(best, inst.num_clauses), Assignment.from_code(code, inst.num_vars)


def check_bounded(inst: E13Instance | Cnf3Instance, bound: int) -> tuple[bool, dict[int, int]]:
    counts = inst.occurrence_counts()
    return all(c <= bound for c in counts.values()), counts


# --------------------------------------------------------------------------
# text formats


def _content_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("c") or stripped.startswith("%"):
            continue
        yield lineno, stripped.split()


def _parse_header(tokens: list[str], kind: str, lineno: int) -> tuple[int, int]:
    if len(tokens) != 4 or tokens[0] != "p" or tokens[1] != kind:
        raise ParseError(f"expected header 'p {kind} <n> <m>'", lineno)
    try:
        n, m = int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ParseError("header counts must be integers", lineno) from None
    if n < 1 or m < 0:
        raise ParseError("header counts out of range", lineno)
    return n, m


def _ints(tokens: Sequence[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-integer token in {' '.join(tokens)!r}", lineno) from None


def loads_dimacs(text: str) -> Cnf3Instance:
    lines = _content_lines(text)
    header = next(lines, None)
    if header is None:
        raise ParseError("missing 'p cnf' header")
    n, m = _parse_header(header[1], "cnf", header[0])
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    lineno = header[0]
    for lineno, tokens in lines:
        for lit in _ints(tokens, lineno):
            if lit == 0:
                if not current:
                    raise ParseError("empty clause", lineno)
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > n:
                raise ParseError(f"literal {lit} out of range 1..{n}", lineno)
            else:
                current.append(lit)
    if current:
        raise ParseError("last clause is not terminated by 0", lineno)
    if len(clauses) != m:
        raise ParseError(f"header declares {m} clauses, found {len(clauses)}", lineno)
    return Cnf3Instance(n, tuple(clauses))


def dumps_dimacs(inst: Cnf3Instance) -> str:
    out = [f"p cnf {inst.num_vars} {inst.num_clauses}"]
    out += [" ".join(map(str, c)) + " 0" for c in inst.clauses]
    return "\n".join(out) + "\n"


def loads_e13(text: str) -> E13Instance:
    lines = _content_lines(text)
    header = next(lines, None)
    if header is None:
        raise ParseError("missing 'p e13' header")
    n, m = _parse_header(header[1], "e13", header[0])
    clauses = []
    lineno = header[0]
    for lineno, tokens in lines:
        values = _ints(tokens, lineno)
        if not values or values[-1] != 0:
            raise ParseError("clause line must end with 0", lineno)
        body = values[:-1]
        if not 1 <= len(body) <= 3:
            raise ParseError(f"clause has {len(body)} variables, expected 1..3", lineno)
        if any(v < 1 or v > n for v in body):
            raise ParseError(f"variable out of range 1..{n}", lineno)
        if len(set(body)) != len(body):
            raise ParseError("clause repeats a variable", lineno)
        clauses.append(tuple(sorted(body)))
    if len(clauses) != m:
        raise ParseError(f"header declares {m} clauses, found {len(clauses)}", lineno)
    return E13Instance(n, tuple(clauses))


def dumps_e13(inst: E13Instance) -> str:
    out = [f"p e13 {inst.num_vars} {inst.num_clauses}"]
    out += [" ".join(map(str, c)) + " 0" for c in inst.clauses]
    return "\n".join(out) + "\n"


def read_instance(path: str | Path) -> E13Instance | Cnf3Instance:
    """Load either format, dispatching on the header line."""
    text = Path(path).read_text()
    for _, tokens in _content_lines(text):
        if tokens[:2] == ["p", "e13"]:
            return loads_e13(text)
        if tokens[:2] == ["p", "cnf"]:
            return loads_dimacs(text)
        break
    raise ParseError(f"{path}: no 'p cnf' or 'p e13' header")


def dumps_instance(inst: E13Instance | Cnf3Instance) -> str:
    return dumps_e13(inst) if isinstance(inst, E13Instance) else dumps_dimacs(inst)
