"""Dense matrices of exact rationals, plus the ``rip-matrix v1`` file format.

Float-valued matrices are plain numpy arrays; :func:`as_float` accepts
either kind so the spectral routines can take both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from riphard.errors import InputError, ParseError


@dataclass(frozen=True)
class Block:
    """Named half-open row range ``[start, stop)``."""

    name: str
    start: int
    stop: int


@dataclass(frozen=True)
class RationalMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[Fraction, ...], ...]
    blocks: tuple[Block, ...] = field(default=())

    def __post_init__(self):
        entries = tuple(tuple(Fraction(x) for x in row) for row in self.entries)
        if len(entries) != self.rows or any(len(r) != self.cols for r in entries):
            raise InputError(f"entries do not form a {self.rows}x{self.cols} matrix")
        object.__setattr__(self, "entries", entries)
        for b in self.blocks:
            if not 0 <= b.start <= b.stop <= self.rows:
                raise InputError(f"block {b.name!r} rows [{b.start}, {b.stop}) outside 0..{self.rows}")

    # construction ---------------------------------------------------------

    @classmethod
    def from_rows(
        cls, rows: Sequence[Sequence], blocks: Iterable[Block] = (), cols: int | None = None
    ) -> "RationalMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        return cls(len(rows), cols, tuple(tuple(r) for r in rows), tuple(blocks))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        zero = Fraction(0)
        return cls(rows, cols, tuple((zero,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_float(cls, arr) -> "RationalMatrix":
        """Exact binary value of every double entry."""
        arr = np.asarray(arr, dtype=float)
        return cls.from_rows([[Fraction(float(x)) for x in row] for row in arr])

    # access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, idx: tuple[int, int]) -> Fraction:
        i, j = idx
        return self.entries[i][j]

    def block(self, name: str) -> "RationalMatrix":
        for b in self.blocks:
            if b.name == name:
                return RationalMatrix(b.stop - b.start, self.cols, self.entries[b.start:b.stop])
        raise KeyError(name)

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.entries)

    # arithmetic -----------------------------------------------------------

    def transpose(self) -> "RationalMatrix":
        if not self.rows:
            return RationalMatrix(self.cols, 0, ((),) * self.cols)
        return RationalMatrix(self.cols, self.rows, tuple(zip(*self.entries)))

    @property
    def T(self) -> "RationalMatrix":
        return self.transpose()

    def scale(self, c) -> "RationalMatrix":
        c = Fraction(c)
        return RationalMatrix(
            self.rows, self.cols, tuple(tuple(c * x for x in row) for row in self.entries), self.blocks
        )

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-1)

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise InputError(f"shape mismatch {self.shape} vs {other.shape}")
        return RationalMatrix(
            self.rows,
            self.cols,
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)),
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def matvec(self, u: Sequence) -> tuple[Fraction, ...]:
        if len(u) != self.cols:
            raise InputError(f"vector of length {len(u)} for {self.cols} columns")
        u = [Fraction(x) for x in u]
        nz = [j for j, x in enumerate(u) if x]
        return tuple(sum((row[j] * u[j] for j in nz if row[j]), Fraction(0)) for row in self.entries)

    def __matmul__(self, other):
        if isinstance(other, RationalMatrix):
            if self.cols != other.rows:
                raise InputError(f"shape mismatch {self.shape} @ {other.shape}")
            cols = [other.column(j) for j in range(other.cols)]
            return RationalMatrix(
                self.rows,
                other.cols,
                tuple(
                    tuple(sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in cols)
                    for row in self.entries
                ),
            )
        return self.matvec(other)

    def gram(self) -> "RationalMatrix":
        return self.T @ self

    def sq_norm_image(self, u: Sequence) -> Fraction:
        """Exact ``||M u||^2``, computed in integer arithmetic."""
        if len(u) != self.cols:
            raise InputError(f"vector of length {len(u)} for {self.cols} columns")
        u = [Fraction(x) for x in u]
        e = lcm(1, *(x.denominator for x in u))
        scaled = [(j, x.numerator * (e // x.denominator)) for j, x in enumerate(u) if x]
        num, d = self._integer_form
        total = 0
        for row in num:
            y = 0
            for j, x in scaled:
                y += row[j] * x
            total += y * y
        return Fraction(total, (d * e) ** 2)

    def row_l1(self) -> tuple[Fraction, ...]:
        return tuple(sum((abs(x) for x in row), Fraction(0)) for row in self.entries)

    def col_l1(self) -> tuple[Fraction, ...]:
        return self.T.row_l1()

    def integer_form(self) -> tuple[list[list[int]], int]:
        """``(N, d)`` with integer ``N`` and ``self == N / d``."""
        num, d = self._integer_form
        return [list(r) for r in num], d

    @cached_property
    def _integer_form(self) -> tuple[tuple[tuple[int, ...], ...], int]:
        d = 1
        for row in self.entries:
            for x in row:
                d = lcm(d, x.denominator)
        return tuple(tuple(x.numerator * (d // x.denominator) for x in row) for row in self.entries), d

    def to_float(self) -> np.ndarray:
        """Round-to-nearest double view."""
        return np.array([[float(x) for x in row] for row in self.entries], dtype=float).reshape(
            self.rows, self.cols
        )

    def max_bit_size(self) -> int:
        return max(
            (max(x.numerator.bit_length(), x.denominator.bit_length()) for row in self.entries for x in row),
            default=0,
        )

    # assembly -------------------------------------------------------------

    @staticmethod
    def vstack(parts: Sequence["RationalMatrix"], names: Sequence[str] | None = None) -> "RationalMatrix":
        cols = {p.cols for p in parts}
        if len(cols) != 1:
            raise InputError("vstack needs equal column counts")
        rows, blocks, start = [], [], 0
        for i, p in enumerate(parts):
            rows.extend(p.entries)
            if names is not None:
                blocks.append(Block(names[i], start, start + p.rows))
            start += p.rows
        return RationalMatrix(len(rows), cols.pop(), tuple(rows), tuple(blocks))

    @staticmethod
    def hstack(parts: Sequence["RationalMatrix"]) -> "RationalMatrix":
        nrows = {p.rows for p in parts}
        if len(nrows) != 1:
            raise InputError("hstack needs equal row counts")
        n = nrows.pop()
        rows = tuple(sum((p.entries[i] for p in parts), ()) for i in range(n))
        return RationalMatrix(n, sum(p.cols for p in parts), rows)


Matrix = Union[RationalMatrix, np.ndarray]


def as_float(x: Matrix) -> np.ndarray:
    if isinstance(x, RationalMatrix):
        return x.to_float()
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


# --------------------------------------------------------------------------
# file format


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dumps_matrix(x: Matrix) -> str:
    if isinstance(x, RationalMatrix):
        lines = [f"rip-matrix v1 {x.rows} {x.cols} rational"]
        lines += [" ".join(format_fraction(v) for v in row) for row in x.entries]
        lines += [f"c block {b.name} {b.start} {b.stop}" for b in x.blocks]
    else:
        arr = as_float(x)
        lines = [f"rip-matrix v1 {arr.shape[0]} {arr.shape[1]} float"]
        lines += [" ".join(repr(float(v)) for v in row) for row in arr]
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> Matrix:
    """Parse a matrix file; block rows are ``[row_start, row_end)``, 0-based."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty matrix file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[:2] != ["rip-matrix", "v1"] or head[4] not in ("rational", "float"):
        raise ParseError("expected 'rip-matrix v1 <rows> <cols> <rational|float>'", 1)
    try:
        rows, cols = int(head[2]), int(head[3])
    except ValueError:
        raise ParseError("row/column counts must be integers", 1) from None
    kind = head[4]
    data, blocks = [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens:
            continue
        if tokens[0] == "c":
            if len(tokens) == 5 and tokens[1] == "block":
                try:
                    blocks.append(Block(tokens[2], int(tokens[3]), int(tokens[4])))
                except ValueError:
                    raise ParseError("bad block annotation", lineno) from None
            continue
        if len(tokens) != cols:
            raise ParseError(f"expected {cols} entries, found {len(tokens)}", lineno)
        try:
            data.append([Fraction(t) for t in tokens] if kind == "rational" else [float(t) for t in tokens])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad {kind} entry", lineno) from None
    if len(data) != rows:
        raise ParseError(f"header declares {rows} rows, found {len(data)}", len(lines))
    if kind == "float":
        return np.array(data, dtype=float).reshape(rows, cols)
    try:
        return RationalMatrix(rows, cols, tuple(tuple(r) for r in data), tuple(blocks))
    except InputError as exc:
        raise ParseError(str(exc)) from None


def read_matrix(path: str | Path) -> Matrix:
    return loads_matrix(Path(path).read_text())


def write_matrix(path: str | Path, x: Matrix) -> None:
    Path(path).write_text(dumps_matrix(x))
