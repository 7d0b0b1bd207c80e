"""Seeded random instance generators.

All randomness goes through ``numpy.random.default_rng(seed)`` so the same
arguments always give the same instance.
"""

from __future__ import annotations

import numpy as np

from riphard.errors import InputError
from riphard.sat import Assignment, Cnf3Instance, E13Instance

MAX_RETRIES = 1000
KINDS = ("3sat5", "e13")


def _signed(rng: np.random.Generator, variables) -> tuple[int, ...]:
    signs = rng.integers(0, 2, size=len(variables))
    return tuple(int(v) if s else -int(v) for v, s in zip(variables, signs))


def random_3sat5(n: int, seed: int) -> Cnf3Instance:
    """3-CNF with ``5n/3`` clauses, every variable in exactly five, no variable repeated in a clause.

    Five slots per variable are shuffled and cut into triples; a shuffle that
    puts one variable twice in a triple is redrawn.
    """
    if n < 3 or (5 * n) % 3:
        raise InputError(f"3SAT-5 needs n >= 3 with 5n/3 integral, got n={n}")
    rng = np.random.default_rng(seed)
    slots = np.repeat(np.arange(1, n + 1), 5)
    for _ in range(MAX_RETRIES):
        rng.shuffle(slots)
        triples = slots.reshape(-1, 3)
        if all(len(set(t)) == 3 for t in triples.tolist()):
            return Cnf3Instance(n, tuple(_signed(rng, t) for t in triples.tolist()))
    raise InputError(f"no repeat-free 3SAT-5 layout found for n={n} after {MAX_RETRIES} shuffles")


def random_bounded_cnf(n: int, m: int, seed: int, max_occurrences: int = 5) -> Cnf3Instance:
    """3-CNF with ``m`` clauses and at most ``max_occurrences`` literal slots per variable.

    Variables inside a clause are distinct when ``n >= 3``.
    """
    if 3 * m > max_occurrences * n:
        raise InputError(f"{m} clauses need {3 * m} slots, only {max_occurrences * n} available")
    rng = np.random.default_rng(seed)
    distinct = n >= 3
    for _ in range(MAX_RETRIES):
        left = np.full(n + 1, max_occurrences)
        left[0] = 0
        clauses = []
        for _ in range(m):
            chosen = []
            for _ in range(3):
                open_vars = [v for v in np.flatnonzero(left > 0) if not (distinct and v in chosen)]
                if not open_vars:
                    break
                v = int(rng.choice(open_vars))
                left[v] -= 1
                chosen.append(v)
            if len(chosen) < 3:
                break
            clauses.append(_signed(rng, chosen))
        if len(clauses) == m:
            return Cnf3Instance(n, tuple(clauses))
    raise InputError(f"could not place {m} clauses on {n} variables")


def random_e13(
    n: int, seed: int, m: int | None = None, planted: bool = False, bound: int = 6
) -> E13Instance:
    """6-bounded positive 1-in-3 instance; ``m`` defaults to ``n`` (the largest the matrix builder accepts).

    With ``planted`` every clause has exactly one variable true under a
    hidden random assignment, so the instance is satisfiable.
    """
    if n < 1:
        raise InputError("n must be positive")
    m = n if m is None else m
    if m < 1 or m > bound * n:
        raise InputError(f"m={m} must lie in 1..{bound * n}")
    rng = np.random.default_rng(seed)
    hidden = _hidden(rng, n, m, bound)
    for _ in range(MAX_RETRIES):
        left = np.full(n + 1, bound)
        left[0] = 0
        clauses = []
        for _ in range(m):
            size = int(rng.integers(1, min(3, n) + 1))
            open_vars = np.flatnonzero(left > 0)
            if planted:
                trues = open_vars[hidden[open_vars]]
                falses = open_vars[~hidden[open_vars]]
                if not trues.size:
                    break
                size = min(size, 1 + falses.size)
                pick = [rng.choice(trues)]
                if size > 1:
                    pick += list(rng.choice(falses, size=size - 1, replace=False))
            else:
                if open_vars.size < size:
                    break
                pick = list(rng.choice(open_vars, size=size, replace=False))
            left[pick] -= 1
            clauses.append(tuple(int(v) for v in pick))
        if len(clauses) == m:
            return E13Instance(n, tuple(clauses))
    raise InputError(f"could not place {m} clauses on {n} variables with bound {bound}")


def _hidden(rng: np.random.Generator, n: int, m: int, bound: int) -> np.ndarray:
    """Random assignment (index 0 unused) with enough true variables to meet ``m`` clauses under ``bound``."""
    hidden = rng.integers(0, 2, size=n + 1).astype(bool)
    hidden[0] = False
    need = -(-m // bound)
    while hidden.sum() < need:
        falses = np.flatnonzero(~hidden[1:]) + 1
        hidden[rng.choice(falses)] = True
    return hidden


def planted_assignment(n: int, seed: int, m: int | None = None, bound: int = 6) -> Assignment:
    """The hidden assignment used by ``random_e13(n, seed, m, planted=True, bound=bound)``."""
    m = n if m is None else m
    return Assignment(tuple(bool(b) for b in _hidden(np.random.default_rng(seed), n, m, bound)[1:]))


def generate_instance(
    kind: str, n: int, seed: int, m: int | None = None, planted: bool = False
) -> Cnf3Instance | E13Instance:
    if kind == "3sat5":
        return random_3sat5(n, seed)
    if kind == "e13":
        return random_e13(n, seed, m=m, planted=planted)
    raise InputError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
