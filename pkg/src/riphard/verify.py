"""End-to-end verification pipeline and report emission.

:func:`run_pipeline` takes a 3-CNF formula (reduced first) or a positive
1-in-3 instance, builds the reduction matrix and measures every
quantitative claim of the construction against it. Each measurement
becomes a :class:`CheckRecord`; a record without an anchor (the claim it
tests) is refused.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from math import floor, sqrt
from pathlib import Path

import numpy as np

from riphard import oracle
from riphard.construction import (
    ReductionParams,
    assignment_value_exact,
    assignment_vector,
    build_projector,
    build_reduction_matrix,
)
from riphard.errors import CapacityError, InputError
from riphard.gadget import reduce
from riphard.rational import RationalMatrix, format_fraction, write_matrix
from riphard.sat import Assignment, Cnf3Instance, E13Instance, all_assignments, dumps_e13, max_val

STATUSES = ("PASS", "FAIL", "SKIP")
SLACK = 1e-9
EIG_TOLERANCE = 1e-9


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


@dataclass(frozen=True)
class CheckRecord:
    name: str
    anchor: str
    claimed: str
    measured: str
    status: str
    tolerance: str

    def __post_init__(self):
        if not self.anchor:
            raise InputError(f"check {self.name!r} has no anchor")
        if self.status not in STATUSES:
            raise InputError(f"unknown status {self.status!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "claimed": self.claimed,
            "measured": self.measured,
            "status": self.status,
            "tolerance": self.tolerance,
        }


@dataclass
class VerificationReport:
    instance: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    checks: list[CheckRecord] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    timestamp: str = field(default="", compare=False)

    def add(self, name: str, anchor: str, claimed, measured, passed: bool | None, tolerance="exact"):
        """Record a check; ``passed=None`` marks it skipped."""
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        rec = CheckRecord(name, anchor, _fmt(claimed), _fmt(measured), status, _fmt(tolerance))
        self.checks.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)

    def counts(self) -> dict[str, int]:
        return {s: sum(c.status == s for c in self.checks) for s in STATUSES}

    def to_dict(self, with_timestamp: bool = True) -> dict:
        d = {
            "instance": self.instance,
            "params": self.params,
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": self.artifacts,
            "notes": list(self.notes),
            "summary": self.counts(),
        }
        if with_timestamp:
            d["timestamp"] = self.timestamp
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            instance=d.get("instance", {}),
            params=d.get("params", {}),
            checks=[CheckRecord(**c) for c in d.get("checks", [])],
            artifacts=d.get("artifacts", {}),
            notes=list(d.get("notes", [])),
            timestamp=d.get("timestamp", ""),
        )


def report_emit(report: VerificationReport, fmt: str = "json", with_timestamp: bool = True) -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_dict(with_timestamp), indent=2) + "\n").encode()
    if fmt != "text":
        raise InputError(f"unknown report format {fmt!r}")
    lines = []
    if report.instance:
        lines.append("# instance: " + " ".join(f"{k}={v}" for k, v in report.instance.items()))
    if report.params:
        lines.append("# params: " + " ".join(f"{k}={v}" for k, v in report.params.items()))
    for c in report.checks:
        lines.append(f"[{c.status}] {c.name}: claimed {c.claimed}, measured {c.measured}")
    lines += [f"# note: {n}" for n in report.notes]
    counts = report.counts()
    lines.append(f"# summary: {counts['PASS']} passed, {counts['FAIL']} failed, {counts['SKIP']} skipped")
    if with_timestamp and report.timestamp:
        lines.append(f"# timestamp: {report.timestamp}")
    return ("\n".join(lines) + "\n").encode()


def report_load(data: bytes | str) -> VerificationReport:
    return VerificationReport.from_dict(json.loads(data))


# --------------------------------------------------------------------------
# pipeline stages


class _Stage:
    """Prefixes capacity errors with the stage that raised them."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, CapacityError):
            raise CapacityError(f"stage {self.name}: {exc}") from exc
        return False


def _check_reduction(report: VerificationReport, psi: Cnf3Instance, phi: E13Instance):
    n, m = psi.num_vars, psi.num_clauses
    report.add("output variable count", "gadget variable count", 2 * n + 4 * m, phi.num_vars, phi.num_vars == 2 * n + 4 * m)
    report.add("output clause count", "gadget clause count", 3 * m + n, phi.num_clauses, phi.num_clauses == 3 * m + n)
    ratio = Fraction(phi.num_clauses, phi.num_vars)
    if 3 * m == 5 * n:
        report.add("clause/variable ratio", "gadget output ratio", Fraction(9, 13), ratio, ratio == Fraction(9, 13))
    occ = max(psi.occurrence_counts().values())
    bounded = max(phi.occurrence_counts().values())
    report.add(
        "output occurrences",
        "gadget output is 6-bounded",
        "<= 6",
        bounded,
        bounded <= 6 if occ <= 5 else None,
    )


def _check_assignment_values(report, phi, params, X, exhaustive_limit, samples, seed):
    n = phi.num_vars
    if n <= exhaustive_limit:
        assignments = list(all_assignments(n))
        how = "all"
    else:
        rng = np.random.default_rng(seed)
        codes = sorted({int(c) for c in rng.integers(0, 1 << n, size=samples)})
        assignments = [Assignment.from_code(c, n) for c in codes]
        how = "sampled"
    ok_identity = ok_bounds = ok_equality = 0
    for a in assignments:
        av = assignment_value_exact(phi, params, a)
        direct = X.sq_norm_image(assignment_vector(a))
        ok_identity += direct == av.value
        ok_bounds += av.lower <= av.value <= av.upper
        ok_equality += (not av.no_clause_all_true) or av.at_lower_bound
    total = len(assignments)
    report.add(
        "assignment-value identity",
        "assignment value equals n + eps^2 ||Phi u+ - 1||^2",
        f"{how} {total} agree",
        f"{ok_identity}/{total}",
        ok_identity == total,
    )
    report.add(
        "assignment-value bounds",
        "n + eps^2 s <= value <= n + 4 eps^2 s",
        f"{total}/{total}",
        f"{ok_bounds}/{total}",
        ok_bounds == total,
    )
    report.add(
        "assignment-value lower-bound equality",
        "equality when no clause has three true variables",
        f"{total}/{total}",
        f"{ok_equality}/{total}",
        ok_equality == total,
    )


def _check_projector(report, X: RationalMatrix, n: int, xi: Fraction):
    P = build_projector(n)
    block = X.block("projector")
    from_block = RationalMatrix.from_rows([row[2 * n :] for row in block.entries], cols=n).scale(xi)
    ones = [1] * n
    ok = {
        "symmetric": P == P.T,
        "idempotent": P @ P == P,
        "annihilates ones": all(x == 0 for x in P.matvec(ones)),
        "matches matrix block": from_block == P,
    }
    failed = [k for k, v in ok.items() if not v]
    report.add(
        "projector identities",
        "P = I - 11^T/n is an orthogonal projector annihilating 1",
        "symmetric, idempotent, P1 = 0",
        "all hold" if not failed else "failed: " + ", ".join(failed),
        not failed,
    )


def _lemma_checks(report, stats: oracle.MinimizerStatistics, n: int, params: ReductionParams):
    eps2, xi = params.epsilon**2, params.xi
    xf = float(xi)
    lemma1 = params.epsilon < 1
    lemma2 = eps2 < Fraction(1, 6)
    bad_ok = eps2 <= Fraction(1, 25) and xi <= Fraction(1, 200)

    def upper(name, anchor, bound, measured, applies):
        report.add(name, anchor, f"< {_fmt(bound)}", measured, measured < bound + SLACK if applies else None, SLACK)

    def lower(name, anchor, bound, measured, applies):
        report.add(name, anchor, f"> {_fmt(bound)}", measured, measured > bound - SLACK if applies else None, SLACK)

    upper("spread of v", "sum (v_i - vbar)^2 < 2 xi^2 n", 2 * xf**2 * n, stats.v_spread, lemma1)
    upper("pair consistency", "sum (w+_i + w-_i - vbar)^2 < 8 xi^2 n", 8 * xf**2 * n, stats.pair_spread, lemma1)
    lower("mean of v", "vbar^2 > 1 - 3 eps^2", 1 - 3 * float(eps2), stats.v_bar_sq, lemma1)
    upper(
        "ambiguous variables",
        "|I| + |J| < 38 xi^2 n",
        38 * xf**2 * n,
        float(stats.both_nonzero + stats.both_zero),
        lemma2,
    )
    lower("mass on top blocks", "||w+||^2 + ||w-||^2 > (1 - 25 xi) n", (1 - 25 * xf) * n, stats.top_mass, lemma2)
    limit = floor(1284 * xi**2 * n)
    report.add(
        "bad clauses",
        "at most 1284 xi^2 n bad clauses",
        f"<= {limit}",
        stats.bad_clauses,
        stats.bad_clauses <= limit if bad_ok else None,
    )


def run_pipeline(
    instance: Cnf3Instance | E13Instance,
    params: ReductionParams,
    *,
    budget: int = oracle.DEFAULT_BUDGET,
    workers: int = 1,
    max_n: int = 6,
    exhaustive_limit: int = 10,
    samples: int = 256,
    seed: int = 0,
    artifacts_dir: str | Path | None = None,
    exact_gap: bool = True,
) -> VerificationReport:
    report = VerificationReport(timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    report.params = params.as_dict()

    if isinstance(instance, Cnf3Instance):
        with _Stage("reduce"):
            phi, wmap = reduce(instance)
        report.instance["source_n"] = instance.num_vars
        report.instance["source_m"] = instance.num_clauses
        _check_reduction(report, instance, phi)
    else:
        phi = instance
    n, m = phi.num_vars, phi.num_clauses
    report.instance.update(
        {"n": n, "m": m, "six_bounded": phi.is_6_bounded, "m_over_n": format_fraction(Fraction(m, n))}
    )
    if n > max_n:
        raise CapacityError(f"stage build: n={n} exceeds the desk-scale limit --max-n {max_n}")

    with _Stage("build"):
        X = build_reduction_matrix(phi, params)
    c1 = params.c1
    X_scaled = X.scale(1 / c1)
    schur_sq = oracle.schur_bound_squared(X)
    report.add(
        "Schur bound",
        "operator norm of the reduction matrix is at most 3/xi",
        f"<= {_fmt(c1)}",
        sqrt(schur_sq),
        schur_sq <= c1 * c1,
    )
    report.add(
        "operator norm",
        "Schur bound dominates the operator norm",
        f"<= {sqrt(schur_sq):.12g}",
        oracle.operator_norm(X),
        oracle.operator_norm(X) <= sqrt(schur_sq) + 1e-6,
        1e-6,
    )
    _check_projector(report, X, n, params.xi)
    _check_assignment_values(report, phi, params, X, exhaustive_limit, samples, seed)

    with _Stage("max_val"):
        best, witness = max_val(phi)
    report.instance["max_val"] = format_fraction(best)
    satisfiable = best == 1

    with _Stage("restricted spectrum"):
        rip = oracle.restricted_extremes(X_scaled, 2 * n, budget=budget, workers=workers)
    report.artifacts["rip_report"] = rip.to_dict()
    target = float(params.xi**2 / 18)
    if satisfiable:
        u = assignment_vector(witness)
        value = X.sq_norm_image(u)
        report.add(
            "satisfying assignment value",
            "satisfiable instance has ||Xu||^2 = ||u||^2 / 2 with ||u||_0 = 2n",
            n,
            value,
            value == n,
        )
        report.add(
            "scaled restricted minimum",
            "restricted minimum at k = 2n equals xi^2/18 after scaling by c1",
            target,
            rip.min_restricted_eig,
            abs(rip.min_restricted_eig - target) <= EIG_TOLERANCE,
            EIG_TOLERANCE,
        )
    else:
        with _Stage("restricted spectrum"):
            raw = oracle.restricted_extremes(X, 2 * n, budget=budget, workers=workers)
        margin = 2 * n * raw.min_restricted_eig - n
        # eigenvalue rounding error scales with the largest Gram entry
        noise = 64 * np.finfo(float).eps * 2 * n * raw.max_restricted_eig
        if abs(margin) > noise:
            above, how = margin > 0, EIG_TOLERANCE
        else:
            with _Stage("exact restricted minimum"):
                above = oracle.exact_min_violation(X, 2 * n, Fraction(1, 2), strict=True, budget=budget) is None
            how = "exact"
        report.add(
            "unsatisfiable margin",
            "unsatisfiable instance has restricted minimum above the satisfiable value n",
            "> 0",
            margin if how != "exact" else ("positive" if above else "not positive"),
            above,
            how,
        )
        report.notes.append("the unsatisfiable margin is measured, not compared with a closed-form constant")

    with _Stage("sparse minimizer"):
        mini = oracle.sparse_minimizer(X, n, params.xi, budget=budget, workers=workers)
    report.artifacts["minimizer"] = mini.to_dict()
    bound = (1 + params.epsilon**2) * n
    gap = mini.objective - float(bound)
    noise = 64 * np.finfo(float).eps * 2 * n * oracle.operator_norm(X) ** 2
    if abs(gap) > max(noise, SLACK):
        ok, how = gap < 0, SLACK
    else:
        with _Stage("exact restricted minimum"):
            # some admissible support has lambda_min <= bound / 2n
            ok = oracle.exact_min_violation(X, mini.k, bound / (2 * n), strict=True, budget=budget) is not None
        how = "exact"
    report.add(
        "minimizer objective",
        "objective at most (1 + eps^2) n via the all-false assignment",
        f"<= {_fmt(bound)}",
        mini.objective,
        ok,
        how,
    )
    stats = oracle.minimizer_statistics(mini, phi)
    _lemma_checks(report, stats, n, params)

    if params.rho <= 0:
        report.add(
            "gap verdict",
            "RIP gap between satisfiable and far-from-satisfiable instances",
            "needs rho > 0",
            f"rho = {float(params.rho):.6g}",
            None,
        )
    else:
        k = 2 * params.c2 * n
        with _Stage("gap decision"):
            verdict = oracle.gap_decide(
                X_scaled, k, params.delta, params.lambda1, params.lambda2, exact=exact_gap, budget=budget
            )
        if satisfiable:
            expected, applies = oracle.Verdict.FAR_FROM_RIP, True
        elif best < 1 - params.alpha:
            expected, applies = oracle.Verdict.IS_RIP, True
        else:
            expected, applies = "no promise", False
        report.add(
            "gap verdict",
            "RIP gap between satisfiable and far-from-satisfiable instances",
            getattr(expected, "value", expected),
            verdict.value,
            verdict == expected if applies else None,
            "exact" if exact_gap else EIG_TOLERANCE,
        )

    if artifacts_dir is not None:
        out = Path(artifacts_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "instance": out / "instance.e13",
            "matrix": out / "reduction.mat",
            "rip_report": out / "rip_report.json",
            "minimizer": out / "minimizer.json",
        }
        paths["instance"].write_text(dumps_e13(phi))
        write_matrix(paths["matrix"], X)
        paths["rip_report"].write_text(rip.to_json() + "\n")
        paths["minimizer"].write_text(json.dumps(mini.to_dict(), indent=2) + "\n")
        report.artifacts["files"] = {k: str(v) for k, v in paths.items()}
    return report
