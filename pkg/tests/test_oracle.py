import json
from fractions import Fraction
from itertools import combinations
from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riphard import oracle
from riphard.construction import ReductionParams, assignment_vector, build_reduction_matrix, build_scaled_matrix
from riphard.errors import CapacityError, InputError
from riphard.generators import planted_assignment, random_e13
from riphard.oracle import MinimizerReport, RipReport, Verdict
from riphard.rational import RationalMatrix
from riphard.sat import Assignment, E13Instance

DEMO = ReductionParams.demo()
FLAT = np.array([[1.0, 1.0], [0.0, 0.0]])


def power_min_eig(G, iters=3000):
    """Smallest eigenvalue by power iteration on (s I - G); independent of LAPACK and the kernels."""
    s = np.abs(G).sum(axis=1).max() + 1.0
    M = s * np.eye(len(G)) - G
    x = np.random.default_rng(0).standard_normal(len(G))
    lam = 0.0
    for _ in range(iters):
        y = M @ x
        lam = float(np.linalg.norm(y))
        x = y / lam
    return s - float(x @ M @ x)


def random_matrix(seed, shape=(4, 6)):
    return np.random.default_rng(seed).standard_normal(shape) / 2


class TestRestrictedExtremes:
    def test_identity(self):
        rep = oracle.restricted_extremes(np.eye(4), 2)
        assert rep.min_restricted_eig == rep.max_restricted_eig == 1 and rep.delta_star == 0

    def test_flat(self):
        rep = oracle.restricted_extremes(FLAT, 2)
        assert rep.min_restricted_eig == pytest.approx(0, abs=1e-12)
        assert rep.max_restricted_eig == pytest.approx(2)
        assert rep.delta_star == pytest.approx(1)

    def test_unit_columns(self):
        assert oracle.rip_delta(np.array([[1.0, 0], [0, 1], [0, 0]]), 1) == 0

    def test_witness_vector(self):
        A = random_matrix(3)
        rep = oracle.restricted_extremes(A, 3)
        w = np.array(rep.witness_vector)
        support = rep.witness_support_min if 1 - rep.min_restricted_eig >= rep.max_restricted_eig - 1 else rep.witness_support_max
        assert np.linalg.norm(w) == pytest.approx(1)
        assert set(np.flatnonzero(w)) <= set(support) and len(support) <= 3
        # the witness attains the extreme that sets delta*
        attained = float(np.sum((A @ w) ** 2))
        assert abs(attained - 1) == pytest.approx(rep.delta_star, abs=1e-10)

    def test_bounds(self):
        with pytest.raises(InputError):
            oracle.restricted_extremes(FLAT, 0)
        with pytest.raises(InputError):
            oracle.restricted_extremes(FLAT, 3)

    def test_budget(self):
        with pytest.raises(CapacityError, match=str(comb(20, 10))):
            oracle.restricted_extremes(np.eye(20), 10, budget=1000)

    def test_json_round_trip(self):
        rep = oracle.restricted_extremes(random_matrix(1), 2)
        assert RipReport.from_dict(json.loads(rep.to_json())) == rep

    def test_rational_input(self):
        X = RationalMatrix.from_rows([[1, 1], [0, 0]])
        assert oracle.rip_delta(X, 2) == pytest.approx(1)

    @pytest.mark.parametrize("seed", range(5))
    def test_against_itertools(self, seed):
        A = random_matrix(seed)
        G = A.T @ A
        for k in (1, 2, 3):
            vals = [np.linalg.eigvalsh(G[np.ix_(S, S)]) for S in combinations(range(6), k)]
            lo = min(v[0] for v in vals)
            hi = max(v[-1] for v in vals)
            assert oracle.rip_delta(A, k) == pytest.approx(max(hi - 1, 1 - lo, 0), abs=1e-12)


class TestDelta:
    def test_diagonal(self):
        assert oracle.rip_delta(np.diag([0.5, 2.0]), 1) == pytest.approx(3)

    @pytest.mark.parametrize("seed", range(10))
    def test_monotone_in_k(self, seed):
        A = random_matrix(seed)
        d = [oracle.rip_delta(A, k) for k in range(1, 7)]
        assert all(a <= b + 1e-12 for a, b in zip(d, d[1:]))

    def test_max_k(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 4)))
        assert oracle.rip_max_k(Q, 0.01) == 4
        assert oracle.rip_max_k(FLAT, 0.5) == 1
        with pytest.raises(InputError):
            oracle.rip_max_k(FLAT, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_max_k_monotone_in_delta(self, seed):
        A = random_matrix(seed)
        ks = [oracle.rip_max_k(A, d) for d in (0.2, 0.5, 1.0, 2.0, 5.0)]
        assert ks == sorted(ks)

    def test_is_rip(self):
        assert oracle.is_rip(np.eye(3), 1, 0.1)
        assert not oracle.is_rip(FLAT, 2, 0.5)
        assert oracle.is_rip(FLAT, 0, 0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_is_rip_threshold(self, seed):
        A = random_matrix(seed)
        for k in (1, 2, 3):
            d = oracle.rip_delta(A, k)
            assert oracle.is_rip(A, k, d)
            assert not oracle.is_rip(A, k, d - 1e-6)


class TestGap:
    def test_identity(self):
        assert oracle.gap_decide(np.eye(3), 2, 0.1, 1, 2) is Verdict.IS_RIP

    def test_far(self):
        assert oracle.gap_decide(FLAT, 2, 0.2, 1, 2) is Verdict.FAR_FROM_RIP

    def test_indeterminate(self):
        # column norms^2 1.3 and 1: delta* = 0.3 sits between 0.2 and 0.4
        X = np.diag([sqrt(1.3), 1.0])
        assert oracle.rip_delta(X, 1) == pytest.approx(0.3)
        assert oracle.gap_decide(X, 1, 0.2, 1, 2) is Verdict.INDETERMINATE

    def test_rejects_small_lambdas(self):
        with pytest.raises(InputError):
            oracle.gap_decide(FLAT, 2, 0.2, Fraction(1, 2), 2)

    def test_rational_k_rounds_after_division(self):
        # weak level floor((5/2)/(5/4)) = 2 sees the repeated column; floor(2/(5/4)) = 1 would not
        assert oracle.rip_delta(FLAT, 1) == 0
        assert oracle.gap_decide(FLAT, Fraction(5, 2), Fraction(1, 2), Fraction(5, 4), 1) is Verdict.FAR_FROM_RIP
        assert oracle.gap_decide(FLAT, 2, Fraction(1, 2), Fraction(5, 4), 1) is Verdict.INDETERMINATE


class TestExact:
    def test_psd(self):
        F = Fraction
        assert oracle._is_psd([[F(1), F(1)], [F(1), F(1)]])
        assert not oracle._is_psd([[F(1), F(1)], [F(1), F(1)]], strict=True)
        assert not oracle._is_psd([[F(0), F(1)], [F(1), F(0)]])

    @pytest.mark.parametrize("seed", range(6))
    def test_exact_agrees_with_float_away_from_boundary(self, seed):
        rng = np.random.default_rng(seed)
        X = RationalMatrix.from_rows(rng.integers(-3, 4, size=(4, 5)).tolist()).scale(Fraction(1, 4))
        for k in (1, 2, 3):
            d = oracle.rip_delta(X, k)
            for delta in (Fraction(1, 3), Fraction(2, 3), Fraction(3, 2)):
                if abs(d - float(delta)) > 1e-6:
                    assert oracle.is_rip_exact(X, k, delta) == (d <= float(delta))

    def test_exact_at_boundary(self):
        X = RationalMatrix.from_rows([[1, 1], [0, 0]])
        assert oracle.is_rip_exact(X, 2, 1)
        assert not oracle.is_rip_exact(X, 2, Fraction(999, 1000))
        assert oracle.exact_rip_violation(X, 2, Fraction(1, 2)) == (0, 1)

    def test_exact_min(self):
        X = RationalMatrix.from_rows([[1, 0], [0, 2]])
        assert oracle.exact_min_violation(X, 1, 1) is None
        assert oracle.exact_min_violation(X, 1, 1, strict=True) == (0,)

    def test_float_input_refused(self):
        with pytest.raises(InputError):
            oracle.is_rip_exact(FLAT, 1, 1)


class TestNorms:
    def test_operator_norm(self):
        assert oracle.operator_norm(np.eye(3)) == pytest.approx(1)
        assert oracle.operator_norm(np.array([[1.0, 2], [0, 1]])) == pytest.approx(1 + sqrt(2), rel=1e-9)
        assert oracle.operator_norm(np.array([[3.0]])) == pytest.approx(3)

    def test_schur(self):
        assert oracle.schur_bound(np.eye(4)) == 1
        assert oracle.schur_bound(np.array([[1.0, 2], [0, 1]])) == 3
        assert oracle.schur_bound_squared(RationalMatrix.from_rows([[1, 2], [0, 1]])) == 9

    @given(st.integers(0, 2**32 - 1))
    def test_schur_dominates(self, seed):
        A = np.random.default_rng(seed).standard_normal((5, 7))
        assert oracle.schur_bound(A) >= oracle.operator_norm(A) - 1e-6

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_reduction_matrix_schur(self, n):
        phi = random_e13(n, seed=n)
        X = build_reduction_matrix(phi, DEMO)
        assert oracle.schur_bound_squared(X) <= DEMO.c1**2
        assert oracle.schur_bound(X) <= 600


def closed_form_single(params):
    """n = 1, phi = {E1(x1)}: minimum eigenvalue of the 2x2 restricted Gram on support {u+, v}."""
    C = float(1 / params.xi**2 + params.epsilon**2)
    # trace 1 + 2C, determinant C; divide instead of subtracting to avoid cancellation
    return 2 * C / ((1 + 2 * C) + sqrt(1 + 4 * C * C))


class TestMinimizer:
    def test_identity_stand_in(self):
        assert oracle.sparse_minimizer(np.eye(3), 1, DEMO.xi).objective == pytest.approx(2)

    def test_single_variable_closed_form(self):
        phi = E13Instance(1, ((1,),))
        rep = oracle.sparse_minimizer(build_reduction_matrix(phi, DEMO), 1, DEMO.xi)
        lam = float(closed_form_single(DEMO))
        assert rep.objective == pytest.approx(2 * lam, rel=1e-12)
        assert rep.support == (0, 2)
        # strictly below n: the restricted minimum does not sit at the assignment vector
        assert rep.objective < 1

    @pytest.mark.parametrize("seed", range(6))
    def test_power_iteration_oracle(self, seed):
        phi = random_e13(3, seed=seed, planted=seed % 2 == 0)
        X = build_reduction_matrix(phi, DEMO)
        rep = oracle.sparse_minimizer(X, 3, DEMO.xi)
        A = X.to_float()
        G = A.T @ A
        best = min(power_min_eig(G[np.ix_(S, S)]) for S in combinations(range(9), rep.k))
        assert rep.eigen_objective == pytest.approx(2 * 3 * best, rel=1e-7)
        assert rep.objective == pytest.approx(rep.eigen_objective, rel=1e-9)

    @pytest.mark.parametrize("seed", range(6))
    def test_report_invariants(self, seed):
        phi = random_e13(4, seed=seed)
        rep = oracle.sparse_minimizer(build_reduction_matrix(phi, DEMO), 4, DEMO.xi)
        w = np.array(rep.w)
        assert np.sum(w**2) == pytest.approx(8)
        assert np.count_nonzero(w) <= 2 * (1 + float(DEMO.xi) ** 2) * 4
        assert rep.v_bar >= 0
        assert rep.objective <= (1 + float(DEMO.epsilon) ** 2) * 4 + 1e-9
        assert MinimizerReport.from_dict(json.loads(json.dumps(rep.to_dict()))) == rep

    @pytest.mark.parametrize("seed", range(6))
    def test_satisfiable_minimizer_is_assignment_direction(self, seed):
        n = 4
        phi = random_e13(n, seed=seed, planted=True)
        rep = oracle.sparse_minimizer(build_reduction_matrix(phi, DEMO), n, DEMO.xi)
        assert rep.objective <= n
        assert rep.objective == pytest.approx(n, rel=1e-4)
        rounded = np.round(np.array(rep.w))
        good, clauses, bad = oracle.classify_good_bad(rep, phi)
        assert len(good) == n and bad == 0
        a = Assignment(tuple(bool(x) for x in rounded[:n]))
        assert tuple(int(x) for x in rounded) == assignment_vector(a)

    def test_wrong_shape(self):
        with pytest.raises(InputError):
            oracle.sparse_minimizer(np.eye(4), 1, DEMO.xi)

    def test_capacity(self):
        phi = random_e13(8, seed=0)
        with pytest.raises(CapacityError):
            oracle.sparse_minimizer(build_reduction_matrix(phi, DEMO), 8, DEMO.xi, budget=1000)


def fake_report(wp, wm, v):
    n = len(wp)
    return MinimizerReport(n=n, k=2 * n, w=tuple(wp) + tuple(wm) + tuple(v), support=(), objective=0.0, eigen_objective=0.0)


class TestClassify:
    def test_assignment_vector_all_good(self):
        phi = E13Instance(3, ((1, 2), (2, 3)))
        u = assignment_vector(Assignment((False, True, False)))
        good, clauses, bad = oracle.classify_good_bad(fake_report(u[:3], u[3:6], u[6:]), phi)
        assert good == {1, 2, 3} and clauses == {0, 1} and bad == 0

    def test_both_half(self):
        phi = E13Instance(1, ((1,),))
        good, _, bad = oracle.classify_good_bad(fake_report([0.5], [0.5], [1.0]), phi)
        assert good == set() and bad == 1

    def test_v_out_of_range(self):
        phi = E13Instance(2, ((1,), (2,)))
        good, clauses, bad = oracle.classify_good_bad(fake_report([1, 0], [0, 1], [0.5, 1.0]), phi)
        assert good == {1, 2} and clauses == {1} and bad == 1

    def test_zero_tolerance(self):
        phi = E13Instance(1, ((1,),))
        assert oracle.classify_good_bad(fake_report([1.0], [5e-8], [1.0]), phi)[0] == {1}
        assert oracle.classify_good_bad(fake_report([1.0], [5e-7], [1.0]), phi)[0] == set()

    def test_mismatch(self):
        with pytest.raises(InputError):
            oracle.classify_good_bad(fake_report([1.0], [0.0], [1.0]), E13Instance(2, ((1,),)))


def test_scaled_satisfiable_not_rip():
    phi = random_e13(3, seed=1, planted=True)
    X = build_scaled_matrix(phi, DEMO)
    # ||Xu||^2 = ||u||^2 / (2 c1^2) on the assignment vector
    rep = oracle.restricted_extremes(X, 6)
    assert rep.min_restricted_eig <= float(1 / (2 * DEMO.c1**2)) + 1e-15
    assert not oracle.is_rip(X, 6, 1 - float(DEMO.xi**2) / 17)


def test_hardness_params_gap_exact():
    params = ReductionParams.hardness(Fraction(1, 100))
    sat = E13Instance(2, ((1, 2),))
    unsat = E13Instance(3, ((1, 2, 3), (1, 2), (3,)))
    for phi, expected in ((sat, Verdict.FAR_FROM_RIP), (unsat, Verdict.IS_RIP)):
        X = build_scaled_matrix(phi, params)
        k = 2 * params.c2 * phi.num_vars
        assert oracle.gap_decide(X, k, params.delta, params.lambda1, params.lambda2, exact=True) is expected
