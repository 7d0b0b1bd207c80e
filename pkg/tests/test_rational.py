from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riphard.errors import InputError, ParseError
from riphard.rational import Block, RationalMatrix, dumps_matrix, loads_matrix

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=12)


@st.composite
def rational_matrices(draw, max_rows=4, max_cols=4):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return RationalMatrix.from_rows([[draw(fractions) for _ in range(c)] for _ in range(r)])


def test_identity_and_zeros():
    eye = RationalMatrix.identity(3)
    assert eye @ eye == eye
    assert RationalMatrix.zeros(2, 3).shape == (2, 3)


def test_bad_shape():
    with pytest.raises(InputError):
        RationalMatrix(2, 2, ((1, 2), (3,)))


def test_block_range_checked():
    with pytest.raises(InputError):
        RationalMatrix(1, 1, ((1,),), (Block("x", 0, 2),))


def test_vstack_blocks():
    a, b = RationalMatrix.identity(2), RationalMatrix.zeros(1, 2)
    m = RationalMatrix.vstack([a, b], ("top", "bottom"))
    assert m.block("top") == a
    assert m.block("bottom") == b
    with pytest.raises(KeyError):
        m.block("middle")


def test_transpose_empty():
    m = RationalMatrix.zeros(0, 3)
    assert m.T.shape == (3, 0)


@given(rational_matrices(), st.data())
def test_sq_norm_image_matches_definition(M, data):
    u = data.draw(st.lists(fractions, min_size=M.cols, max_size=M.cols))
    y = M.matvec(u)
    assert M.sq_norm_image(u) == sum(x * x for x in y)


@given(rational_matrices())
def test_gram_matches_float(M):
    G = M.gram()
    assert np.allclose(G.to_float(), M.to_float().T @ M.to_float())


@given(rational_matrices())
def test_integer_form(M):
    N, d = M.integer_form()
    assert RationalMatrix.from_rows([[Fraction(x, d) for x in row] for row in N]) == M


@given(rational_matrices())
def test_file_round_trip(M):
    assert loads_matrix(dumps_matrix(M)) == M


def test_file_round_trip_blocks():
    m = RationalMatrix.vstack([RationalMatrix.identity(2), RationalMatrix.zeros(1, 2)], ("a", "b"))
    assert loads_matrix(dumps_matrix(m)).blocks == m.blocks


def test_float_round_trip_exact():
    A = np.random.default_rng(1).standard_normal((3, 4))
    assert np.array_equal(loads_matrix(dumps_matrix(A)), A)


def test_rational_entries_written_as_p_over_q():
    text = dumps_matrix(RationalMatrix.from_rows([[Fraction(1, 5), 2, Fraction(-3, 4)]]))
    assert text.splitlines()[1] == "1/5 2 -3/4"


@pytest.mark.parametrize(
    "text, line",
    [
        ("rip-matrix v1 1 2 rational\n1\n", 2),
        ("rip-matrix v1 2 1 rational\n1\n", 2),
        ("rip-matrix v2 1 1 rational\n1\n", 1),
        ("rip-matrix v1 1 1 float\nabc\n", 2),
        ("rip-matrix v1 1 1 rational\n1/0\n", 2),
    ],
)
def test_malformed(text, line):
    with pytest.raises(ParseError) as err:
        loads_matrix(text)
    assert err.value.line == line


def test_from_float_exact():
    m = RationalMatrix.from_float([[0.1]])
    assert m[0, 0] == Fraction(0.1)
