import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gf2_inverse_bruteforce, gf2_matmul
from wiretapsim.gf2 import (
    BitMatrix,
    BitVector,
    DimensionError,
    has_zero_column,
    mat_inverse,
    mat_mul,
    null_space,
    parse_matrix,
    rank,
    vec_mat_mul,
)

GH = parse_matrix("0010;0001;1010;0101")


def matrices(rows, cols):
    return st.lists(st.lists(st.integers(0, 1), min_size=cols, max_size=cols), min_size=rows, max_size=rows).map(
        lambda r: BitMatrix.from_rows(r, cols)
    )


def test_bitvector_packing_is_lsb_first():
    v = BitVector.from_str("1101")
    assert v.bits == 0b1011
    assert v.to_list() == [1, 1, 0, 1]
    assert str(v) == "1101"
    assert v.weight() == 3


def test_bitvector_concat_and_split():
    a, u = BitVector.from_str("10"), BitVector.from_str("11")
    c = a.concat(u)
    assert str(c) == "1011"
    assert c.split(2) == (a, u)


def test_bitvector_masks_to_length_and_rejects_mismatched_xor():
    assert BitVector(0b111, 2).bits == 0b11
    with pytest.raises(DimensionError):
        BitVector.zeros(3) ^ BitVector.zeros(4)


def test_identity_times_matrix():
    assert mat_mul(BitMatrix.identity(4), GH) == GH


def test_example_matrix_inverse():
    inv = mat_inverse(GH)
    assert inv.to_literal() == "1010;0101;1000;0100"
    assert mat_mul(GH, inv) == BitMatrix.identity(4)


def test_inverse_matches_bruteforce_search():
    assert np.array_equal(mat_inverse(GH).to_array(), gf2_inverse_bruteforce(GH.to_array()))


def test_row_times_example_matrix():
    v = BitVector.from_list([1, 0, 1, 1])
    assert vec_mat_mul(v, GH).to_list() == [1, 1, 0, 1]
    assert vec_mat_mul(BitVector.zeros(4), GH) == BitVector.zeros(4)
    for i in range(4):
        assert vec_mat_mul(BitVector.unit(i, 4), GH) == GH.row(i)


def test_inverse_edge_cases():
    assert mat_inverse(BitMatrix.identity(3)) == BitMatrix.identity(3)
    assert mat_inverse(BitMatrix.zeros(2, 2)) is None
    with pytest.raises(DimensionError):
        mat_inverse(BitMatrix.zeros(2, 3))


def test_mat_mul_dimension_mismatch():
    with pytest.raises(DimensionError):
        mat_mul(BitMatrix.zeros(2, 3), BitMatrix.zeros(2, 3))


def test_rank_examples():
    assert rank(BitMatrix.identity(3)) == 3
    assert rank(GH.block(2, 4, 0, 4)) == 2
    assert rank(parse_matrix("11;11")) == 1


def test_zero_column_examples():
    assert not has_zero_column(BitMatrix.identity(2))
    assert not has_zero_column(GH.block(2, 4, 2, 4))
    assert has_zero_column(parse_matrix("10;10"))


def test_parse_matrix_accepts_newlines():
    assert parse_matrix("0010\n0001\n1010\n0101\n") == GH
    with pytest.raises(ValueError):
        parse_matrix("01;1")


@settings(max_examples=60, deadline=None)
@given(matrices(3, 4), matrices(4, 5))
def test_mat_mul_matches_integer_product(a, b):
    assert np.array_equal(mat_mul(a, b).to_array(), gf2_matmul(a.to_array(), b.to_array()))


@settings(max_examples=60, deadline=None)
@given(matrices(5, 5))
def test_inverse_is_two_sided_or_absent(a):
    inv = mat_inverse(a)
    if inv is None:
        assert rank(a) < 5
    else:
        assert mat_mul(a, inv) == BitMatrix.identity(5)
        assert mat_mul(inv, a) == BitMatrix.identity(5)


@settings(max_examples=60, deadline=None)
@given(matrices(4, 7))
def test_null_space_annihilates_and_has_full_dimension(a):
    ns = null_space(a)
    assert ns.nrows == 7 - rank(a)
    for i in range(ns.nrows):
        assert not gf2_matmul(a.to_array(), ns.row(i).to_array()).any()


@settings(max_examples=60, deadline=None)
@given(matrices(4, 6))
def test_transpose_is_involution(a):
    assert a.transpose().transpose() == a
    assert np.array_equal(a.transpose().to_array(), a.to_array().T)
