import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lfsr_bits
from wiretapsim.keystream import (
    DEFAULT_TAPS,
    Key,
    KeystreamModel,
    enumerate_keys,
    key_from_index,
    key_index,
    keystream_block,
    parse_keystream,
    stream_table,
)


def period(bits):
    for p in range(1, len(bits)):
        if all(bits[i] == bits[i + p] for i in range(len(bits) - p)):
            return p
    return None


def test_block_is_deterministic():
    model = KeystreamModel.lfsr(8)
    key = Key.from_str("10110010")
    assert keystream_block(model, key, 3, 12) == keystream_block(model, key, 3, 12)


def test_three_bit_register_has_period_seven():
    model = KeystreamModel.lfsr(3, (3, 2))
    bits = keystream_block(model, Key.from_str("100"), 1, 21).to_list()
    assert bits[:3] == [1, 0, 0]
    assert period(bits) == 7
    assert sorted(tuple(bits[i : i + 3]) for i in range(7)) == sorted(
        tuple((j >> s) & 1 for s in range(3)) for j in range(1, 8)
    )


def test_blocks_are_contiguous():
    model = KeystreamModel.lfsr(5)
    key = Key.from_str("01101")
    b1 = keystream_block(model, key, 1, 4)
    b2 = keystream_block(model, key, 2, 4)
    assert b1.concat(b2) == keystream_block(model, key, 1, 8)


def test_stream_matches_list_oracle():
    model = KeystreamModel.lfsr(8)
    key = Key.from_str("11000101")
    got = keystream_block(model, key, 1, 40).to_list()
    assert got == lfsr_bits([1, 1, 0, 0, 0, 1, 0, 1], DEFAULT_TAPS[8], 40)


@pytest.mark.parametrize("L", [L for L in sorted(DEFAULT_TAPS) if L <= 14])
def test_default_taps_are_maximal_length(L):
    taps = DEFAULT_TAPS[L]
    state = [1] + [0] * (L - 1)
    start = tuple(state)
    steps = 0
    while True:
        bit = 0
        for e in taps:
            bit ^= state[L - e]
        state = state[1:] + [bit]
        steps += 1
        if tuple(state) == start:
            break
    assert steps == (1 << L) - 1


def test_enumeration_order_and_cap():
    assert [k.bits.to_list() for k in enumerate_keys(1)] == [[0], [1]]
    keys = enumerate_keys(3)
    assert len(keys) == 8
    assert keys[0].bits.to_list() == [0, 0, 0]
    assert keys[-1].bits.to_list() == [1, 1, 1]
    assert keys[1].bits.to_list() == [0, 0, 1]
    with pytest.raises(ValueError, match="Monte-Carlo"):
        enumerate_keys(21)


@pytest.mark.parametrize("kb", [1, 3, 6, 10])
def test_key_index_round_trip(kb):
    for i in range(1 << kb):
        assert key_index(key_from_index(i, kb)) == i


@pytest.mark.parametrize("kb", [2, 3, 4, 6, 8, 10])
def test_first_block_is_injective(kb):
    for n in (kb, kb + 3):
        table = stream_table(KeystreamModel.lfsr(kb), kb, 1, n)
        assert len(np.unique(table[:, 0])) == 1 << kb


def test_stream_table_rows_match_blocks():
    model = KeystreamModel.lfsr(4)
    table = stream_table(model, 4, 3, 5)
    for i in (0, 5, 15):
        for t in (1, 2, 3):
            assert table[i, t - 1] == keystream_block(model, key_from_index(i, 4), t, 5).bits


def test_parse_keystream():
    assert parse_keystream("ideal") == KeystreamModel.ideal()
    m = parse_keystream("lfsr:bits=8,taps=8,6,5,4")
    assert m.state_bits == 8 and m.feedback_taps == (8, 6, 5, 4)
    assert parse_keystream("lfsr:bits=5") == KeystreamModel.lfsr(5)
    with pytest.raises(ValueError):
        parse_keystream("aes")


def test_ideal_model_has_no_stream():
    with pytest.raises(ValueError):
        keystream_block(KeystreamModel.ideal(), Key.from_str("101"), 1, 4)


def test_key_length_must_match_register():
    with pytest.raises(ValueError):
        keystream_block(KeystreamModel.lfsr(4), Key.from_str("101"), 1, 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.data())
def test_contiguity_property(kb, data):
    key = key_from_index(data.draw(st.integers(0, (1 << kb) - 1)), kb)
    n = data.draw(st.integers(1, 9))
    t = data.draw(st.integers(1, 4))
    model = KeystreamModel.lfsr(kb)
    whole = keystream_block(model, key, 1, n * (t + 1)).to_list()
    assert keystream_block(model, key, t + 1, n).to_list() == whole[t * n :]
