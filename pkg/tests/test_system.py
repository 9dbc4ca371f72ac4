import io
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import default_params, small_params
from oracles import majority
from wiretapsim.channel import ChannelParams, make_rng
from wiretapsim.coding import make_hamming_7_4, make_repetition
from wiretapsim.gf2 import BitVector, DimensionError
from wiretapsim.keystream import Key, KeystreamModel, key_from_index
from wiretapsim.system import (
    AdversaryStrategy,
    SystemParams,
    apply_channel,
    kpa_residual,
    read_trace,
    receive,
    run_session,
    transmit,
    write_trace,
)


def bv(s):
    return BitVector.from_str(s)


@pytest.fixture
def rep_system(rep_coset):
    return SystemParams(make_repetition(4, 3), ChannelParams(0.0), KeystreamModel.lfsr(8), 8, rep_coset)


def baseline(p=0.0, k=4, flag_mode="genie"):
    return SystemParams(make_repetition(k, 3), ChannelParams(p), KeystreamModel.lfsr(8), 8, None, flag_mode)


KEY = Key.from_str("10110001")


def test_dimension_checks(rep_coset):
    with pytest.raises(DimensionError):
        SystemParams(make_repetition(3, 3), ChannelParams(0.1), KeystreamModel.lfsr(8), 8, rep_coset)
    with pytest.raises(DimensionError):
        SystemParams(make_repetition(4, 3), ChannelParams(0.1), KeystreamModel.lfsr(8), 6, rep_coset)
    with pytest.raises(ValueError):
        SystemParams(make_repetition(4, 3), ChannelParams(0.1), KeystreamModel.lfsr(8), 8, rep_coset, "oracle")


def test_transmit_zero(rep_system):
    rec = transmit(rep_system, KEY, bv("00"), bv("00"), 1, x=BitVector.zeros(12))
    assert rec.y == BitVector.zeros(12)


def test_transmit_example(rep_system):
    rec = transmit(rep_system, KEY, bv("10"), bv("11"), 1, x=BitVector.zeros(12))
    assert str(rec.y) == "111111000111"
    rec2 = transmit(rep_system, KEY, bv("10"), bv("11"), 1, x=BitVector.ones(12))
    assert str(rec2.y) == "000000111000"


def test_combined_generator_tables(rep_system):
    assert rep_system.a_code[0b01] == bv("000000111000").bits
    assert rep_system.u_code.shape == (4,)


def test_channel_without_noise(rep_system):
    rec = transmit(rep_system, KEY, bv("10"), bv("01"), 2)
    out = apply_channel(rep_system, rec, BitVector.zeros(12), make_rng(0))
    assert out.z == rec.y
    e1 = BitVector.unit(0, 12)
    assert apply_channel(rep_system, rec, e1, make_rng(0)).z == rec.y ^ e1


def test_channel_is_replayable():
    params = default_params(0.1)
    rec = transmit(params, KEY, bv("11"), bv("10"), 1)
    vs = BitVector.unit(3, 12)
    a = apply_channel(params, rec, vs, make_rng(5))
    b = apply_channel(params, rec, vs, make_rng(5))
    assert a == b
    assert a.z == rec.y ^ a.v ^ vs
    assert a.v_prime == a.v ^ vs


def test_noiseless_round_trip(rep_system):
    for a, u in itertools.product(range(4), range(4)):
        rec = transmit(rep_system, KEY, BitVector(a, 2), BitVector(u, 2), 3)
        a_hat, f = receive(rep_system, KEY, rec.y, 3, BitVector(a, 2))
        assert a_hat == BitVector(a, 2) and f


def test_one_flip_per_block_still_decodes(rep_system):
    rec = transmit(rep_system, KEY, bv("01"), bv("10"), 1)
    flips = BitVector(sum(1 << (3 * b + b % 3) for b in range(4)), 12)
    a_hat, f = receive(rep_system, KEY, rec.y ^ flips, 1, bv("01"))
    assert a_hat == bv("01") and f


def test_two_flips_in_one_block_flag_modes():
    key = Key.from_str("00000000")
    for mode, expected_flag in (("detected", True), ("genie", False)):
        params = baseline(0.0, k=1, flag_mode=mode)
        rec = transmit(params, key, bv("0"), BitVector.zeros(0), 1)
        a_hat, f = receive(params, key, rec.y ^ bv("110"), 1, bv("0"))
        assert a_hat == bv("1")
        assert f is expected_flag


def test_genie_flag_needs_plaintext(rep_system):
    with pytest.raises(ValueError):
        receive(rep_system, KEY, BitVector.zeros(12), 1)


def test_kpa_residual_baseline():
    params = baseline(0.2)
    rng = make_rng(11)
    for t in range(1, 6):
        a = BitVector(int(rng.integers(16)), 4)
        rec = transmit(params, KEY, a, BitVector.zeros(0), t)
        assert kpa_residual(params, a, rec.y) == rec.x
        noisy = apply_channel(params, rec, BitVector.zeros(12), rng)
        assert kpa_residual(params, a, noisy.z) ^ rec.x == noisy.v


def test_kpa_residual_with_wiretap_exposes_coset_word():
    params = default_params(0.1)
    rng = make_rng(12)
    rec = apply_channel(params, transmit(params, KEY, bv("00"), bv("11"), 1), BitVector.zeros(12), rng)
    expected = rec.x ^ BitVector(int(params.u_code[0b11]), 12) ^ rec.v
    assert kpa_residual(params, bv("00"), rec.z) == expected


def test_session_strategies():
    params = default_params(0.1)
    recs = run_session(params, KEY, 1, rng=make_rng(1))
    assert len(recs) == 1 and recs[0].t == 1
    assert all(r.v_star.bits == 0 for r in run_session(params, KEY, 10, rng=make_rng(2)))
    vs = bv("100000100000")
    recs = run_session(params, KEY, 10, strategy=AdversaryStrategy.constant(vs), rng=make_rng(3))
    assert all(r.v_star == vs for r in recs)


def test_passive_strategy_injects_nothing():
    with pytest.raises(ValueError):
        AdversaryStrategy("passive", bv("1000"))


def test_session_requires_generator():
    with pytest.raises(ValueError):
        run_session(default_params(), KEY, 3)


def test_session_is_seed_deterministic():
    params = default_params(0.1)
    a = run_session(params, KEY, 8, rng=make_rng(77))
    b = run_session(params, KEY, 8, rng=make_rng(77))
    assert a == b


def test_fixed_plaintext_source():
    params = default_params(0.1)
    recs = run_session(params, KEY, 5, source=bv("00"), rng=make_rng(4))
    assert all(r.a == bv("00") for r in recs)


@pytest.mark.parametrize("make", [lambda: default_params(0.15), lambda: small_params(0.2)])
def test_record_invariants_hold(make):
    params = make()
    key = key_from_index(5, params.key_bits)
    vs = AdversaryStrategy.constant(BitVector.unit(0, params.n))
    for r in run_session(params, key, 40, strategy=vs, rng=make_rng(9)):
        clean = BitVector(int(params.a_code[r.a.bits] ^ params.u_code[r.u.bits]), params.n)
        assert r.y == clean ^ r.x
        assert r.z == r.y ^ r.v_prime
        assert (r.y ^ r.v_prime) ^ r.x == clean ^ r.v_prime


def test_end_to_end_within_radius_exhaustive(rep_coset):
    """p=0: any injection with at most one flip per rep-3 block is corrected."""
    params = SystemParams(make_repetition(4, 3), ChannelParams(0.0), KeystreamModel.lfsr(8), 8, rep_coset)
    patterns = [
        BitVector(sum(((pos[b] >= 0) << (3 * b + max(pos[b], 0))) for b in range(4)), 12)
        for pos in itertools.product(range(-1, 3), repeat=4)
    ]
    key = Key.from_str("01010011")
    for vs in patterns:
        for a, u in itertools.product(range(4), range(4)):
            rec = transmit(params, key, BitVector(a, 2), BitVector(u, 2), 1)
            a_hat, f = receive(params, key, rec.y ^ vs, 1, BitVector(a, 2))
            assert a_hat.bits == a and f


def test_hamming_system_round_trip():
    from wiretapsim.coding import build_wiretap, default_inner_generator

    wt = build_wiretap(1, default_inner_generator(1, 4))
    params = SystemParams(make_hamming_7_4(), ChannelParams(0.0), KeystreamModel.lfsr(7), 7, wt)
    key = key_from_index(99, 7)
    for a, u in itertools.product(range(2), range(8)):
        rec = transmit(params, key, BitVector(a, 1), BitVector(u, 3), 2)
        for i in range(7):
            a_hat, f = receive(params, key, rec.y ^ BitVector.unit(i, 7), 2, BitVector(a, 1))
            assert a_hat.bits == a and f


def test_trace_round_trip():
    params = default_params(0.1)
    recs = run_session(params, KEY, 4, rng=make_rng(8))
    buf = io.StringIO()
    write_trace(recs, buf)
    buf.seek(0)
    rows = read_trace(buf)
    assert [r["z"] for r in rows] == [r.z for r in recs]
    assert [r["f_d"] for r in rows] == [r.f_d for r in recs]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4095))
def test_rep3_flag_table_matches_majority(word):
    params = baseline(0.1, k=4, flag_mode="detected")
    bits = [(word >> i) & 1 for i in range(12)]
    expected = sum(majority(bits[3 * j : 3 * j + 3]) << j for j in range(4))
    assert params.flag_table[word] == expected
