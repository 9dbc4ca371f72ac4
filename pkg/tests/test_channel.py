import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import h2, noise_prob
from wiretapsim.channel import (
    ChannelParams,
    NoiseRecord,
    binary_entropy,
    make_rng,
    noise_log_prob,
    sample_noise,
    sample_noise_words,
    weight_probs,
)
from wiretapsim.gf2 import BitVector


def test_p_must_be_below_half():
    with pytest.raises(ValueError):
        ChannelParams(0.5)
    with pytest.raises(ValueError):
        ChannelParams(-0.1)


def test_zero_noise():
    rng = make_rng(1)
    assert all(sample_noise(ChannelParams(0.0), 16, rng).bits == 0 for _ in range(20))


def test_empirical_rate():
    v = sample_noise(ChannelParams(0.1), 100_000, make_rng(7))
    assert abs(v.weight() / 100_000 - 0.1) < 0.01


def test_seeded_reproducibility():
    a = sample_noise(ChannelParams(0.3), 64, make_rng(99))
    b = sample_noise(ChannelParams(0.3), 64, make_rng(99))
    assert a == b


def test_frozen_seeded_draw():
    # bit-exact regression for PCG64 seed 2024
    v = sample_noise(ChannelParams(0.25), 16, make_rng(2024))
    assert str(v) == FROZEN_2024


def test_word_sampler_matches_single_draws():
    params = ChannelParams(0.2)
    words = sample_noise_words(params, 5, 12, make_rng(3))
    rng = make_rng(3)
    assert [sample_noise(params, 12, rng).bits for _ in range(5)] == words.tolist()


def test_log_prob_examples():
    assert noise_log_prob(ChannelParams(0.1), BitVector.zeros(8)) == pytest.approx(8 * math.log2(0.9))
    v = BitVector.from_str("0100")
    assert noise_log_prob(ChannelParams(0.25), v) == pytest.approx(-3.2451, abs=5e-5)
    assert noise_log_prob(ChannelParams(0.0), v) == -math.inf
    assert noise_log_prob(ChannelParams(0.0), BitVector.zeros(4)) == 0.0


@pytest.mark.parametrize("p", [0.0, 0.05, 0.3, 0.49])
@pytest.mark.parametrize("n", [1, 5, 12])
def test_noise_distribution_normalised(p, n):
    params = ChannelParams(p)
    total = sum(2.0 ** noise_log_prob(params, BitVector(v, n)) for v in range(1 << n))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_weight_probs_match_oracle():
    for p, n in itertools.product([0.0, 0.1, 0.4], [3, 7]):
        pw = weight_probs(p, n)
        for w in range(n + 1):
            assert pw[w] == pytest.approx(noise_prob([1] * w + [0] * (n - w), p), rel=1e-12, abs=1e-300)


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.1) == pytest.approx(0.46900, abs=5e-6)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0))
def test_binary_entropy_symmetric(q):
    assert binary_entropy(q) == pytest.approx(binary_entropy(1.0 - q), abs=1e-12)
    assert binary_entropy(q) == pytest.approx(h2(q), abs=1e-12)


def test_noise_record_invariant():
    v, vs = BitVector.from_str("1000"), BitVector.from_str("0011")
    assert NoiseRecord.combine(v, vs).v_prime == BitVector.from_str("1011")
    with pytest.raises(ValueError):
        NoiseRecord(v, vs, v)


FROZEN_2024 = "0100011101001010"
