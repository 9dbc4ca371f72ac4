"""Binary symmetric channel, noise likelihoods and the binary entropy function.

Entropies are in bits throughout.  Randomness comes from numpy's ``PCG64``
generator; sub-streams for parallel work are derived with ``Generator.spawn``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2 import BitVector

__all__ = [
    "ChannelParams",
    "NoiseRecord",
    "RNG_ALGORITHM",
    "make_rng",
    "sample_noise",
    "sample_noise_words",
    "noise_log_prob",
    "weight_probs",
    "binary_entropy",
]

RNG_ALGORITHM = f"numpy.random.PCG64 (numpy {np.__version__})"


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ChannelParams:
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 <= p < 0.5):
            raise ValueError(f"crossover probability must lie in [0, 0.5), got {self.p}")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class NoiseRecord:
    v: BitVector
    v_star: BitVector
    v_prime: BitVector

    def __post_init__(self):
        if self.v_prime != self.v ^ self.v_star:
            raise ValueError("v_prime must equal v xor v_star")

    @classmethod
    def combine(cls, v: BitVector, v_star: BitVector) -> "NoiseRecord":
        return cls(v, v_star, v ^ v_star)


def sample_noise(params: ChannelParams, n: int, rng: np.random.Generator) -> BitVector:
    bits = rng.random(n) < params.p
    return BitVector.from_list(bits.astype(int).tolist())


def sample_noise_words(params: ChannelParams, rounds: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``rounds`` packed noise words; same draws as ``rounds`` calls of :func:`sample_noise`."""
    bits = (rng.random((rounds, n)) < params.p).astype(np.int64)
    return (bits << np.arange(n, dtype=np.int64)).sum(axis=1)


def noise_log_prob(params: ChannelParams, v: BitVector) -> float:
    """``log2 P(V = v)``; ``-inf`` for an impossible pattern."""
    w = v.weight()
    n = v.length
    p = params.p
    if p == 0.0:
        return 0.0 if w == 0 else -math.inf
    return w * math.log2(p) + (n - w) * math.log2(1.0 - p)


def weight_probs(p: float, n: int) -> np.ndarray:
    """``P(V = v)`` for one pattern of each weight ``0..n``."""
    w = np.arange(n + 1)
    if p == 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    return np.exp2(w * math.log2(p) + (n - w) * math.log2(1.0 - p))


def binary_entropy(q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {q}")
    if q in (0.0, 1.0):
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)
