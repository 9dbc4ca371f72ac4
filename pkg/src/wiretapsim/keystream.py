"""Keyed keystream generator: a Fibonacci LFSR seeded with the key bits.

The register holds ``s_0 .. s_{L-1}`` = key bits and the stream obeys
``s_{j+L} = XOR_{e in taps} s_{j+L-e}``, where ``taps`` are the exponents of
the feedback polynomial (``{3, 2}`` is ``x^3 + x^2 + 1``).  Output bit ``j`` is
``s_j``; block ``t`` of length ``n`` is ``s_{(t-1)n} .. s_{tn-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import BitVector

__all__ = [
    "Key",
    "KeystreamModel",
    "ENUMERATION_CAP",
    "DEFAULT_TAPS",
    "keystream_block",
    "enumerate_keys",
    "key_from_index",
    "key_index",
    "stream_bits",
    "stream_table",
    "parse_keystream",
]

ENUMERATION_CAP = 20

# Primitive feedback polynomials (exponents), one per register length.
DEFAULT_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 18, 17, 14),
    20: (20, 17),
}


@dataclass(frozen=True)
class Key:
    bits: BitVector

    def __post_init__(self):
        if self.bits.length < 1:
            raise ValueError("key must have at least one bit")

    @property
    def key_bits(self) -> int:
        return self.bits.length

    @classmethod
    def from_str(cls, text: str) -> "Key":
        return cls(BitVector.from_str(text))


@dataclass(frozen=True)
class KeystreamModel:
    variant: str
    state_bits: int = 0
    feedback_taps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.variant not in ("ideal", "keyed_fsm"):
            raise ValueError(f"unknown keystream variant {self.variant!r}")
        if self.variant == "keyed_fsm":
            if self.state_bits < 1:
                raise ValueError("register needs at least one bit")
            taps = tuple(sorted({int(t) for t in self.feedback_taps}, reverse=True))
            if not taps or taps[0] != self.state_bits or taps[-1] < 1:
                raise ValueError(
                    f"taps {self.feedback_taps} must include the degree {self.state_bits} "
                    "and lie in 1..degree"
                )
            object.__setattr__(self, "feedback_taps", taps)

    @classmethod
    def lfsr(cls, bits: int, taps=None) -> "KeystreamModel":
        if taps is None:
            if bits not in DEFAULT_TAPS:
                raise ValueError(f"no default taps for a {bits}-bit register")
            taps = DEFAULT_TAPS[bits]
        return cls("keyed_fsm", bits, tuple(taps))

    @classmethod
    def ideal(cls) -> "KeystreamModel":
        return cls("ideal")

    @property
    def is_keyed(self) -> bool:
        return self.variant == "keyed_fsm"

    def spec(self) -> str:
        if not self.is_keyed:
            return "ideal"
        return f"lfsr:bits={self.state_bits},taps={','.join(map(str, self.feedback_taps))}"


def parse_keystream(text: str) -> KeystreamModel:
    """Parse ``"ideal"`` or ``"lfsr:bits=8,taps=8,6,5,4"``."""
    text = text.strip()
    if text == "ideal":
        return KeystreamModel.ideal()
    if not text.startswith("lfsr:"):
        raise ValueError(f"unknown keystream spec {text!r}")
    body = text[len("lfsr:") :]
    bits = None
    taps = None
    if "taps=" in body:
        body, tap_text = body.split("taps=", 1)
        taps = [int(t) for t in tap_text.split(",") if t.strip()]
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, value = part.partition("=")
        if name != "bits":
            raise ValueError(f"unknown lfsr option {name!r} in {text!r}")
        bits = int(value)
    if bits is None:
        raise ValueError(f"lfsr spec {text!r} needs bits=")
    return KeystreamModel.lfsr(bits, taps)


def _check_keyed(model: KeystreamModel, key_bits: int) -> None:
    if not model.is_keyed:
        raise ValueError("the ideal keystream model has no sampling entry point")
    if key_bits != model.state_bits:
        raise ValueError(f"key has {key_bits} bits but the register has {model.state_bits}")


def stream_bits(model: KeystreamModel, keys: np.ndarray, length: int) -> np.ndarray:
    """First ``length`` stream bits for each row of ``keys`` (shape ``K x L``)."""
    keys = np.atleast_2d(np.asarray(keys, dtype=np.uint8))
    _check_keyed(model, keys.shape[1])
    L = model.state_bits
    s = np.zeros((keys.shape[0], max(length, L)), dtype=np.uint8)
    s[:, :L] = keys
    for j in range(L, length):
        acc = s[:, j - model.feedback_taps[0]].copy()
        for e in model.feedback_taps[1:]:
            acc ^= s[:, j - e]
        s[:, j] = acc
    return s[:, :length]


def _pack_blocks(bits: np.ndarray, n: int) -> np.ndarray:
    k, total = bits.shape
    blocks = bits.reshape(k, total // n, n).astype(np.int64)
    return (blocks << np.arange(n, dtype=np.int64)).sum(axis=2)


def keystream_block(model: KeystreamModel, key: Key, t: int, n: int) -> BitVector:
    if t < 1 or n < 1:
        raise ValueError(f"need t >= 1 and n >= 1, got t={t}, n={n}")
    bits = stream_bits(model, key.bits.to_array()[None, :], t * n)[0, (t - 1) * n :]
    return BitVector.from_list(bits.tolist())


def enumerate_keys(key_bits: int, cap: int = ENUMERATION_CAP) -> list[Key]:
    """All keys in lexicographic order (``[0,..,0]`` first)."""
    if key_bits > cap:
        raise ValueError(
            f"{key_bits}-bit keys exceed the enumeration cap of {cap}; "
            "use Monte-Carlo sampling instead"
        )
    return [key_from_index(i, key_bits) for i in range(1 << key_bits)]


def key_from_index(i: int, key_bits: int) -> Key:
    return Key(BitVector.from_list((i >> (key_bits - 1 - j)) & 1 for j in range(key_bits)))


def key_index(key: Key) -> int:
    idx = 0
    for b in key.bits.to_list():
        idx = (idx << 1) | b
    return idx


def key_matrix(key_bits: int) -> np.ndarray:
    """``(2**key_bits, key_bits)`` array of all keys in lexicographic order."""
    idx = np.arange(1 << key_bits, dtype=np.int64)[:, None]
    shifts = np.arange(key_bits - 1, -1, -1, dtype=np.int64)[None, :]
    return ((idx >> shifts) & 1).astype(np.uint8)


def stream_table(model: KeystreamModel, key_bits: int, tau: int, n: int) -> np.ndarray:
    """Packed keystream blocks ``[key_index, t-1]`` for every key, ``t = 1..tau``."""
    if key_bits > ENUMERATION_CAP:
        raise ValueError(f"{key_bits}-bit keys exceed the enumeration cap of {ENUMERATION_CAP}")
    if n > 62:
        raise ValueError("packed keystream blocks need n <= 62")
    bits = stream_bits(model, key_matrix(key_bits), tau * n)
    return _pack_blocks(bits, n)
