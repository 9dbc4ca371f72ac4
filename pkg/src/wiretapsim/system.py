"""End-to-end pipeline: wire-tap encoder, ECC, keystream XOR, noisy channel,
receiver with a decode flag, and the adversary session harness."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelParams, sample_noise, sample_noise_words
from .coding import (
    LinearBlockCode,
    WiretapCode,
    combined_generator,
    ecc_decode,
    ecc_encode,
    wiretap_decode,
    wiretap_encode,
)
from .gf2 import BitMatrix, BitVector, DimensionError
from .keystream import Key, KeystreamModel, stream_bits

__all__ = [
    "InvariantViolation",
    "SystemParams",
    "TransmissionRecord",
    "AdversaryStrategy",
    "SessionArrays",
    "transmit",
    "apply_channel",
    "receive",
    "kpa_residual",
    "run_session",
    "draw_session",
    "write_trace",
]

FLAG_MODES = ("genie", "detected")


class InvariantViolation(RuntimeError):
    """A record broke one of the pipeline equations."""


@dataclass(frozen=True)
class SystemParams:
    ecc: LinearBlockCode
    channel: ChannelParams
    keystream: KeystreamModel
    key_bits: int
    wiretap: WiretapCode | None = None
    flag_mode: str = "genie"

    def __post_init__(self):
        if self.flag_mode not in FLAG_MODES:
            raise ValueError(f"flag_mode must be one of {FLAG_MODES}")
        if self.wiretap is not None and self.ecc.k != self.wiretap.m:
            raise DimensionError(
                f"ecc message length {self.ecc.k} != wire-tap block length {self.wiretap.m}"
            )
        if self.keystream.is_keyed and self.keystream.state_bits != self.key_bits:
            raise DimensionError(
                f"key_bits={self.key_bits} but the register has {self.keystream.state_bits} bits"
            )

    @property
    def l(self) -> int:
        return self.ecc.k if self.wiretap is None else self.wiretap.l

    @property
    def m(self) -> int:
        return self.ecc.k

    @property
    def n(self) -> int:
        return self.ecc.n

    @property
    def u_bits(self) -> int:
        return self.m - self.l

    @cached_property
    def G(self) -> BitMatrix:
        """Combined ``m x n`` generator; the ECC generator alone for the baseline."""
        if self.wiretap is None:
            return self.ecc.gen
        return combined_generator(self.wiretap, self.ecc)

    @cached_property
    def a_code(self) -> np.ndarray:
        """``a @ G[:l]`` for every packed ``a``."""
        return _span_table(self.G.rows[: self.l])

    @cached_property
    def u_code(self) -> np.ndarray:
        """``u @ G[l:]`` for every packed ``u``; the coset randomness."""
        return _span_table(self.G.rows[self.l :])

    @cached_property
    def flag_table(self) -> np.ndarray:
        """Receiver's recovered ``a`` for every decrypted word, ``-1`` on failure."""
        dec = self.ecc.decode_table()
        if self.wiretap is None:
            return dec
        a_of_msg = np.array(
            [wiretap_decode(self.wiretap, BitVector(c, self.m))[0].bits for c in range(1 << self.m)],
            dtype=np.int64,
        )
        return np.where(dec >= 0, a_of_msg[np.maximum(dec, 0)], -1)

    def flags(self, decrypted: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Receiver flag for decrypted words ``z ^ x`` given the sent ``a``."""
        rec = self.flag_table[decrypted]
        if self.flag_mode == "genie":
            return rec == a
        return rec >= 0

    def describe(self) -> dict[str, object]:
        return {
            "l": self.l,
            "m": self.m,
            "n": self.n,
            "ecc": self.ecc.name,
            "wiretap": "none" if self.wiretap is None else self.wiretap.gh.to_literal(),
            "p": self.channel.p,
            "key_bits": self.key_bits,
            "keystream": self.keystream.spec(),
            "flag_mode": self.flag_mode,
        }


def _span_table(rows: Sequence[int]) -> np.ndarray:
    out = np.zeros(1 << len(rows), dtype=np.int64)
    for i, r in enumerate(rows):
        half = 1 << i
        out[half : 2 * half] = out[:half] ^ r
    return out


@dataclass(frozen=True)
class TransmissionRecord:
    t: int
    a: BitVector
    u: BitVector
    x: BitVector
    y: BitVector
    v: BitVector | None = None
    v_star: BitVector | None = None
    v_prime: BitVector | None = None
    z: BitVector | None = None
    f_d: bool | None = None


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str
    v_star_template: BitVector

    def __post_init__(self):
        if self.kind not in ("passive", "constant_vector"):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.kind == "passive" and self.v_star_template.bits:
            raise ValueError("a passive adversary injects nothing")

    @classmethod
    def passive(cls, n: int) -> "AdversaryStrategy":
        return cls("passive", BitVector.zeros(n))

    @classmethod
    def constant(cls, v_star: BitVector) -> "AdversaryStrategy":
        return cls("constant_vector", v_star)

    def v_star(self, t: int) -> BitVector:
        return self.v_star_template


def _encode(params: SystemParams, a: BitVector, u: BitVector) -> BitVector:
    if a.length != params.l or u.length != params.u_bits:
        raise DimensionError(f"expected a of {params.l} and u of {params.u_bits} bits")
    inner = a if params.wiretap is None else wiretap_encode(params.wiretap, a, u)
    return ecc_encode(params.ecc, inner)


def _key_stream(params: SystemParams, key: Key, t: int) -> BitVector:
    bits = stream_bits(params.keystream, key.bits.to_array()[None, :], t * params.n)[0]
    return BitVector.from_list(bits[(t - 1) * params.n :].tolist())


def transmit(
    params: SystemParams,
    key: Key,
    a: BitVector,
    u: BitVector,
    t: int,
    *,
    x: BitVector | None = None,
) -> TransmissionRecord:
    """``y = C_ECC(C_H(a || u)) xor x``.  Passing ``x`` overrides the keystream."""
    if x is None:
        x = _key_stream(params, key, t)
    elif x.length != params.n:
        raise DimensionError(f"keystream override must have {params.n} bits")
    y = _encode(params, a, u) ^ x
    return TransmissionRecord(t=t, a=a, u=u, x=x, y=y)


def _with_noise(params: SystemParams, record: TransmissionRecord, v: BitVector, v_star: BitVector) -> TransmissionRecord:
    if v_star.length != params.n:
        raise DimensionError(f"v_star must have {params.n} bits")
    v_prime = v ^ v_star
    rec = replace(record, v=v, v_star=v_star, v_prime=v_prime, z=record.y ^ v_prime)
    _check_record(params, rec)
    return rec


def apply_channel(
    params: SystemParams, record: TransmissionRecord, v_star: BitVector, rng: np.random.Generator
) -> TransmissionRecord:
    """Sample the channel noise and set ``z = y xor v xor v_star``."""
    v = sample_noise(params.channel, params.n, rng)
    return _with_noise(params, record, v, v_star)


def _check_record(params: SystemParams, rec: TransmissionRecord) -> None:
    if rec.y != _encode(params, rec.a, rec.u) ^ rec.x:
        raise InvariantViolation(f"round {rec.t}: y != C_ECC(C_H(a||u)) xor x")
    if rec.z is not None and rec.z != rec.y ^ rec.v_prime:
        raise InvariantViolation(f"round {rec.t}: z != y xor v'")


def receive(
    params: SystemParams,
    key: Key,
    z: BitVector,
    t: int,
    a: BitVector | None = None,
    *,
    x: BitVector | None = None,
) -> tuple[BitVector | None, bool]:
    """Decrypt, bounded-distance decode, undo the coset encoding.

    Returns ``(a_hat, f_d)``.  In genie mode the flag is ``a_hat == a`` and the
    transmitted ``a`` must be supplied; in detected mode it is the decoder's
    own success signal.
    """
    if x is None:
        x = _key_stream(params, key, t)
    outcome = ecc_decode(params.ecc, z ^ x)
    a_hat = None
    if not outcome.detected_failure:
        msg = outcome.message
        a_hat = msg if params.wiretap is None else wiretap_decode(params.wiretap, msg)[0]
    if params.flag_mode == "detected":
        return a_hat, not outcome.detected_failure
    if a is None:
        raise ValueError("genie flag needs the transmitted plaintext")
    return a_hat, a_hat == a


def kpa_residual(params: SystemParams, a: BitVector, z: BitVector, t: int | None = None) -> BitVector:
    """``z xor C_ECC(C_{H,a}(a))``: ``x xor v`` for the baseline, plus the coset
    codeword ``C_ECC(C_{H,u}(u))`` once the wire-tap encoder is in place."""
    if a.length != params.l:
        raise DimensionError(f"expected {params.l} plaintext bits")
    return z ^ BitVector(int(params.a_code[a.bits]), params.n)


@dataclass(frozen=True)
class SessionArrays:
    """Packed per-round words of one session (index ``t-1``)."""

    a: np.ndarray
    u: np.ndarray
    x: np.ndarray
    v: np.ndarray
    v_star: np.ndarray
    z: np.ndarray
    f_d: np.ndarray


PlaintextSource = BitVector | Sequence[BitVector] | Callable[[int], BitVector] | None


def _plaintexts(params: SystemParams, source: PlaintextSource, tau: int, rng) -> np.ndarray:
    if source is None:
        return rng.integers(0, 1 << params.l, size=tau, dtype=np.int64)
    if isinstance(source, BitVector):
        vals = [source] * tau
    elif callable(source):
        vals = [source(t) for t in range(1, tau + 1)]
    else:
        vals = list(source)
        if len(vals) < tau:
            raise ValueError(f"plaintext source has {len(vals)} blocks, need {tau}")
    if any(v.length != params.l for v in vals[:tau]):
        raise DimensionError(f"plaintext blocks must have {params.l} bits")
    return np.array([v.bits for v in vals[:tau]], dtype=np.int64)


def draw_session(
    params: SystemParams,
    x_words: np.ndarray,
    strategy: AdversaryStrategy,
    rng: np.random.Generator,
    source: PlaintextSource = None,
) -> SessionArrays:
    """Vectorised session: draws all ``a``, then all ``u``, then all noise."""
    tau = len(x_words)
    a = _plaintexts(params, source, tau, rng)
    u = rng.integers(0, 1 << params.u_bits, size=tau, dtype=np.int64)
    v = sample_noise_words(params.channel, tau, params.n, rng)
    vs = np.array([strategy.v_star(t).bits for t in range(1, tau + 1)], dtype=np.int64)
    z = params.a_code[a] ^ params.u_code[u] ^ x_words ^ v ^ vs
    f = params.flags(z ^ x_words, a)
    return SessionArrays(a=a, u=u, x=x_words, v=v, v_star=vs, z=z, f_d=f)


def key_stream_words(params: SystemParams, key: Key, tau: int) -> np.ndarray:
    bits = stream_bits(params.keystream, key.bits.to_array()[None, :], tau * params.n)[0]
    blocks = bits.reshape(tau, params.n).astype(np.int64)
    return (blocks << np.arange(params.n, dtype=np.int64)).sum(axis=1)


def run_session(
    params: SystemParams,
    key: Key,
    tau: int,
    source: PlaintextSource = None,
    strategy: AdversaryStrategy | None = None,
    rng: np.random.Generator | None = None,
) -> list[TransmissionRecord]:
    if tau < 1:
        raise ValueError("a session needs at least one round")
    if rng is None:
        raise ValueError("run_session needs a seeded generator")
    if strategy is None:
        strategy = AdversaryStrategy.passive(params.n)
    arr = draw_session(params, key_stream_words(params, key, tau), strategy, rng, source)
    n = params.n
    records = []
    for i in range(tau):
        t = i + 1
        a = BitVector(int(arr.a[i]), params.l)
        u = BitVector(int(arr.u[i]), params.u_bits)
        x = BitVector(int(arr.x[i]), n)
        rec = transmit(params, key, a, u, t, x=x)
        rec = _with_noise(params, rec, BitVector(int(arr.v[i]), n), strategy.v_star(t))
        _, f_d = receive(params, key, rec.z, t, a, x=x)
        if f_d != bool(arr.f_d[i]):
            raise InvariantViolation(f"round {t}: table flag disagrees with the receiver")
        records.append(replace(rec, f_d=f_d))
    return records


TRACE_FIELDS = ("t", "a", "u", "x", "v", "v_star", "z", "f_d")


def write_trace(records: Sequence[TransmissionRecord], fh: io.TextIOBase) -> None:
    """One CSV row per round, vectors as bitstrings, flag as 0/1."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for r in records:
        w.writerow([r.t, r.a, r.u, r.x, r.v, r.v_star, r.z, int(bool(r.f_d))])


def read_trace(fh: io.TextIOBase) -> list[dict[str, object]]:
    rows = []
    for row in csv.DictReader(fh):
        rows.append(
            {
                "t": int(row["t"]),
                **{k: BitVector.from_str(row[k]) for k in TRACE_FIELDS[1:-1]},
                "f_d": row["f_d"] == "1",
            }
        )
    return rows
