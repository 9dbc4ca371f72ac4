"""Wire-tap (coset) encoder and linear error-correction codes.

The coset encoder maps ``[a || u]`` to ``[a || u] @ gh`` where ``gh`` has the
block layout::

    [ G1 (l x m-l) | G2 (l x l)   ]
    [ I_{m-l}      | G4 (m-l x l) ]

The bottom rows are the systematic generator ``[I | G4]`` of an inner
``(m, m-l)`` code; the default construction takes ``G1 = 0`` and ``G2 = I``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .gf2 import (
    BitMatrix,
    BitVector,
    DimensionError,
    has_zero_column,
    mat_inverse,
    mat_mul,
    null_space,
    popcount,
    rank,
    row_echelon,
    vec_mat_mul,
)

__all__ = [
    "CodeError",
    "WiretapCode",
    "LinearBlockCode",
    "DecodeOutcome",
    "WiretapValidation",
    "build_wiretap",
    "default_inner_generator",
    "wiretap_encode",
    "wiretap_decode",
    "validate_wiretap",
    "make_repetition",
    "make_hamming_7_4",
    "make_from_generator",
    "ecc_encode",
    "ecc_decode",
    "combined_generator",
]

EXHAUSTIVE_MAX_K = 16


class CodeError(ValueError):
    """Invalid code construction."""


@dataclass(frozen=True)
class WiretapCode:
    l: int
    m: int
    gh: BitMatrix
    gh_inv: BitMatrix | None

    @property
    def u_bits(self) -> int:
        return self.m - self.l

    def blocks(self) -> dict[str, BitMatrix]:
        k = self.m - self.l
        return {
            "G1": self.gh.block(0, self.l, 0, k),
            "G2": self.gh.block(0, self.l, k, self.m),
            "I": self.gh.block(self.l, self.m, 0, k),
            "G4": self.gh.block(self.l, self.m, k, self.m),
        }

    @property
    def inner_generator(self) -> BitMatrix:
        """Generator of the inner ``(m, m-l)`` code (bottom rows of ``gh``)."""
        return BitMatrix(self.gh.rows[self.l :], self.m)


@dataclass(frozen=True)
class WiretapValidation:
    invertible: bool
    secure: bool
    sparsity_gh: int
    sparsity_gh_inv: int | None


def default_inner_generator(l: int, m: int) -> BitMatrix:
    """``[I_{m-l} | G4]`` with ``G4[i, j] = 1`` iff ``i == j mod (m-l)``.

    For ``l=2, m=4`` this is the repetition layout ``[I2 | I2]``.
    """
    k = m - l
    if k < 1 or l < 0:
        raise CodeError(f"need 0 <= l < m, got l={l}, m={m}")
    rows = []
    for i in range(k):
        g4 = sum(1 << j for j in range(l) if j % k == i)
        rows.append((1 << i) | (g4 << k))
    return BitMatrix(tuple(rows), m)


def build_wiretap(l: int, inner_gen: BitMatrix) -> WiretapCode:
    m = inner_gen.ncols
    k = inner_gen.nrows
    if l < 0 or k + l != m:
        raise CodeError(f"inner generator must be (m-l) x m; got {k}x{m} with l={l}")
    if inner_gen.block(0, k, 0, k) != BitMatrix.identity(k):
        raise CodeError("inner generator is not systematic [I | G4]")
    if rank(inner_gen) != k:
        raise CodeError("inner generator is rank deficient")
    g4 = inner_gen.block(0, k, k, m)
    if l > 0 and has_zero_column(g4):
        raise CodeError("security requirement violated: G4 has an all-zero column")
    top = BitMatrix.zeros(l, k).hstack(BitMatrix.identity(l))
    gh = top.vstack(inner_gen)
    gh_inv = mat_inverse(gh)
    if gh_inv is None:
        raise CodeError("assembled wire-tap matrix is singular")
    return WiretapCode(l=l, m=m, gh=gh, gh_inv=gh_inv)


def from_matrix(l: int, gh: BitMatrix) -> WiretapCode:
    """Wrap an arbitrary ``m x m`` matrix without enforcing the requirements."""
    if gh.nrows != gh.ncols:
        raise DimensionError("wire-tap matrix must be square")
    return WiretapCode(l=l, m=gh.nrows, gh=gh, gh_inv=mat_inverse(gh))


def wiretap_encode(code: WiretapCode, a: BitVector, u: BitVector) -> BitVector:
    if a.length != code.l or u.length != code.u_bits:
        raise DimensionError(f"expected a of {code.l} and u of {code.u_bits} bits")
    return vec_mat_mul(a.concat(u), code.gh)


def wiretap_decode(code: WiretapCode, c: BitVector) -> tuple[BitVector, BitVector]:
    if c.length != code.m:
        raise DimensionError(f"expected {code.m} bits, got {c.length}")
    if code.gh_inv is None:
        raise CodeError("wire-tap matrix is not invertible")
    return vec_mat_mul(c, code.gh_inv).split(code.l)


def validate_wiretap(code: WiretapCode) -> WiretapValidation:
    inv = mat_inverse(code.gh)
    blocks = code.blocks()
    # G4 only mixes u into a when the bottom rows have the [I | G4] layout
    secure = (
        code.l > 0
        and code.u_bits > 0
        and blocks["I"] == BitMatrix.identity(code.u_bits)
        and not has_zero_column(blocks["G4"])
    )
    return WiretapValidation(
        invertible=inv is not None,
        secure=secure,
        sparsity_gh=code.gh.count_ones(),
        sparsity_gh_inv=None if inv is None else inv.count_ones(),
    )


@dataclass(frozen=True)
class DecodeOutcome:
    message: BitVector | None
    detected_failure: bool


@dataclass(frozen=True)
class LinearBlockCode:
    """Binary linear code with generator ``gen`` (k x n).

    When ``component`` is set the code is the direct sum of ``k / component.k``
    copies of it on consecutive segments, and decoding runs per segment.
    """

    gen: BitMatrix
    min_dist: int
    name: str = "linear"
    component: "LinearBlockCode | None" = None

    def segments(self) -> int:
        return 1 if self.component is None else self.k // self.component.k

    @property
    def k(self) -> int:
        return self.gen.nrows

    @property
    def n(self) -> int:
        return self.gen.ncols

    @property
    def correct_radius(self) -> int:
        return (self.min_dist - 1) // 2

    t = correct_radius

    def codewords(self) -> list[int]:
        return [vec_mat_mul(BitVector(i, self.k), self.gen).bits for i in range(1 << self.k)]

    @cached_property
    def _parity(self) -> BitMatrix:
        return null_space(self.gen)

    @cached_property
    def _info_set(self) -> tuple[tuple[int, ...], BitMatrix]:
        # message = codeword[J] @ inv(gen[:, J]) for a set J of pivot columns
        _, pivots = row_echelon(self.gen)
        sub = BitMatrix(
            tuple(sum(((r >> c) & 1) << i for i, c in enumerate(pivots)) for r in self.gen.rows),
            len(pivots),
        )
        inv = mat_inverse(sub)
        assert inv is not None
        return tuple(pivots), inv

    def syndrome(self, word: int) -> int:
        s = 0
        for j, h in enumerate(self._parity.rows):
            s |= (popcount(word & h) & 1) << j
        return s

    @cached_property
    def _coset_leaders(self) -> dict[int, int]:
        table: dict[int, int] = {}
        for w in range(self.correct_radius + 1):
            for pos in itertools.combinations(range(self.n), w):
                e = sum(1 << p for p in pos)
                s = self.syndrome(e)
                if s in table:
                    raise CodeError(f"{self.name}: radius {self.correct_radius} exceeds (d-1)/2")
                table[s] = e
        return table

    def message_of(self, codeword: int) -> int:
        pivots, inv = self._info_set
        packed = sum(((codeword >> c) & 1) << i for i, c in enumerate(pivots))
        return vec_mat_mul(BitVector(packed, self.k), inv).bits

    def decode_table(self) -> np.ndarray:
        """Message index for every received word, ``-1`` on decoding failure.

        Vectorised version of :func:`ecc_decode` for ``n <= 20``.
        """
        if self.n > 20:
            raise CodeError(f"decode table needs n <= 20, got {self.n}")
        words = np.arange(1 << self.n, dtype=np.int64)
        if self.component is not None:
            c = self.component
            sub = c.decode_table()
            msg = np.zeros_like(words)
            for i in range(self.segments()):
                part = sub[(words >> (i * c.n)) & ((1 << c.n) - 1)]
                msg = np.where((msg < 0) | (part < 0), -1, msg | (part << (i * c.k)))
            return msg
        synd = np.zeros_like(words)
        for j, h in enumerate(self._parity.rows):
            synd |= (np.bitwise_count(words & h).astype(np.int64) & 1) << j
        leaders = np.full(1 << self._parity.nrows, -1, dtype=np.int64)
        for s, e in self._coset_leaders.items():
            leaders[s] = e
        err = leaders[synd]
        ok = err >= 0
        corrected = np.where(ok, words ^ err, 0)
        pivots, inv = self._info_set
        msg = np.zeros_like(words)
        for i, c in enumerate(pivots):
            msg ^= np.where((corrected >> c) & 1, inv.rows[i], 0)
        return np.where(ok, msg, -1)


def make_from_generator(gen: BitMatrix, name: str = "matrix", min_dist: int | None = None) -> LinearBlockCode:
    if rank(gen) != gen.nrows:
        raise CodeError("generator is not full rank")
    if min_dist is None:
        if gen.nrows > EXHAUSTIVE_MAX_K:
            raise CodeError(f"min distance must be given for k > {EXHAUSTIVE_MAX_K}")
        code = LinearBlockCode(gen, 1, name)
        min_dist = min(popcount(c) for c in code.codewords()[1:]) if gen.nrows else gen.ncols
    return LinearBlockCode(gen, min_dist, name)


def make_repetition(k: int, r: int) -> LinearBlockCode:
    """Each message bit repeated ``r`` times in a contiguous block."""
    if r < 3 or r % 2 == 0:
        raise CodeError(f"repeat factor must be odd and >= 3, got {r}")
    if k < 1:
        raise CodeError("k must be positive")
    block = (1 << r) - 1
    rows = tuple(block << (i * r) for i in range(k))
    single = LinearBlockCode(BitMatrix((block,), r), r, f"rep:k=1,r={r}")
    if k == 1:
        return single
    return LinearBlockCode(BitMatrix(rows, k * r), r, f"rep:k={k},r={r}", single)


def make_hamming_7_4() -> LinearBlockCode:
    # systematic [I4 | P]
    gen = BitMatrix.from_rows(
        [
            [1, 0, 0, 0, 1, 1, 0],
            [0, 1, 0, 0, 1, 0, 1],
            [0, 0, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
        ]
    )
    return LinearBlockCode(gen, 3, "hamming74")


def ecc_encode(code: LinearBlockCode, msg: BitVector) -> BitVector:
    if msg.length != code.k:
        raise DimensionError(f"expected {code.k} message bits, got {msg.length}")
    return vec_mat_mul(msg, code.gen)


def ecc_decode(code: LinearBlockCode, word: BitVector) -> DecodeOutcome:
    """Bounded-distance decoding with radius ``t``; anything farther fails.

    Direct-sum codes (repetition with k > 1) are decoded segment by segment,
    so up to ``t`` errors in every segment are corrected.
    """
    if word.length != code.n:
        raise DimensionError(f"expected {code.n} bits, got {word.length}")
    if code.component is not None:
        c = code.component
        msg = 0
        for i in range(code.segments()):
            out = ecc_decode(c, BitVector((word.bits >> (i * c.n)) & ((1 << c.n) - 1), c.n))
            if out.detected_failure:
                return DecodeOutcome(None, True)
            msg |= out.message.bits << (i * c.k)
        return DecodeOutcome(BitVector(msg, code.k), False)
    err = code._coset_leaders.get(code.syndrome(word.bits))
    if err is None:
        return DecodeOutcome(None, True)
    return DecodeOutcome(BitVector(code.message_of(word.bits ^ err), code.k), False)


def combined_generator(w: WiretapCode, e: LinearBlockCode) -> BitMatrix:
    if e.k != w.m:
        raise DimensionError(f"ecc message length {e.k} != wire-tap block length {w.m}")
    return mat_mul(w.gh, e.gen)
