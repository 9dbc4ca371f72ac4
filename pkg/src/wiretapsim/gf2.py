"""Dense linear algebra over GF(2) on packed integer words.

Vectors are row vectors.  Element ``i`` of a vector lives in bit ``i`` of a
Python int (least significant bit first), so the string ``"1101"`` packs to
``0b1011``.  Matrices are tuples of packed rows.  Every constructor masks
bits beyond the declared length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BitVector",
    "BitMatrix",
    "DimensionError",
    "mat_mul",
    "vec_mat_mul",
    "mat_inverse",
    "rank",
    "has_zero_column",
    "parse_matrix",
    "popcount",
]


class DimensionError(ValueError):
    """Operand shapes do not agree."""


def popcount(x: int) -> int:
    return int(x).bit_count()


def _mask(length: int) -> int:
    return (1 << length) - 1


@dataclass(frozen=True)
class BitVector:
    bits: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        object.__setattr__(self, "bits", int(self.bits) & _mask(self.length))

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls(_mask(length), length)

    @classmethod
    def unit(cls, i: int, length: int) -> "BitVector":
        if not 0 <= i < length:
            raise IndexError(i)
        return cls(1 << i, length)

    @classmethod
    def from_list(cls, values: Iterable[int]) -> "BitVector":
        values = list(values)
        word = 0
        for i, b in enumerate(values):
            if b not in (0, 1, True, False):
                raise ValueError(f"entry {b!r} is not a bit")
            if b:
                word |= 1 << i
        return cls(word, len(values))

    @classmethod
    def from_str(cls, text: str) -> "BitVector":
        text = text.strip()
        if any(c not in "01" for c in text):
            raise ValueError(f"malformed bitstring {text!r}")
        return cls.from_list(int(c) for c in text)

    def to_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.length)]

    def to_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=np.uint8)

    def weight(self) -> int:
        return popcount(self.bits)

    def concat(self, other: "BitVector") -> "BitVector":
        """``[self || other]``."""
        return BitVector(self.bits | (other.bits << self.length), self.length + other.length)

    def split(self, at: int) -> tuple["BitVector", "BitVector"]:
        if not 0 <= at <= self.length:
            raise DimensionError(f"cannot split length {self.length} at {at}")
        return BitVector(self.bits, at), BitVector(self.bits >> at, self.length - at)

    def __getitem__(self, i: int) -> int:
        if not -self.length <= i < self.length:
            raise IndexError(i)
        return (self.bits >> (i % self.length)) & 1

    def __len__(self) -> int:
        return self.length

    def __xor__(self, other: "BitVector") -> "BitVector":
        if not isinstance(other, BitVector):
            return NotImplemented
        if other.length != self.length:
            raise DimensionError(f"xor of lengths {self.length} and {other.length}")
        return BitVector(self.bits ^ other.bits, self.length)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.to_list())

    def __repr__(self) -> str:
        return f"BitVector('{self}')"


@dataclass(frozen=True)
class BitMatrix:
    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        m = _mask(self.ncols)
        object.__setattr__(self, "rows", tuple(int(r) & m for r in self.rows))

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> "BitMatrix":
        vecs = [BitVector.from_list(r) for r in rows]
        if ncols is None:
            if not vecs:
                raise ValueError("ncols required for an empty matrix")
            ncols = vecs[0].length
        if any(v.length != ncols for v in vecs):
            raise DimensionError("ragged rows")
        return cls(tuple(v.bits for v in vecs), ncols)

    @classmethod
    def from_vectors(cls, vecs: Sequence[BitVector], ncols: int | None = None) -> "BitMatrix":
        if ncols is None:
            ncols = vecs[0].length
        if any(v.length != ncols for v in vecs):
            raise DimensionError("ragged rows")
        return cls(tuple(v.bits for v in vecs), ncols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls((0,) * nrows, ncols)

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise DimensionError("expected a 2-D array")
        return cls.from_rows((arr.astype(np.int64) & 1).tolist(), arr.shape[1])

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.ncols)

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.ncols):
                out[i, j] = (r >> j) & 1
        return out

    def to_list(self) -> list[list[int]]:
        return self.to_array().tolist()

    def transpose(self) -> "BitMatrix":
        cols = []
        for j in range(self.ncols):
            word = 0
            for i, r in enumerate(self.rows):
                word |= ((r >> j) & 1) << i
            cols.append(word)
        return BitMatrix(tuple(cols), self.nrows)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "BitMatrix":
        """Sub-matrix ``[r0:r1, c0:c1]``."""
        return BitMatrix(tuple(r >> c0 for r in self.rows[r0:r1]), c1 - c0)

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.nrows != self.nrows:
            raise DimensionError("hstack needs equal row counts")
        return BitMatrix(
            tuple(a | (b << self.ncols) for a, b in zip(self.rows, other.rows)),
            self.ncols + other.ncols,
        )

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.ncols != self.ncols:
            raise DimensionError("vstack needs equal column counts")
        return BitMatrix(self.rows + other.rows, self.ncols)

    def count_ones(self) -> int:
        return sum(popcount(r) for r in self.rows)

    def to_literal(self) -> str:
        return ";".join(str(self.row(i)) for i in range(self.nrows))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return mat_mul(self, other)

    def __str__(self) -> str:
        return "\n".join(str(self.row(i)) for i in range(self.nrows))


def vec_mat_mul(v: BitVector, a: BitMatrix) -> BitVector:
    if v.length != a.nrows:
        raise DimensionError(f"vector of length {v.length} times {a.nrows}x{a.ncols} matrix")
    return BitVector(_combine_rows(v.bits, a.rows), a.ncols)


def _combine_rows(word: int, rows: Sequence[int]) -> int:
    acc = 0
    i = 0
    while word:
        if word & 1:
            acc ^= rows[i]
        word >>= 1
        i += 1
    return acc


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.ncols != b.nrows:
        raise DimensionError(f"{a.nrows}x{a.ncols} times {b.nrows}x{b.ncols}")
    return BitMatrix(tuple(_combine_rows(r, b.rows) for r in a.rows), b.ncols)


def mat_inverse(a: BitMatrix) -> BitMatrix | None:
    """Gauss-Jordan inverse, or ``None`` when ``a`` is singular.

    The pivot for each column is the lowest-index row at or below the current
    position with a one in that column.
    """
    n = a.nrows
    if a.ncols != n:
        raise DimensionError(f"cannot invert a {a.nrows}x{a.ncols} matrix")
    left = list(a.rows)
    right = [1 << i for i in range(n)]
    for col in range(n):
        bit = 1 << col
        pivot = next((r for r in range(col, n) if left[r] & bit), None)
        if pivot is None:
            return None
        if pivot != col:
            left[col], left[pivot] = left[pivot], left[col]
            right[col], right[pivot] = right[pivot], right[col]
        for r in range(n):
            if r != col and left[r] & bit:
                left[r] ^= left[col]
                right[r] ^= right[col]
    return BitMatrix(tuple(right), n)


def row_echelon(a: BitMatrix) -> tuple[list[int], list[int]]:
    """Reduced row echelon rows (non-zero only) and their pivot columns."""
    rows = list(a.rows)
    pivots: list[int] = []
    r = 0
    for col in range(a.ncols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(a: BitMatrix) -> int:
    return len(row_echelon(a)[1])


def null_space(a: BitMatrix) -> BitMatrix:
    """Basis (as rows) of ``{h : a @ h^T = 0}``."""
    rref, pivots = row_echelon(a)
    free = [c for c in range(a.ncols) if c not in pivots]
    basis = []
    for f in free:
        h = 1 << f
        for row, p in zip(rref, pivots):
            if (row >> f) & 1:
                h |= 1 << p
        basis.append(h)
    return BitMatrix(tuple(basis), a.ncols)


def has_zero_column(a: BitMatrix) -> bool:
    acc = 0
    for r in a.rows:
        acc |= r
    return acc != _mask(a.ncols)


def parse_matrix(text: str) -> BitMatrix:
    """Parse ``"0010;0001;1010;0101"`` (``;`` or newline separated rows)."""
    parts = [p.strip() for p in text.replace("\n", ";").split(";")]
    parts = [p for p in parts if p]
    if not parts:
        raise ValueError("empty matrix literal")
    try:
        vecs = [BitVector.from_str(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"malformed matrix literal {text!r}: {exc}") from None
    if len({v.length for v in vecs}) != 1:
        raise ValueError(f"malformed matrix literal {text!r}: ragged rows")
    return BitMatrix.from_vectors(vecs)
