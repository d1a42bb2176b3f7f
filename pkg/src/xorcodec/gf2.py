"""Bit-packed linear algebra over GF(2).

Vectors are stored as Python ints: bit ``i`` of the int is position ``i``
of the vector (LSB-first). Matrices are tuples of such row ints.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import RejectedInputError


def _mask(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class BitVector:
    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise RejectedInputError(f"negative length {self.length}")
        if self.bits < 0 or self.bits >> self.length:
            raise RejectedInputError("bits set beyond vector length")

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(length, 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitVector:
        value = 0
        n = 0
        for n, b in enumerate(bits, start=1):
            if b:
                value |= 1 << (n - 1)
        return cls(n, value)

    @classmethod
    def from_str(cls, text: str) -> BitVector:
        """Parse ``"1011"``; the first character is position 0."""
        if set(text) - {"0", "1"}:
            raise RejectedInputError(f"not a bit string: {text!r}")
        return cls.from_bits(c == "1" for c in text)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __iter__(self):
        for i in range(self.length):
            yield (self.bits >> i) & 1

    def __xor__(self, other: BitVector) -> BitVector:
        if other.length != self.length:
            raise RejectedInputError("length mismatch")
        return BitVector(self.length, self.bits ^ other.bits)

    def __and__(self, other: BitVector) -> BitVector:
        if other.length != self.length:
            raise RejectedInputError("length mismatch")
        return BitVector(self.length, self.bits & other.bits)

    def popcount(self) -> int:
        return self.bits.bit_count()

    def flip(self, i: int) -> BitVector:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return BitVector(self.length, self.bits ^ (1 << i))

    def positions(self) -> list[int]:
        """Indices of the set bits, ascending."""
        out = []
        x = self.bits
        while x:
            low = x & -x
            out.append(low.bit_length() - 1)
            x ^= low
        return out

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self)


@dataclass(frozen=True)
class BitMatrix:
    rows: int
    cols: int
    row_bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.row_bits) != self.rows:
            raise RejectedInputError("row count does not match row data")
        limit = 1 << self.cols
        for r in self.row_bits:
            if r < 0 or r >= limit:
                raise RejectedInputError("row wider than column count")

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector | str]) -> BitMatrix:
        vecs = [BitVector.from_str(r) if isinstance(r, str) else r for r in rows]
        if not vecs:
            raise RejectedInputError("cannot infer width of an empty matrix")
        cols = vecs[0].length
        if any(v.length != cols for v in vecs):
            raise RejectedInputError("ragged rows")
        return cls(len(vecs), cols, tuple(v.bits for v in vecs))

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(n, n, tuple(1 << i for i in range(n)))

    @property
    def row_data(self) -> tuple[BitVector, ...]:
        return tuple(BitVector(self.cols, r) for r in self.row_bits)

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.row_bits[i])

    def column_bits(self, j: int) -> int:
        """Column ``j`` as an int with bit ``i`` = entry (i, j)."""
        out = 0
        for i, r in enumerate(self.row_bits):
            if (r >> j) & 1:
                out |= 1 << i
        return out

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not 0 <= j < self.cols:
            raise IndexError(j)
        return (self.row_bits[i] >> j) & 1


def matvec_bits(row_bits: Sequence[int], v: int) -> int:
    """Raw-int matrix-vector product: bit ``i`` is parity(row_i & v)."""
    out = 0
    for i, r in enumerate(row_bits):
        if (r & v).bit_count() & 1:
            out |= 1 << i
    return out


def matvec(m: BitMatrix, v: BitVector) -> BitVector:
    if v.length != m.cols:
        raise RejectedInputError(f"vector length {v.length} != matrix cols {m.cols}")
    return BitVector(m.rows, matvec_bits(m.row_bits, v.bits))


class RrefState:
    """Incrementally maintained reduced row-echelon form of ``[A | b]``.

    Each stored row is an int of ``n_vars + 1`` bits; bit ``n_vars`` holds the
    right-hand side. Rows are kept fully reduced: a pivot column is zero in
    every other row, so a new equation is reduced with one pass over the
    pivots and a solve is a read-off of the right-hand sides.
    """

    def __init__(self, n_vars: int):
        if n_vars < 0:
            raise RejectedInputError(f"negative variable count {n_vars}")
        self.n_vars = n_vars
        self._cols: list[int] = []
        self._rows: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._cols)

    @property
    def pivot_rows(self) -> list[tuple[int, BitVector]]:
        width = self.n_vars + 1
        return [(c, BitVector(width, r)) for c, r in zip(self._cols, self._rows)]

    def copy(self) -> RrefState:
        new = RrefState(self.n_vars)
        new._cols = list(self._cols)
        new._rows = list(self._rows)
        return new

    def append_bits(self, row: int, rhs: int) -> bool:
        """Fast path of :meth:`append` on a raw int row; no validation."""
        r = row | ((rhs & 1) << self.n_vars)
        for c, p in zip(self._cols, self._rows):
            if (r >> c) & 1:
                r ^= p
        var = r & _mask(self.n_vars)
        if not var:
            return not r
        col = (var & -var).bit_length() - 1
        rows = self._rows
        for k, p in enumerate(rows):
            if (p >> col) & 1:
                rows[k] = p ^ r
        at = bisect.bisect_left(self._cols, col)
        self._cols.insert(at, col)
        rows.insert(at, r)
        return True

    def append(self, row: BitVector, rhs: int) -> bool:
        """Add the equation ``row . x = rhs``.

        Returns False, leaving the state untouched, when the equation
        contradicts the ones already stored. A redundant equation returns
        True without changing the rank.
        """
        if row.length != self.n_vars:
            raise RejectedInputError(f"row length {row.length} != n_vars {self.n_vars}")
        return self.append_bits(row.bits, rhs)

    def solve_bits(self) -> int:
        x = 0
        for c, r in zip(self._cols, self._rows):
            if (r >> self.n_vars) & 1:
                x |= 1 << c
        return x

    def solve(self) -> BitVector:
        """A solution of every stored equation, with free variables at 0."""
        return BitVector(self.n_vars, self.solve_bits())


def rref_append(state: RrefState, row: BitVector, rhs: int) -> tuple[RrefState, bool]:
    """Functional form of :meth:`RrefState.append`; ``state`` is not modified."""
    new = state.copy()
    ok = new.append(row, rhs)
    return (new if ok else state), ok


def solve(state: RrefState) -> BitVector:
    return state.solve()
