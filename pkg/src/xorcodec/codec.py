"""Word-level encryption through a random XOR-gate network.

A word of ``n_out`` bits, some of which are don't-care, is represented by an
``n_in``-bit seed vector ``x`` such that ``M @ x`` agrees with the word on as
many care bits as possible. The remaining care bits are listed as patch
positions and flipped by the decoder.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, CorruptStreamError, RejectedInputError
from .gf2 import BitMatrix, BitVector, RrefState, matvec_bits
from .prng import XorShift64Star

EXHAUSTIVE_LIMIT = 24


@dataclass(frozen=True)
class XorNetwork:
    n_out: int
    n_in: int
    matrix: BitMatrix
    seed: int | None = None

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < self.n_in:
            raise ConfigError(f"need 1 <= n_in <= n_out, got n_in={self.n_in}, n_out={self.n_out}")
        if (self.matrix.rows, self.matrix.cols) != (self.n_out, self.n_in):
            raise ConfigError("matrix shape does not match (n_out, n_in)")

    @classmethod
    def from_matrix(cls, matrix: BitMatrix) -> XorNetwork:
        """Wrap a hand-built matrix. Such a network has no seed and cannot be serialized."""
        return cls(matrix.rows, matrix.cols, matrix, None)

    @property
    def rows(self) -> tuple[int, ...]:
        return self.matrix.row_bits


def make_network(n_out: int, n_in: int, seed: int) -> XorNetwork:
    """Random network; entry (i, j) is the ``i * n_in + j``-th bit of the generator."""
    if n_in < 1 or n_out < n_in:
        raise ConfigError(f"need 1 <= n_in <= n_out, got n_in={n_in}, n_out={n_out}")
    if not 0 <= seed < 1 << 64:
        raise ConfigError(f"seed must fit in 64 bits, got {seed}")
    rng = XorShift64Star(seed)
    rows = tuple(rng.bits(n_in) for _ in range(n_out))
    return XorNetwork(n_out, n_in, BitMatrix(n_out, n_in, rows), seed)


@dataclass(frozen=True)
class MaskedWord:
    """``n_out`` output bits plus a care mask (1 = care, 0 = don't-care)."""

    n_out: int
    values: BitVector
    care_mask: BitVector

    def __post_init__(self):
        if self.values.length != self.n_out or self.care_mask.length != self.n_out:
            raise RejectedInputError("values/care_mask length differs from n_out")
        if self.values.bits & ~self.care_mask.bits:
            raise RejectedInputError("don't-care value bits must be 0")

    @classmethod
    def from_bits(cls, n_out: int, values: int, care: int) -> MaskedWord:
        """Build from raw ints, zeroing value bits outside ``care``."""
        return cls(n_out, BitVector(n_out, values & care), BitVector(n_out, care))

    @classmethod
    def from_str(cls, text: str) -> MaskedWord:
        """``"1x0x"``: position 0 first, ``x`` marks a don't-care."""
        values = care = 0
        for i, c in enumerate(text):
            if c == "x":
                continue
            if c not in "01":
                raise RejectedInputError(f"bad symbol {c!r}")
            care |= 1 << i
            if c == "1":
                values |= 1 << i
        return cls.from_bits(len(text), values, care)

    @property
    def care_count(self) -> int:
        return self.care_mask.bits.bit_count()

    def matches(self, output: BitVector) -> bool:
        """True if ``output`` agrees with this word on every care bit."""
        return not ((output.bits ^ self.values.bits) & self.care_mask.bits)


@dataclass(frozen=True)
class EncodedWord:
    seed_vector: BitVector
    d_patch: tuple[int, ...] = ()

    def __post_init__(self):
        prev = -1
        for p in self.d_patch:
            if p <= prev:
                raise RejectedInputError("patch positions must be strictly increasing")
            prev = p

    @property
    def n_patch(self) -> int:
        return len(self.d_patch)


def _bit_positions(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def _check_dims(net: XorNetwork, word: MaskedWord) -> None:
    if word.n_out != net.n_out:
        raise RejectedInputError(f"word has {word.n_out} bits, network outputs {net.n_out}")


def encode_word(net: XorNetwork, word: MaskedWord) -> EncodedWord:
    """Greedy patch search.

    Care equations are admitted in ascending position order; an equation
    that conflicts with those already admitted is dropped. Free variables of
    the admitted system are set to 0, and every care bit the resulting
    output still gets wrong becomes a patch.
    """
    _check_dims(net, word)
    rows = net.matrix.row_bits
    values = word.values.bits
    care = word.care_mask.bits
    state = RrefState(net.n_in)
    x = care
    while x:
        low = x & -x
        i = low.bit_length() - 1
        state.append_bits(rows[i], (values >> i) & 1)
        x ^= low
    seed = state.solve_bits()
    wrong = (matvec_bits(rows, seed) ^ values) & care
    return EncodedWord(BitVector(net.n_in, seed), tuple(_bit_positions(wrong)))


def _split64(x: int, chunks: int) -> np.ndarray:
    return np.array([(x >> (64 * c)) & 0xFFFFFFFFFFFFFFFF for c in range(chunks)], dtype=np.uint64)


@functools.lru_cache(maxsize=4)
def _output_table(net: XorNetwork) -> np.ndarray:
    """``table[s]`` = network output for seed ``s``, as 64-bit chunks."""
    chunks = (net.n_out + 63) // 64
    table = np.zeros((1 << net.n_in, chunks), dtype=np.uint64)
    for j in range(net.n_in):
        col = _split64(net.matrix.column_bits(j), chunks)
        half = 1 << j
        np.bitwise_xor(table[:half], col, out=table[half : 2 * half])
    return table


def encode_word_exhaustive(
    net: XorNetwork, word: MaskedWord, limit: int = EXHAUSTIVE_LIMIT
) -> EncodedWord:
    """Seed vector with the fewest patches, found by trying all ``2**n_in`` seeds.

    Ties go to the numerically smallest seed (bit 0 = first input).
    """
    _check_dims(net, word)
    if net.n_in > limit:
        raise ConfigError(f"n_in={net.n_in} exceeds exhaustive limit {limit}")
    values = word.values.bits
    care = word.care_mask.bits
    if care:
        table = _output_table(net)
        chunks = table.shape[1]
        v = _split64(values, chunks)
        c = _split64(care, chunks)
        best_seed, best_count = 0, None
        step = 1 << 18
        for lo in range(0, table.shape[0], step):
            part = table[lo : lo + step]
            counts = np.bitwise_count((part ^ v) & c).sum(axis=1, dtype=np.int64)
            k = int(np.argmin(counts))
            if best_count is None or counts[k] < best_count:
                best_seed, best_count = lo + k, int(counts[k])
                if best_count == 0:
                    break
    else:
        best_seed = 0
    wrong = (matvec_bits(net.matrix.row_bits, best_seed) ^ values) & care
    return EncodedWord(BitVector(net.n_in, best_seed), tuple(_bit_positions(wrong)))


def decode_word(net: XorNetwork, enc: EncodedWord) -> BitVector:
    if enc.seed_vector.length != net.n_in:
        raise RejectedInputError(f"seed vector has {enc.seed_vector.length} bits, network takes {net.n_in}")
    out = matvec_bits(net.matrix.row_bits, enc.seed_vector.bits)
    for p in enc.d_patch:
        if not 0 <= p < net.n_out:
            raise CorruptStreamError(f"patch position {p} outside word of {net.n_out} bits")
        out ^= 1 << p
    return BitVector(net.n_out, out)


def encode_words(
    net: XorNetwork, words: Sequence[MaskedWord], exhaustive: bool = False
) -> list[EncodedWord]:
    if exhaustive:
        return [encode_word_exhaustive(net, w) for w in words]
    return [encode_word(net, w) for w in words]
