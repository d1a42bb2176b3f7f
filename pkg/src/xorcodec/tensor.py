"""Whole-matrix pipeline: bit-planes, word streams, stats and file formats.

An ``n_q``-bit quantized matrix is split into ``n_q`` bit-planes. Each plane
is flattened row-major and cut into words of ``n_out`` bits (the last word
padded with don't-cares), and every word is encoded independently. Words
are grouped into blocks of ``block_size``; each block stores the bit width
of its patch-count field.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bitstream import BitReader, BitWriter
from .codec import (
    EncodedWord,
    MaskedWord,
    XorNetwork,
    decode_word,
    encode_words,
    make_network,
)
from .errors import ConfigError, CorruptStreamError, RejectedInputError
from .gf2 import BitVector

DEFAULT_BLOCK_SIZE = 64

QMAT_MAGIC = b"QMAT"
QMAT_VERSION = 1
_QMAT_HEADER = struct.Struct("<4sBIIB")

XQZ_MAGIC = b"XQZ1"
_XQZ_HEADER = struct.Struct("<4sIIBHHIQI")
XQZ_HEADER_BYTES = _XQZ_HEADER.size


def position_bits(n_out: int) -> int:
    """Bits per patch position, ``ceil(lg n_out)``."""
    return (n_out - 1).bit_length()


def count_width(max_count: int) -> int:
    """Bits needed to store values ``0..max_count``, i.e. ``ceil(lg(max + 1))``."""
    return max_count.bit_length()


@dataclass(frozen=True)
class QuantizedMatrix:
    m: int
    n: int
    n_q: int
    prune_mask: BitVector
    planes: tuple[BitVector, ...]

    def __post_init__(self):
        size = self.m * self.n
        if self.m < 0 or self.n < 0 or self.n_q < 1:
            raise RejectedInputError(f"bad shape m={self.m} n={self.n} n_q={self.n_q}")
        if self.prune_mask.length != size:
            raise RejectedInputError("prune mask length != m*n")
        if len(self.planes) != self.n_q:
            raise RejectedInputError(f"expected {self.n_q} planes, got {len(self.planes)}")
        for p in self.planes:
            if p.length != size:
                raise RejectedInputError("plane length != m*n")
            if p.bits & ~self.prune_mask.bits:
                raise RejectedInputError("plane has bits set at pruned positions")

    @classmethod
    def from_arrays(cls, weights, mask, n_q: int) -> QuantizedMatrix:
        """Build from an integer weight array (codes ``0..2**n_q - 1``) and a keep-mask.

        Weights at pruned positions are discarded.
        """
        w = np.asarray(weights, dtype=np.int64)
        k = np.asarray(mask, dtype=bool)
        if w.ndim != 2 or w.shape != k.shape:
            raise RejectedInputError("weights and mask must be 2-D arrays of equal shape")
        if w.size and (w.min() < 0 or w.max() >= 1 << n_q):
            raise RejectedInputError(f"weights outside 0..{(1 << n_q) - 1}")
        m, n = w.shape
        mask_bits = _pack_bool(k.ravel())
        planes = tuple(
            BitVector(m * n, _pack_bool(((w.ravel() >> i) & 1).astype(bool)) & mask_bits)
            for i in range(n_q)
        )
        return cls(m, n, n_q, BitVector(m * n, mask_bits), planes)

    def weights(self) -> np.ndarray:
        """Integer codes, 0 at pruned positions."""
        size = self.m * self.n
        out = np.zeros(size, dtype=np.int64)
        for i, p in enumerate(self.planes):
            out |= _unpack_bool(p.bits, size).astype(np.int64) << i
        return out.reshape(self.m, self.n)

    def mask(self) -> np.ndarray:
        return _unpack_bool(self.prune_mask.bits, self.m * self.n).reshape(self.m, self.n)

    @property
    def sparsity(self) -> float:
        size = self.m * self.n
        return 1.0 - self.prune_mask.popcount() / size if size else 0.0


def _pack_bool(flat: np.ndarray) -> int:
    return int.from_bytes(np.packbits(flat.astype(bool), bitorder="little").tobytes(), "little")


def _unpack_bool(bits: int, size: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little", count=size).astype(bool)


def _chunks(bits: int, size: int, width: int) -> list[int]:
    """Cut a ``size``-bit int into consecutive ``width``-bit pieces, LSB-first."""
    count = -(-size // width)
    reader = BitReader(bits.to_bytes((count * width + 7) // 8, "little"))
    return [reader.read(width) for _ in range(count)]


def words_per_plane(m: int, n: int, n_out: int) -> int:
    return -(-(m * n) // n_out)


def slice_words(qm: QuantizedMatrix, n_out: int) -> list[MaskedWord]:
    """All words of all planes, plane-major."""
    if n_out < 1:
        raise ConfigError(f"n_out must be >= 1, got {n_out}")
    size = qm.m * qm.n
    if size == 0:
        return []
    cares = _chunks(qm.prune_mask.bits, size, n_out)
    words = []
    for plane in qm.planes:
        for v, c in zip(_chunks(plane.bits, size, n_out), cares):
            words.append(MaskedWord.from_bits(n_out, v, c))
    return words


def assign_block_widths(p: Sequence[int], block_size: int) -> list[int]:
    """Patch-count field width for each run of ``block_size`` words."""
    if block_size < 1:
        raise ConfigError(f"block_size must be >= 1, got {block_size}")
    return [
        count_width(max(p[i : i + block_size]))
        for i in range(0, len(p), block_size)
    ]


@dataclass
class CompressedTensor:
    m: int
    n: int
    n_q: int
    n_in: int
    n_out: int
    block_size: int
    network_seed: int | None
    words: list[EncodedWord] = field(default_factory=list)
    widths: list[int] = field(default_factory=list)

    @property
    def l(self) -> int:
        return words_per_plane(self.m, self.n, self.n_out)

    @property
    def patch_counts(self) -> list[int]:
        return [w.n_patch for w in self.words]

    def blocks(self):
        """Yield ``(width_bits, words)`` per block."""
        for k, width in enumerate(self.widths):
            yield width, self.words[k * self.block_size : (k + 1) * self.block_size]

    def network(self) -> XorNetwork:
        if self.network_seed is None:
            raise ConfigError("tensor was encoded with a seedless network")
        return make_network(self.n_out, self.n_in, self.network_seed)


def _encode_chunk(args):
    net, words, exhaustive = args
    return encode_words(net, words, exhaustive)


def encode_tensor(
    qm: QuantizedMatrix,
    net: XorNetwork,
    block_size: int = DEFAULT_BLOCK_SIZE,
    *,
    exhaustive: bool = False,
    workers: int = 1,
) -> CompressedTensor:
    if block_size < 1:
        raise ConfigError(f"block_size must be >= 1, got {block_size}")
    words = slice_words(qm, net.n_out)
    if workers > 1 and len(words) > 1:
        step = -(-len(words) // workers)
        jobs = [(net, words[i : i + step], exhaustive) for i in range(0, len(words), step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            encoded = [e for part in pool.map(_encode_chunk, jobs) for e in part]
    else:
        encoded = encode_words(net, words, exhaustive)
    widths = assign_block_widths([e.n_patch for e in encoded], block_size)
    return CompressedTensor(
        qm.m, qm.n, qm.n_q, net.n_in, net.n_out, block_size, net.seed, encoded, widths
    )


def decode_tensor(
    ct: CompressedTensor,
    prune_mask: BitVector | None = None,
    net: XorNetwork | None = None,
) -> QuantizedMatrix:
    """Reconstruct the planes; positions outside ``prune_mask`` are zeroed.

    Without a mask every position is kept, so don't-care positions come back
    with whatever the network produced there.
    """
    size = ct.m * ct.n
    if prune_mask is None:
        prune_mask = BitVector(size, (1 << size) - 1)
    elif prune_mask.length != size:
        raise RejectedInputError(f"prune mask has {prune_mask.length} bits, tensor has {size}")
    if net is None:
        net = ct.network()
    elif (net.n_out, net.n_in) != (ct.n_out, ct.n_in):
        raise CorruptStreamError("network shape disagrees with tensor header")
    l = ct.l
    if len(ct.words) != l * ct.n_q:
        raise CorruptStreamError(f"expected {l * ct.n_q} words, found {len(ct.words)}")
    planes = []
    for q in range(ct.n_q):
        w = BitWriter()
        for enc in ct.words[q * l : (q + 1) * l]:
            w.write(decode_word(net, enc).bits, ct.n_out)
        bits = int.from_bytes(w.getvalue(), "little") & ((1 << size) - 1)
        planes.append(BitVector(size, bits & prune_mask.bits))
    return QuantizedMatrix(ct.m, ct.n, ct.n_q, prune_mask, tuple(planes))


def patch_trace(ct: CompressedTensor) -> list[int]:
    """Per-word patch counts in stream order, as consumed by the simulator."""
    return ct.patch_counts


@dataclass(frozen=True)
class CompressionStats:
    uncompressed_bits: int
    payload_bits: int
    width_field_bits: int
    patch_pos_bits: int
    header_bits: int
    # Single global width term: one field of ceil(lg max p) bits per word.
    global_width_field_bits: int

    @property
    def total_bits(self) -> int:
        """Compressed size excluding headers (the ratio's denominator)."""
        return self.payload_bits + self.width_field_bits + self.patch_pos_bits

    @property
    def ratio(self) -> float:
        if self.total_bits == 0:
            return math.inf if self.uncompressed_bits else 1.0
        return self.uncompressed_bits / self.total_bits

    @property
    def global_width_ratio(self) -> float:
        denom = self.payload_bits + self.global_width_field_bits + self.patch_pos_bits
        if denom == 0:
            return math.inf if self.uncompressed_bits else 1.0
        return self.uncompressed_bits / denom

    @property
    def bits_per_weight(self) -> float:
        weights = self.uncompressed_bits
        return self.total_bits / weights if weights else 0.0

    @property
    def memory_reduction(self) -> float:
        return 1.0 - 1.0 / self.ratio

    def as_dict(self) -> dict:
        return {
            "uncompressed_bits": self.uncompressed_bits,
            "payload_bits": self.payload_bits,
            "width_field_bits": self.width_field_bits,
            "patch_pos_bits": self.patch_pos_bits,
            "header_bits": self.header_bits,
            "total_bits": self.total_bits,
            "ratio": self.ratio,
            "bits_per_weight": self.bits_per_weight,
            "memory_reduction": self.memory_reduction,
            "global_width_field_bits": self.global_width_field_bits,
            "global_width_ratio": self.global_width_ratio,
        }


def compression_stats(ct: CompressedTensor) -> CompressionStats:
    p = ct.patch_counts
    payload = ct.n_in * len(ct.words)
    widths = sum(width * len(block) for width, block in ct.blocks())
    positions = sum(p) * position_bits(ct.n_out)
    max_p = max(p, default=0)
    global_width = len(p) * ((max_p - 1).bit_length() if max_p else 0)
    header = 8 * XQZ_HEADER_BYTES + 8 * len(ct.widths)
    return CompressionStats(
        uncompressed_bits=ct.m * ct.n * ct.n_q,
        payload_bits=payload,
        width_field_bits=widths,
        patch_pos_bits=positions,
        header_bits=header,
        global_width_field_bits=global_width,
    )


def serialize(ct: CompressedTensor) -> bytes:
    if ct.network_seed is None:
        raise ConfigError("cannot serialize a tensor encoded with a seedless network")
    if not (ct.n_out < 1 << 16 and ct.m < 1 << 32 and ct.n < 1 << 32 and ct.n_q < 1 << 8):
        raise ConfigError("tensor dimensions exceed XQZ header fields")
    header = _XQZ_HEADER.pack(
        XQZ_MAGIC, ct.m, ct.n, ct.n_q, ct.n_in, ct.n_out, ct.block_size, ct.network_seed, ct.l
    )
    pbits = position_bits(ct.n_out)
    w = BitWriter()
    for width, block in ct.blocks():
        w.write(width, 8)
        for enc in block:
            w.write(enc.seed_vector.bits, ct.n_in)
            w.write(enc.n_patch, width)
            for pos in enc.d_patch:
                w.write(pos, pbits)
    return header + w.getvalue()


def deserialize(data: bytes) -> CompressedTensor:
    if len(data) < XQZ_HEADER_BYTES:
        raise CorruptStreamError("stream shorter than XQZ header", len(data))
    magic, m, n, n_q, n_in, n_out, block_size, seed, l = _XQZ_HEADER.unpack_from(data)
    if magic != XQZ_MAGIC:
        raise CorruptStreamError(f"bad magic {magic!r}", 0)
    if n_q < 1 or n_in < 1 or n_out < n_in or block_size < 1:
        raise CorruptStreamError("invalid header parameters", 4)
    if l != words_per_plane(m, n, n_out):
        raise CorruptStreamError(f"word count {l} inconsistent with {m}x{n}/{n_out}", 29)
    reader = BitReader(data[XQZ_HEADER_BYTES:], XQZ_HEADER_BYTES)
    pbits = position_bits(n_out)
    total = l * n_q
    words: list[EncodedWord] = []
    widths: list[int] = []
    while len(words) < total:
        start = reader.byte_offset
        width = reader.read(8)
        block_max = 0
        for _ in range(min(block_size, total - len(words))):
            seed_bits = reader.read(n_in)
            count = reader.read(width)
            if count > n_out:
                raise CorruptStreamError(f"patch count {count} exceeds word size", reader.byte_offset)
            positions = tuple(reader.read(pbits) for _ in range(count))
            if any(p >= n_out for p in positions) or any(
                a >= b for a, b in zip(positions, positions[1:])
            ):
                raise CorruptStreamError("invalid patch positions", reader.byte_offset)
            block_max = max(block_max, count)
            words.append(EncodedWord(BitVector(n_in, seed_bits), positions))
        if count_width(block_max) != width:
            raise CorruptStreamError(f"block width {width} is not minimal", start)
        widths.append(width)
    if reader.remaining >= 8:
        raise CorruptStreamError("trailing bytes after last block", reader.byte_offset + 1)
    if reader.read(reader.remaining):
        raise CorruptStreamError("nonzero padding bits", len(data) - 1)
    return CompressedTensor(m, n, n_q, n_in, n_out, block_size, seed, words, widths)


def write_qmat(qm: QuantizedMatrix) -> bytes:
    size = qm.m * qm.n
    nbytes = (size + 7) // 8
    out = bytearray(_QMAT_HEADER.pack(QMAT_MAGIC, QMAT_VERSION, qm.m, qm.n, qm.n_q))
    out += qm.prune_mask.bits.to_bytes(nbytes, "little")
    for p in qm.planes:
        out += p.bits.to_bytes(nbytes, "little")
    return bytes(out)


def read_qmat(data: bytes) -> QuantizedMatrix:
    """Parse a QMAT file; plane bits at pruned positions are cleared."""
    hsize = _QMAT_HEADER.size
    if len(data) < hsize:
        raise CorruptStreamError("stream shorter than QMAT header", len(data))
    magic, version, m, n, n_q = _QMAT_HEADER.unpack_from(data)
    if magic != QMAT_MAGIC:
        raise CorruptStreamError(f"bad magic {magic!r}", 0)
    if version != QMAT_VERSION:
        raise CorruptStreamError(f"unsupported QMAT version {version}", 4)
    if n_q < 1:
        raise CorruptStreamError("n_q must be >= 1", 13)
    size = m * n
    nbytes = (size + 7) // 8
    expected = hsize + nbytes * (n_q + 1)
    if len(data) != expected:
        raise CorruptStreamError(f"expected {expected} bytes, got {len(data)}", min(len(data), expected))
    full = (1 << size) - 1

    def field_at(k: int) -> int:
        lo = hsize + k * nbytes
        return int.from_bytes(data[lo : lo + nbytes], "little") & full

    mask = field_at(0)
    planes = tuple(BitVector(size, field_at(k + 1) & mask) for k in range(n_q))
    return QuantizedMatrix(m, n, n_q, BitVector(size, mask), planes)
