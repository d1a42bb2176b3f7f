"""LSB-first bit packing."""

from __future__ import annotations

from .errors import CorruptStreamError


class BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self._acc = 0
        self._nacc = 0

    @property
    def bit_count(self) -> int:
        return 8 * len(self.buf) + self._nacc

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value < 0 or value >> nbits:
            raise ValueError(f"{value} does not fit in {nbits} bits")
        self._acc |= value << self._nacc
        self._nacc += nbits
        if self._nacc >= 8:
            k = self._nacc >> 3
            self.buf += (self._acc & ((1 << (8 * k)) - 1)).to_bytes(k, "little")
            self._acc >>= 8 * k
            self._nacc &= 7

    def getvalue(self) -> bytes:
        """Written bits, zero-padded to a whole byte."""
        if self._nacc:
            return bytes(self.buf) + bytes([self._acc])
        return bytes(self.buf)


class BitReader:
    def __init__(self, data: bytes, base_offset: int = 0):
        self.data = data
        self.pos = 0
        self.base_offset = base_offset

    @property
    def remaining(self) -> int:
        return 8 * len(self.data) - self.pos

    def read(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        end = self.pos + nbits
        if end > 8 * len(self.data):
            raise CorruptStreamError("truncated bitstream", self.base_offset + len(self.data))
        lo = self.pos >> 3
        hi = (end + 7) >> 3
        chunk = int.from_bytes(self.data[lo:hi], "little")
        value = (chunk >> (self.pos & 7)) & ((1 << nbits) - 1)
        self.pos = end
        return value

    @property
    def byte_offset(self) -> int:
        return self.base_offset + (self.pos >> 3)
