"""Deterministic 64-bit generator used to build XOR networks.

The constants here are part of the XQZ stream format: a decoder regenerates
the network from the seed stored in the header, so changing anything in this
file breaks every existing stream.

Procedure:
  * the 64-bit seed is passed once through SplitMix64 (increment
    0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB,
    shifts 30/27/31); a zero result is replaced by 0x9E3779B97F4A7C15;
  * the result seeds xorshift64* (shifts 12, 25, 27, multiplier
    0x2545F4914F6CDD1D);
  * each generated bit is the most significant bit of one xorshift64* output.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
XS_MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        self.state = state or GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XS_MULT) & MASK64

    def bits(self, n: int) -> int:
        """``n`` fair bits packed LSB-first: the first bit drawn is bit 0."""
        x = self.state
        out = 0
        for i in range(n):
            x ^= x >> 12
            x ^= (x << 25) & MASK64
            x ^= x >> 27
            out |= (((x * XS_MULT) & MASK64) >> 63) << i
        self.state = x
        return out
