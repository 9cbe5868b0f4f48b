"""xorshift64star pseudo-random stream.

One generator backs two unrelated jobs: the payload whitening keystream
and the print-distortion noise in the line simulator.  The two uses are
kept uncorrelated by seeding the simulator from seed XOR DISTORTION_SEED_XOR
rather than the raw seed.

Not cryptographic.  The whitening layer only has to defeat casual ASCII
inspection; confidentiality comes from the sealing layer above it.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 0x2545F4914F6CDD1D

# Seed-domain separator for the QC-line distortion stream.
DISTORTION_SEED_XOR = 0x51CA_DA7A_0000_0001


class XorShift64Star:
    """Classic xorshift64* with shifts 12/25/27.

    Each step updates the 64-bit state and emits state * multiplier mod 2**64.
    A zero seed is a fixed point: the stream is all zeros, which the tests
    use as the identity keystream.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def next_byte(self) -> int:
        """Top byte of the next 64-bit output."""
        return self.next_u64() >> 56

    def next_bool(self, probability: float) -> bool:
        """True with the given probability (0 -> never, 1 -> always)."""
        return self.next_u64() < int(probability * 2.0**64)


def keystream(seed: int, length: int) -> bytes:
    """First `length` keystream bytes for the given 64-bit seed."""
    gen = XorShift64Star(seed)
    return bytes(gen.next_byte() for _ in range(length))
