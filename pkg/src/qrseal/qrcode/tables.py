"""Symbol geometry and block-structure tables for versions 1-10.

Everything here is derived from the version number and error-correction
level: matrix side, raw codeword count, per-block data/parity split, and
the byte-mode payload capacity used for version selection.
"""

from __future__ import annotations

from enum import Enum

MIN_VERSION = 1
MAX_VERSION = 10


class EcLevel(Enum):
    """Error-correction level; `format_bits` is the 2-bit field-info encoding."""

    L = 0
    M = 1
    Q = 2
    H = 3

    @property
    def format_bits(self) -> int:
        return {"L": 1, "M": 0, "Q": 3, "H": 2}[self.name]


# Parity codewords per block, versions 1-10 (index 0 unused).
ECC_PER_BLOCK = {
    EcLevel.L: (None, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18),
    EcLevel.M: (None, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26),
    EcLevel.Q: (None, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24),
    EcLevel.H: (None, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28),
}

NUM_BLOCKS = {
    EcLevel.L: (None, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4),
    EcLevel.M: (None, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5),
    EcLevel.Q: (None, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8),
    EcLevel.H: (None, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8),
}


def check_version(version: int) -> None:
    if not MIN_VERSION <= version <= MAX_VERSION:
        raise ValueError(f"version must be {MIN_VERSION}..{MAX_VERSION}, got {version}")


def side_for_version(version: int) -> int:
    check_version(version)
    return 4 * version + 17


def version_for_side(side: int) -> int | None:
    version, rem = divmod(side - 17, 4)
    if rem == 0 and MIN_VERSION <= version <= MAX_VERSION:
        return version
    return None


def alignment_positions(version: int) -> list[int]:
    """Center coordinates of alignment patterns (both axes)."""
    check_version(version)
    if version == 1:
        return []
    num = version // 7 + 2
    step = (version * 4 + num * 2 + 1) // (2 * num - 2) * 2
    positions = [6]
    pos = version * 4 + 10
    for _ in range(num - 1):
        positions.insert(1, pos)
        pos -= step
    return positions


def raw_data_modules(version: int) -> int:
    """Modules available for codewords after all function patterns."""
    check_version(version)
    result = (16 * version + 128) * version + 64
    if version >= 2:
        num = version // 7 + 2
        result -= (25 * num - 10) * num - 55
        if version >= 7:
            result -= 36
    return result


def raw_codewords(version: int) -> int:
    return raw_data_modules(version) // 8


def data_codewords(version: int, ec: EcLevel) -> int:
    return raw_codewords(version) - ECC_PER_BLOCK[ec][version] * NUM_BLOCKS[ec][version]


def char_count_bits(version: int) -> int:
    """Byte-mode character count field width."""
    check_version(version)
    return 8 if version <= 9 else 16


def byte_capacity(version: int, ec: EcLevel) -> int:
    """Largest byte-mode payload that fits (mode + count field accounted)."""
    return (data_codewords(version, ec) * 8 - 4 - char_count_bits(version)) // 8


def block_layout(version: int, ec: EcLevel) -> list[tuple[int, int]]:
    """Per-block (data_len, ecc_len).  Short blocks first, per the standard."""
    check_version(version)
    num_blocks = NUM_BLOCKS[ec][version]
    ecc_len = ECC_PER_BLOCK[ec][version]
    raw = raw_codewords(version)
    short_total = raw // num_blocks
    num_short = num_blocks - raw % num_blocks
    layout = []
    for i in range(num_blocks):
        total = short_total if i < num_short else short_total + 1
        layout.append((total - ecc_len, ecc_len))
    return layout
