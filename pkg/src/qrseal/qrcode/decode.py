"""Symbol decoder: module matrix back to payload bytes.

The format word is read from both copies and matched against all 32
valid words; a copy survives up to 3 flipped bits and the cleaner copy
wins.  Block parity repairs up to floor(ecc_len/2) byte errors per
block.  Function patterns themselves never need to be read, so print
damage there costs nothing.
"""

from __future__ import annotations

from ..errors import QrsealError
from . import matrix as mx
from .gf256 import Uncorrectable, rs_correct
from .tables import (
    EcLevel,
    block_layout,
    char_count_bits,
    raw_codewords,
    version_for_side,
)

_FORMAT_DISTANCE_LIMIT = 3


class DecodeError(QrsealError):
    pass


class DecodeFailure(DecodeError):
    """Data could not be recovered; block_index set when one block is at fault."""

    def __init__(self, message: str, block_index: int | None = None):
        super().__init__(message)
        self.block_index = block_index


class FormatInfoError(DecodeError):
    """Neither format-information copy is within correction distance."""


_ALL_FORMAT_WORDS = [
    (mx.bch_format_word(ec, mask_id), ec, mask_id)
    for ec in EcLevel
    for mask_id in range(8)
]


def _match_format_word(word: int) -> tuple[EcLevel, int, int] | None:
    """(ec, mask, bit_distance) of the closest valid word within distance 3."""
    best = None
    for candidate, ec, mask_id in _ALL_FORMAT_WORDS:
        distance = bin(word ^ candidate).count("1")
        if best is None or distance < best[2]:
            best = (ec, mask_id, distance)
    if best is None or best[2] > _FORMAT_DISTANCE_LIMIT:
        return None
    return best


def read_format_info(modules: list[list[bool]]) -> tuple[EcLevel, int]:
    """Decode (ec_level, mask_id), preferring the copy with fewer corrected bits."""
    w1, w2 = mx.read_format_words(modules)
    m1 = _match_format_word(w1)
    m2 = _match_format_word(w2)
    if m1 is None and m2 is None:
        raise FormatInfoError("both format information copies are unreadable")
    if m2 is None or (m1 is not None and m1[2] <= m2[2]):
        ec, mask_id, _ = m1
    else:
        ec, mask_id, _ = m2
    return ec, mask_id


def _extract_codewords(modules: list[list[bool]], is_function: list[list[bool]],
                       version: int) -> bytes:
    raw_len = raw_codewords(version)
    out = bytearray(raw_len)
    for i, (x, y) in enumerate(mx.data_coords(len(modules), is_function)):
        if i >= raw_len * 8:
            break  # remainder bits carry no data
        if modules[y][x]:
            out[i >> 3] |= 1 << (7 - (i & 7))
    return bytes(out)


def deinterleave_blocks(raw: bytes, version: int, ec: EcLevel) -> list[bytes]:
    """Undo codeword interleaving; returns each block as data+parity."""
    layout = block_layout(version, ec)
    data_parts = [bytearray() for _ in layout]
    ecc_parts = [bytearray() for _ in layout]
    it = iter(raw)
    for i in range(max(d for d, _ in layout)):
        for j, (data_len, _) in enumerate(layout):
            if i < data_len:
                data_parts[j].append(next(it))
    for i in range(max(e for _, e in layout)):
        for j, (_, ecc_len) in enumerate(layout):
            if i < ecc_len:
                ecc_parts[j].append(next(it))
    return [bytes(d + e) for d, e in zip(data_parts, ecc_parts)]


class _BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.data) * 8 - self.pos

    def read(self, width: int) -> int:
        value = 0
        for _ in range(width):
            byte = self.data[self.pos >> 3]
            value = (value << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return value


def _parse_segments(data: bytes, version: int) -> bytes:
    reader = _BitReader(data)
    out = bytearray()
    while reader.remaining >= 4:
        mode = reader.read(4)
        if mode == 0b0000:  # terminator
            break
        if mode != 0b0100:
            raise DecodeFailure(f"unsupported segment mode {mode:#06b}")
        count_bits = char_count_bits(version)
        if reader.remaining < count_bits:
            raise DecodeFailure("truncated character count field")
        count = reader.read(count_bits)
        if reader.remaining < count * 8:
            raise DecodeFailure("segment length exceeds available bits")
        out.extend(reader.read(8) for _ in range(count))
    return bytes(out)


def decode_symbol(modules: list[list[bool]]) -> bytes:
    """Recover the payload from a (possibly damaged) module matrix."""
    side = len(modules)
    if any(len(row) != side for row in modules):
        raise DecodeFailure("matrix is not square")
    version = version_for_side(side)
    if version is None:
        raise DecodeFailure(f"side {side} does not match any supported version")

    ec, mask_id = read_format_info(modules)

    _, is_function = mx.build_function_modules(version)
    unmasked = mx.copy_matrix(modules)
    mx.apply_mask(unmasked, is_function, mask_id)

    raw = _extract_codewords(unmasked, is_function, version)
    data = bytearray()
    for index, block in enumerate(deinterleave_blocks(raw, version, ec)):
        ecc_len = block_layout(version, ec)[index][1]
        try:
            data.extend(rs_correct(block, ecc_len))
        except Uncorrectable as exc:
            raise DecodeFailure(f"block {index}: {exc}", block_index=index) from exc
    return _parse_segments(bytes(data), version)
