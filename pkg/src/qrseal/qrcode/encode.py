"""Byte-mode symbol encoder.

Pipeline: payload -> segment bits (mode 0100, count, data, terminator,
0xEC/0x11 padding) -> per-block Reed-Solomon parity -> interleave ->
zigzag placement -> mask selection by minimum penalty -> format bits.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import QrsealError
from . import matrix as mx
from .gf256 import rs_encode
from .tables import (
    EcLevel,
    MAX_VERSION,
    MIN_VERSION,
    block_layout,
    byte_capacity,
    char_count_bits,
    check_version,
    data_codewords,
    raw_codewords,
    side_for_version,
)


class PayloadTooLarge(QrsealError):
    pass


@dataclass(frozen=True)
class QrSymbol:
    """An encoded symbol: the module matrix plus its coding parameters."""

    version: int
    ec_level: EcLevel
    mask_id: int
    modules: list[list[bool]]

    @property
    def side(self) -> int:
        return len(self.modules)

    def __post_init__(self):
        check_version(self.version)
        if not 0 <= self.mask_id <= 7:
            raise ValueError("mask_id must be 0..7")
        side = side_for_version(self.version)
        if len(self.modules) != side or any(len(r) != side for r in self.modules):
            raise ValueError(f"matrix must be {side}x{side} for version {self.version}")


def choose_version(payload_len: int, ec: EcLevel) -> int:
    """Smallest version whose byte-mode capacity fits the payload."""
    for version in range(MIN_VERSION, MAX_VERSION + 1):
        if byte_capacity(version, ec) >= payload_len:
            return version
    raise PayloadTooLarge(
        f"{payload_len} bytes exceed version {MAX_VERSION} capacity "
        f"{byte_capacity(MAX_VERSION, ec)} at level {ec.name}"
    )


class _BitWriter:
    def __init__(self):
        self.bits: list[int] = []

    def write(self, value: int, width: int) -> None:
        self.bits.extend((value >> i) & 1 for i in reversed(range(width)))

    def to_bytes(self) -> bytes:
        out = bytearray((len(self.bits) + 7) // 8)
        for i, bit in enumerate(self.bits):
            out[i >> 3] |= bit << (7 - (i & 7))
        return bytes(out)


def _build_data_codewords(payload: bytes, version: int, ec: EcLevel) -> bytes:
    capacity_bits = data_codewords(version, ec) * 8
    w = _BitWriter()
    w.write(0b0100, 4)
    w.write(len(payload), char_count_bits(version))
    for b in payload:
        w.write(b, 8)
    w.write(0, min(4, capacity_bits - len(w.bits)))
    w.write(0, -len(w.bits) % 8)
    pad = (0xEC, 0x11)
    i = 0
    while len(w.bits) < capacity_bits:
        w.write(pad[i % 2], 8)
        i += 1
    return w.to_bytes()


def interleave_blocks(blocks: list[tuple[bytes, bytes]]) -> bytes:
    """Column-wise data bytes across blocks, then column-wise parity."""
    out = bytearray()
    max_data = max(len(d) for d, _ in blocks)
    for i in range(max_data):
        for data, _ in blocks:
            if i < len(data):
                out.append(data[i])
    max_ecc = max(len(e) for _, e in blocks)
    for i in range(max_ecc):
        for _, ecc in blocks:
            if i < len(ecc):
                out.append(ecc[i])
    return bytes(out)


def _place_codewords(modules: list[list[bool]], is_function: list[list[bool]],
                     raw: bytes) -> None:
    total_bits = len(raw) * 8
    for i, (x, y) in enumerate(mx.data_coords(len(modules), is_function)):
        if i >= total_bits:
            break  # remainder modules stay light (pre-mask)
        modules[y][x] = (raw[i >> 3] >> (7 - (i & 7))) & 1 != 0


def select_mask(candidates: list[list[list[bool]]]) -> int:
    """Index of the lowest-penalty matrix; ties go to the lowest index."""
    best_id = 0
    best_score = mx.penalty_score(candidates[0])
    for mask_id in range(1, len(candidates)):
        score = mx.penalty_score(candidates[mask_id])
        if score < best_score:
            best_id, best_score = mask_id, score
    return best_id


def encode_symbol(payload: bytes, ec: EcLevel = EcLevel.Q,
                  version: int | None = None, mask: int | None = None) -> QrSymbol:
    """Encode a payload; version auto-selected and mask penalty-chosen unless forced."""
    if version is None:
        version = choose_version(len(payload), ec)
    else:
        check_version(version)
        if byte_capacity(version, ec) < len(payload):
            raise PayloadTooLarge(
                f"{len(payload)} bytes exceed version {version}-{ec.name} "
                f"capacity {byte_capacity(version, ec)}"
            )
    if mask is not None and not 0 <= mask <= 7:
        raise ValueError("mask must be 0..7")

    data = _build_data_codewords(payload, version, ec)
    blocks = []
    offset = 0
    for data_len, ecc_len in block_layout(version, ec):
        chunk = data[offset : offset + data_len]
        offset += data_len
        blocks.append((chunk, rs_encode(chunk, ecc_len)))
    raw = interleave_blocks(blocks)
    assert len(raw) == raw_codewords(version)

    modules, is_function = mx.build_function_modules(version)
    mx.draw_version_info(modules, version)
    _place_codewords(modules, is_function, raw)

    if mask is None:
        candidates = []
        for mask_id in range(8):
            cand = mx.copy_matrix(modules)
            mx.apply_mask(cand, is_function, mask_id)
            mx.draw_format(cand, ec, mask_id)
            candidates.append(cand)
        mask = select_mask(candidates)
        final = candidates[mask]
    else:
        mx.apply_mask(modules, is_function, mask)
        mx.draw_format(modules, ec, mask)
        final = modules
    return QrSymbol(version, ec, mask, final)
