"""Module-matrix plumbing shared by the encoder and decoder.

Coordinates are (x, y) = (column, row), origin top-left.  Matrices are
row-major lists of bool rows, True = dark.  Both directions use the same
function-pattern stencil and the same zigzag coordinate walk, so whatever
the encoder writes the decoder reads back in identical order.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator

from .tables import EcLevel, alignment_positions, side_for_version

MASK_PATTERNS = (
    lambda x, y: (x + y) % 2,
    lambda x, y: y % 2,
    lambda x, y: x % 3,
    lambda x, y: (x + y) % 3,
    lambda x, y: (x // 3 + y // 2) % 2,
    lambda x, y: x * y % 2 + x * y % 3,
    lambda x, y: (x * y % 2 + x * y % 3) % 2,
    lambda x, y: ((x + y) % 2 + x * y % 3) % 2,
)

FORMAT_MASK = 0x5412

PENALTY_N1 = 3
PENALTY_N2 = 3
PENALTY_N3 = 40
PENALTY_N4 = 10


def new_matrix(side: int) -> list[list[bool]]:
    return [[False] * side for _ in range(side)]


def copy_matrix(matrix: list[list[bool]]) -> list[list[bool]]:
    return [row[:] for row in matrix]


@lru_cache(maxsize=None)
def _function_layout(version: int) -> tuple[tuple[tuple[bool, ...], ...],
                                            tuple[tuple[bool, ...], ...]]:
    """(base modules, is_function) for a version, format area included."""
    side = side_for_version(version)
    modules = new_matrix(side)
    is_function = new_matrix(side)

    def put(x: int, y: int, dark: bool) -> None:
        modules[y][x] = dark
        is_function[y][x] = True

    # Timing patterns.
    for i in range(side):
        put(6, i, i % 2 == 0)
        put(i, 6, i % 2 == 0)

    # Finder patterns with separators (overwrite adjacent timing cells).
    for cx, cy in ((3, 3), (side - 4, 3), (3, side - 4)):
        for dy in range(-4, 5):
            for dx in range(-4, 5):
                x, y = cx + dx, cy + dy
                if 0 <= x < side and 0 <= y < side:
                    put(x, y, max(abs(dx), abs(dy)) not in (2, 4))

    # Alignment patterns, skipping the three finder corners.
    positions = alignment_positions(version)
    num = len(positions)
    skips = {(0, 0), (0, num - 1), (num - 1, 0)}
    for i in range(num):
        for j in range(num):
            if (i, j) in skips:
                continue
            cx, cy = positions[i], positions[j]
            for dy in range(-2, 3):
                for dx in range(-2, 3):
                    put(cx + dx, cy + dy, max(abs(dx), abs(dy)) != 1)

    # Format information areas (content drawn later) and the dark module.
    for x, y in format_coords_copy1(side):
        put(x, y, False)
    for x, y in format_coords_copy2(side):
        put(x, y, False)
    put(8, side - 8, True)

    # Version information areas for versions 7+.
    if version >= 7:
        for i in range(18):
            a, b = side - 11 + i % 3, i // 3
            put(a, b, False)
            put(b, a, False)

    return (tuple(tuple(r) for r in modules), tuple(tuple(r) for r in is_function))


def build_function_modules(version: int) -> tuple[list[list[bool]], list[list[bool]]]:
    """Fresh mutable (modules, is_function) matrices for a version."""
    modules, is_function = _function_layout(version)
    return [list(r) for r in modules], [list(r) for r in is_function]


def data_coords(side: int, is_function: list[list[bool]]) -> Iterator[tuple[int, int]]:
    """Zigzag walk over non-function modules, codeword placement order."""
    right = side - 1
    while right >= 1:
        col = right - 1 if right <= 6 else right  # column 6 is the timing pattern
        upward = (col + 1) & 2 == 0
        for vert in range(side):
            y = side - 1 - vert if upward else vert
            for x in (col, col - 1):
                if not is_function[y][x]:
                    yield (x, y)
        right -= 2


# ---- format / version information ----

def bch_format_word(ec: EcLevel, mask_id: int) -> int:
    """15-bit masked format word: BCH(15,5) over the 5 info bits."""
    data = ec.format_bits << 3 | mask_id
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * 0x537)
    return (data << 10 | rem) ^ FORMAT_MASK


def bch_version_word(version: int) -> int:
    """18-bit version word: BCH(18,6)."""
    rem = version
    for _ in range(12):
        rem = (rem << 1) ^ ((rem >> 11) * 0x1F25)
    return version << 12 | rem


def format_coords_copy1(side: int) -> list[tuple[int, int]]:
    """Bit i of the format word lives at coords[i]; copy around the NW finder."""
    coords = [(8, i) for i in range(6)]
    coords += [(8, 7), (8, 8), (7, 8)]
    coords += [(14 - i, 8) for i in range(9, 15)]
    return coords

def format_coords_copy2(side: int) -> list[tuple[int, int]]:
    """Second copy, split between the NE and SW finders."""
    coords = [(side - 1 - i, 8) for i in range(8)]
    coords += [(8, side - 15 + i) for i in range(8, 15)]
    return coords


def draw_format(modules: list[list[bool]], ec: EcLevel, mask_id: int) -> None:
    word = bch_format_word(ec, mask_id)
    side = len(modules)
    for i, (x, y) in enumerate(format_coords_copy1(side)):
        modules[y][x] = (word >> i) & 1 != 0
    for i, (x, y) in enumerate(format_coords_copy2(side)):
        modules[y][x] = (word >> i) & 1 != 0
    modules[side - 8][8] = True


def read_format_words(modules: list[list[bool]]) -> tuple[int, int]:
    side = len(modules)
    w1 = w2 = 0
    for i, (x, y) in enumerate(format_coords_copy1(side)):
        w1 |= int(modules[y][x]) << i
    for i, (x, y) in enumerate(format_coords_copy2(side)):
        w2 |= int(modules[y][x]) << i
    return w1, w2


def draw_version_info(modules: list[list[bool]], version: int) -> None:
    if version < 7:
        return
    word = bch_version_word(version)
    side = len(modules)
    for i in range(18):
        bit = (word >> i) & 1 != 0
        a, b = side - 11 + i % 3, i // 3
        modules[b][a] = bit
        modules[a][b] = bit


# ---- masking ----

def apply_mask(modules: list[list[bool]], is_function: list[list[bool]],
               mask_id: int) -> None:
    """XOR the mask over data modules in place (self-inverse)."""
    masker = MASK_PATTERNS[mask_id]
    side = len(modules)
    for y in range(side):
        row = modules[y]
        fun = is_function[y]
        for x in range(side):
            if not fun[x] and masker(x, y) == 0:
                row[x] = not row[x]


# ---- penalty scoring ----

def penalty_score(modules: list[list[bool]]) -> int:
    """Standard four-rule mask evaluation score.

    N1: runs of 5+ same-colored modules in a row/column (3 + overrun).
    N2: 2x2 blocks of one color (3 each).
    N3: finder-like 1:1:3:1:1 pattern with a 4-module light run on either
        side, in rows and columns (40 each).
    N4: 10 per 5% step the dark proportion strays from the 45..55% band.
    """
    side = len(modules)
    score = 0

    for y in range(side):
        row = modules[y]
        run_color = None
        run = 0
        for x in range(side):
            if row[x] == run_color:
                run += 1
                if run == 5:
                    score += PENALTY_N1
                elif run > 5:
                    score += 1
            else:
                run_color = row[x]
                run = 1
    for x in range(side):
        run_color = None
        run = 0
        for y in range(side):
            if modules[y][x] == run_color:
                run += 1
                if run == 5:
                    score += PENALTY_N1
                elif run > 5:
                    score += 1
            else:
                run_color = modules[y][x]
                run = 1

    for y in range(side - 1):
        row, below = modules[y], modules[y + 1]
        for x in range(side - 1):
            if row[x] == row[x + 1] == below[x] == below[x + 1]:
                score += PENALTY_N2

    for y in range(side):
        bits = 0
        row = modules[y]
        for x in range(side):
            bits = ((bits << 1) & 0x7FF) | int(row[x])
            if x >= 10 and bits in (0x05D, 0x5D0):
                score += PENALTY_N3
    for x in range(side):
        bits = 0
        for y in range(side):
            bits = ((bits << 1) & 0x7FF) | int(modules[y][x])
            if y >= 10 and bits in (0x05D, 0x5D0):
                score += PENALTY_N3

    dark = sum(row.count(True) for row in modules)
    total = side * side
    k = 0
    while not (9 - k) * total <= dark * 20 <= (11 + k) * total:
        k += 1
        score += PENALTY_N4
    return score
