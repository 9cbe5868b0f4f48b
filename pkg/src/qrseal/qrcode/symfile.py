"""QRSYM v1 symbol file format, plus PBM export for eyeballing.

    QRSYM 1 <side> <version> <ec> <mask>
    <side lines of '0'/'1', one per module row, '1' = dark>

Newlines are LF.  The header's version/ec/mask describe how the symbol
was encoded; decoding always trusts the matrix itself, so a distorted
symbol round-trips through the file unchanged.
"""

from __future__ import annotations

from ..errors import QrsealError
from .encode import QrSymbol
from .tables import EcLevel

MAGIC = "QRSYM"
FORMAT_VERSION = "1"


class SymbolFileError(QrsealError):
    pass


def dump_symbol(sym: QrSymbol) -> str:
    header = f"{MAGIC} {FORMAT_VERSION} {sym.side} {sym.version} {sym.ec_level.name} {sym.mask_id}"
    rows = ("".join("1" if cell else "0" for cell in row) for row in sym.modules)
    return header + "\n" + "\n".join(rows) + "\n"


def parse_symbol(text: str) -> QrSymbol:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SymbolFileError("empty symbol file")
    parts = lines[0].split(" ")
    if len(parts) != 6 or parts[0] != MAGIC or parts[1] != FORMAT_VERSION:
        raise SymbolFileError(f"bad header {lines[0]!r}")
    try:
        side = int(parts[2])
        version = int(parts[3])
        ec = EcLevel[parts[4]]
        mask_id = int(parts[5])
    except (ValueError, KeyError) as exc:
        raise SymbolFileError(f"bad header {lines[0]!r}") from exc
    if len(lines) - 1 != side:
        raise SymbolFileError(f"expected {side} rows, found {len(lines) - 1}")
    modules = []
    for lineno, line in enumerate(lines[1:], start=2):
        if len(line) != side or set(line) - {"0", "1"}:
            raise SymbolFileError(f"bad module row at line {lineno}")
        modules.append([ch == "1" for ch in line])
    try:
        return QrSymbol(version, ec, mask_id, modules)
    except ValueError as exc:
        raise SymbolFileError(str(exc)) from exc


def dump_pbm(sym: QrSymbol, border: int = 4) -> str:
    """Plain PBM (P1); 1 = black.  `border` adds a light quiet zone."""
    size = sym.side + 2 * border
    lines = [f"P1", f"{size} {size}"]
    blank = "0 " * size
    for _ in range(border):
        lines.append(blank.rstrip())
    for row in sym.modules:
        cells = ["0"] * border + ["1" if c else "0" for c in row] + ["0"] * border
        lines.append(" ".join(cells))
    for _ in range(border):
        lines.append(blank.rstrip())
    return "\n".join(lines) + "\n"
