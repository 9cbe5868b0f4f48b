"""Canonical key=value text records.

One record per line, fields separated by single spaces, each field
`key=value`.  Keys are bare identifiers ([a-z0-9_]).  Values are escaped
so a record always fits on one line and re-serializes byte-identically:

    \\   backslash        \n  newline (0x0A)
    \r   carriage return  \t  tab
    \s   space

Field order is fixed by the writer and preserved by the parser, so files
built from these records (registry event log, line reports, wire bodies)
are stable for golden-file comparison.  Duplicate keys are legal and kept
in order (used for repeated `alert=` fields in responses).
"""

from __future__ import annotations

import re

from .errors import QrsealError

_KEY_RE = re.compile(r"[a-z0-9_]+\Z")

_ESCAPES = {
    "\\": "\\\\",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    " ": "\\s",
}
_UNESCAPES = {
    "\\": "\\",
    "n": "\n",
    "r": "\r",
    "t": "\t",
    "s": " ",
}


class RecordSyntaxError(QrsealError):
    pass


def escape_value(value: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def unescape_value(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(text):
            raise RecordSyntaxError("dangling backslash in value")
        code = text[i + 1]
        if code not in _UNESCAPES:
            raise RecordSyntaxError(f"unknown escape \\{code}")
        out.append(_UNESCAPES[code])
        i += 2
    return "".join(out)


def dump_record(fields: list[tuple[str, str]]) -> str:
    """Serialize fields to one line (no trailing newline)."""
    parts = []
    for key, value in fields:
        if not _KEY_RE.match(key):
            raise ValueError(f"bad field key {key!r}")
        parts.append(f"{key}={escape_value(value)}")
    return " ".join(parts)


def parse_record(line: str) -> list[tuple[str, str]]:
    """Parse one line back to an ordered field list."""
    line = line.rstrip("\n")
    if not line:
        return []
    fields = []
    for part in line.split(" "):
        key, sep, raw = part.partition("=")
        if not sep or not _KEY_RE.match(key):
            raise RecordSyntaxError(f"malformed field {part!r}")
        fields.append((key, unescape_value(raw)))
    return fields


def fields_dict(fields: list[tuple[str, str]]) -> dict[str, str]:
    """Collapse to a dict; last occurrence wins for duplicate keys."""
    return dict(fields)
