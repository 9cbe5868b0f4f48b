"""Dual-layer payload framing.

A protected payload is a single byte string:

    <public, printable ASCII> 0x00 <concealed private blob>

A conventional scanner stops at the first NUL and shows only the public
prefix.  The private blob is the encrypted per-unit tag run through a
keyed whitening pass and a NUL/ESC escape transform, so it is guaranteed
to contain no 0x00 byte (the separator stays unambiguous) and no readable
ASCII structure.

Concealment layout:

    conceal(cipher, key) = escape(cipher XOR keystream(key))

The keystream is xorshift64star seeded with the big-endian 64-bit integer
formed by the first 8 key bytes; whitened byte i uses keystream byte i.
escape maps 0x00 -> 0x1B 0x01 and 0x1B -> 0x1B 0x02; every other byte
passes through, bounding the blob at twice the cipher length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import QrsealError
from .xorshift import XorShift64Star

SEPARATOR = 0x00
ESCAPE = 0x1B
_ESCAPED_NUL = 0x01
_ESCAPED_ESC = 0x02

MIN_KEY_LEN = 8
BASE62_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"


class PayloadError(QrsealError):
    pass


class InvalidInput(PayloadError):
    pass


class InvalidKey(PayloadError):
    pass


class InvalidPublic(PayloadError):
    pass


class MalformedEscape(PayloadError):
    pass


class MalformedBlob(PayloadError):
    pass


class MissingSeparator(PayloadError):
    pass


class EmptyPrivate(PayloadError):
    pass


@dataclass(frozen=True)
class ProtectedTag:
    """The (public, private) string pair carried by one product unit.

    public: shown by any conventional scanner; printable ASCII, may be empty.
    private: the unique per-unit tag; non-empty base-62.
    """

    public: str
    private: str

    def __post_init__(self):
        check_public(self.public)
        if not self.private:
            raise InvalidInput("private tag must be non-empty")
        if any(ch not in BASE62_ALPHABET for ch in self.private):
            raise InvalidInput("private tag must be base-62 [0-9A-Za-z]")


class ConventionalScan(NamedTuple):
    """What a conventional scanner shows for a payload."""

    text: str
    protected: bool  # False when no separator was present


def check_public(public: str) -> None:
    """Raise InvalidPublic unless the string is printable ASCII (0x20-0x7E)."""
    if any(not (0x20 <= ord(ch) <= 0x7E) for ch in public):
        raise InvalidPublic("public string must be printable ASCII 0x20-0x7E")


def _check_key(key: bytes) -> None:
    if len(key) < MIN_KEY_LEN:
        raise InvalidKey(f"modification key must be at least {MIN_KEY_LEN} bytes")


def _whiten(data: bytes, key: bytes) -> bytes:
    gen = XorShift64Star(int.from_bytes(key[:MIN_KEY_LEN], "big"))
    return bytes(b ^ gen.next_byte() for b in data)


def conceal(cipher: bytes, key: bytes) -> bytes:
    """Whiten and escape an encrypted tag; output never contains 0x00."""
    if not cipher:
        raise InvalidInput("cipher must be non-empty")
    _check_key(key)
    out = bytearray()
    for b in _whiten(cipher, key):
        if b == SEPARATOR:
            out += bytes((ESCAPE, _ESCAPED_NUL))
        elif b == ESCAPE:
            out += bytes((ESCAPE, _ESCAPED_ESC))
        else:
            out.append(b)
    return bytes(out)


def reveal(blob: bytes, key: bytes) -> bytes:
    """Invert conceal(): unescape, then strip the whitening."""
    _check_key(key)
    if SEPARATOR in blob:
        raise MalformedBlob("concealed blob contains a NUL byte")
    unescaped = bytearray()
    i = 0
    while i < len(blob):
        b = blob[i]
        if b != ESCAPE:
            unescaped.append(b)
            i += 1
            continue
        if i + 1 >= len(blob):
            raise MalformedEscape("dangling escape byte at end of blob")
        code = blob[i + 1]
        if code == _ESCAPED_NUL:
            unescaped.append(SEPARATOR)
        elif code == _ESCAPED_ESC:
            unescaped.append(ESCAPE)
        else:
            raise MalformedEscape(f"invalid escape code 0x{code:02X}")
        i += 2
    return _whiten(bytes(unescaped), key)


def frame(public: str, concealed: bytes) -> bytes:
    """Assemble the QR payload: public bytes ++ 0x00 ++ concealed."""
    check_public(public)
    if not concealed:
        raise InvalidInput("concealed blob must be non-empty")
    if SEPARATOR in concealed:
        raise MalformedBlob("concealed blob contains a NUL byte")
    return public.encode("ascii") + bytes([SEPARATOR]) + concealed


def parse_conventional(payload: bytes) -> ConventionalScan:
    """Model a conventional scanner: text strictly before the first NUL.

    A payload without any NUL is not a protected payload; the whole thing
    is returned with protected=False.
    """
    idx = payload.find(SEPARATOR)
    if idx < 0:
        return ConventionalScan(payload.decode("ascii", errors="replace"), False)
    return ConventionalScan(payload[:idx].decode("ascii", errors="replace"), True)


def parse_protected(payload: bytes) -> tuple[str, bytes]:
    """Split a protected payload into (public, concealed blob)."""
    idx = payload.find(SEPARATOR)
    if idx < 0:
        raise MissingSeparator("payload has no NUL separator")
    concealed = payload[idx + 1 :]
    if not concealed:
        raise EmptyPrivate("payload has no bytes after the separator")
    prefix = payload[:idx]
    if any(not (0x20 <= b <= 0x7E) for b in prefix):
        raise InvalidPublic("public prefix is not printable ASCII")
    return prefix.decode("ascii"), concealed
