"""The protected decode pipeline, shared by every consumer.

symbol matrix -> payload -> (public, concealed) -> cipher -> private tag

The QC line in integrated mode, the factory decode endpoint, and the
scan verification endpoint all call the same function, so a symbol that
decodes one way here decodes the same way everywhere.  Failures carry
the pipeline stage that rejected the symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import payload as payload_codec
from . import sealing
from .errors import QrsealError
from .qrcode import decode_symbol
from .qrcode.decode import DecodeError

STAGES = ("qr-decode", "split", "conceal", "decrypt", "tag-syntax")


class StageFailure(QrsealError):
    """A pipeline stage rejected the symbol; `stage` names the culprit."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


@dataclass(frozen=True)
class DecodedTag:
    public: str
    private_tag: str


def decode_private_tag(modules: list[list[bool]], keys: sealing.KeyMaterial) -> DecodedTag:
    """Run the full protected decode; raises StageFailure on any rejection."""
    try:
        payload = decode_symbol(modules)
    except DecodeError as exc:
        raise StageFailure("qr-decode", str(exc)) from exc
    try:
        public, concealed = payload_codec.parse_protected(payload)
    except payload_codec.PayloadError as exc:
        raise StageFailure("split", str(exc)) from exc
    try:
        cipher = payload_codec.reveal(concealed, keys.mod_key)
    except payload_codec.PayloadError as exc:
        raise StageFailure("conceal", str(exc)) from exc
    try:
        tag_bytes = sealing.open(
            sealing.CipherText(keys.private.scheme, cipher), keys.private)
    except sealing.SealingError as exc:
        raise StageFailure("decrypt", str(exc)) from exc
    try:
        tag = tag_bytes.decode("ascii")
    except UnicodeDecodeError as exc:
        raise StageFailure("tag-syntax", "decrypted tag is not ASCII") from exc
    if not tag or any(ch not in payload_codec.BASE62_ALPHABET for ch in tag):
        raise StageFailure("tag-syntax", "decrypted tag is not base-62")
    return DecodedTag(public, tag)


def encode_unit_payload(public: str, private_tag: str, keys: sealing.KeyMaterial) -> bytes:
    """Inverse direction used at print time: tag -> framed QR payload."""
    cipher = sealing.seal(private_tag.encode("ascii"), keys.public)
    concealed = payload_codec.conceal(cipher.data, keys.mod_key)
    return payload_codec.frame(public, concealed)
