"""Seeded simulation of the print / inspect / sort loop.

Each staged unit is encoded to a symbol, "printed" through a noise model
that flips every module independently with probability p (function
patterns included; a smeared nozzle does not respect geometry), then
inspected: decode the protected tag and check it against the staging
store.  The unit is promoted on acceptance and rejected otherwise, and
the acceptance rule is exactly decode-succeeded AND staging-hit.

The noise stream is xorshift64star seeded with seed XOR DISTORTION_SEED_XOR,
one draw per module, so a (config, registry) pair fully determines the run.
Reports serialize to canonical text that excludes wall-clock timing, which
lives only on the in-memory report object.
"""

from __future__ import annotations

import time
import urllib.request
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import wire
from .errors import QrsealError
from .pipeline import StageFailure, decode_private_tag, encode_unit_payload
from .qrcode import EcLevel, QrSymbol, dump_symbol, encode_symbol
from .registry import BatchExhausted, Registry
from .sealing import KeyMaterial
from .xorshift import DISTORTION_SEED_XOR, XorShift64Star


class LineError(QrsealError):
    pass


class DecodeMode(Enum):
    INTEGRATED = "integrated"
    REMOTE = "remote"


@dataclass(frozen=True)
class LineConfig:
    batch_id: str
    flip_probability: float = 0.0
    decode_mode: DecodeMode = DecodeMode.INTEGRATED
    rng_seed: int = 0
    ec_level: EcLevel = EcLevel.Q

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise LineError("flip_probability must be within [0, 1]")


@dataclass(frozen=True)
class InspectResult:
    tag: str | None  # decoded private tag, None when decode failed
    accepted: bool
    reason: str  # "" on accept, failed stage or "staging-miss" otherwise


@dataclass(frozen=True)
class UnitOutcome:
    seq: int
    tag: str
    flipped_modules: int
    decode_ok: bool
    staging_hit: bool
    final_state: str
    reason: str


@dataclass
class LineReport:
    batch_id: str
    mode: DecodeMode
    ec_level: EcLevel
    flip_probability: float
    rng_seed: int
    units: list[UnitOutcome] = field(default_factory=list)
    decode_seconds: list[float] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return sum(1 for u in self.units if u.final_state == "ACCEPTED")

    @property
    def rejected(self) -> int:
        return sum(1 for u in self.units if u.final_state == "REJECTED")

    def canonical_text(self) -> str:
        """Deterministic serialization; timing intentionally left out."""
        from . import textrec

        lines = [textrec.dump_record([
            ("report", "line"),
            ("batch_id", self.batch_id),
            ("mode", self.mode.value),
            ("ec", self.ec_level.name),
            ("flip_prob", repr(self.flip_probability)),
            ("seed", str(self.rng_seed)),
            ("units", str(len(self.units))),
            ("accepted", str(self.accepted)),
            ("rejected", str(self.rejected)),
        ])]
        for u in self.units:
            lines.append(textrec.dump_record([
                ("unit", str(u.seq)),
                ("tag", u.tag),
                ("flipped", str(u.flipped_modules)),
                ("decode_ok", "1" if u.decode_ok else "0"),
                ("staging_hit", "1" if u.staging_hit else "0"),
                ("final", u.final_state),
                ("reason", u.reason),
            ]))
        return "\n".join(lines) + "\n"


def distort(sym: QrSymbol, p: float, rng: XorShift64Star) -> QrSymbol:
    """Flip each module independently with probability p (seeded stream)."""
    modules = [[cell != rng.next_bool(p) for cell in row] for row in sym.modules]
    return QrSymbol(sym.version, sym.ec_level, sym.mask_id, modules)


class QcLine:
    """One factory line bound to a registry, key material, and decode backend."""

    def __init__(self, registry: Registry, keys: KeyMaterial,
                 server_url: str | None = None):
        self.registry = registry
        self.keys = keys
        self.server_url = server_url.rstrip("/") if server_url else None

    def inspect(self, sym: QrSymbol, mode: DecodeMode) -> InspectResult:
        """Decode (locally or via the factory endpoint) and check staging."""
        if mode is DecodeMode.INTEGRATED:
            try:
                tag = decode_private_tag(sym.modules, self.keys).private_tag
            except StageFailure as exc:
                return InspectResult(None, False, exc.stage)
        else:
            tag, stage = self._remote_decode(sym)
            if tag is None:
                return InspectResult(None, False, stage)
        if self.registry.verify_staging(tag) is None:
            return InspectResult(tag, False, "staging-miss")
        return InspectResult(tag, True, "")

    def _remote_decode(self, sym: QrSymbol) -> tuple[str | None, str]:
        if not self.server_url:
            raise LineError("remote decode requested without a server URL")
        body = dump_symbol(sym).encode("utf-8")
        req = urllib.request.Request(
            self.server_url + "/v1/decode", data=body,
            headers={"Content-Type": "text/plain; charset=utf-8"})
        with urllib.request.urlopen(req) as resp:
            fields = wire.parse_status(resp.read().decode("utf-8"))
        if fields.get("status") == "ok":
            return fields["tag"], ""
        return None, fields.get("stage", "qr-decode")

    def run(self, cfg: LineConfig, symbol_dir: str | Path | None = None) -> LineReport:
        """Process every unprinted unit of the batch; returns the full report."""
        batch = self.registry.get_batch(cfg.batch_id)
        noise = XorShift64Star(cfg.rng_seed ^ DISTORTION_SEED_XOR)
        report = LineReport(cfg.batch_id, cfg.decode_mode, cfg.ec_level,
                            cfg.flip_probability, cfg.rng_seed)
        out_dir = Path(symbol_dir) if symbol_dir else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)

        while True:
            try:
                record = self.registry.next_unprinted(cfg.batch_id)
            except BatchExhausted:
                break
            payload = encode_unit_payload(batch.public_string, record.private_tag,
                                          self.keys)
            symbol = encode_symbol(payload, cfg.ec_level)
            printed = distort(symbol, cfg.flip_probability, noise)
            flipped = sum(a != b for ra, rb in zip(symbol.modules, printed.modules)
                          for a, b in zip(ra, rb))
            if out_dir:
                path = out_dir / f"{record.private_tag}.qrsym"
                path.write_text(dump_symbol(printed), encoding="utf-8")
                self.registry.record_symbol_path(record.private_tag, str(path))

            started = time.perf_counter()
            result = self.inspect(printed, cfg.decode_mode)
            report.decode_seconds.append(time.perf_counter() - started)

            if result.accepted:
                if result.tag != record.private_tag:
                    raise LineError(
                        f"decoded tag {result.tag} does not match dispensed unit "
                        f"{record.private_tag}")
                self.registry.promote(record.private_tag)
                final_state = "ACCEPTED"
            else:
                self.registry.reject(record.private_tag, result.reason)
                final_state = "REJECTED"
            report.units.append(UnitOutcome(
                seq=record.seq,
                tag=record.private_tag,
                flipped_modules=flipped,
                decode_ok=result.tag is not None,
                staging_hit=result.accepted,
                final_state=final_state,
                reason=result.reason,
            ))
        return report
