"""Cloud-side scan verification service.

Holds the final store (accepted units only), decodes submitted symbols
with the shared pipeline, classifies counterfeiting signals, and appends
every attempt to an append-only scan log.  Classification is a pure
function of (record, prior events, incoming event, thresholds), so
replaying the log reproduces the same verdict sequence.

Signals, highest priority first:

  DUPLICATE_SUSPECT  the tag was seen from a second device, the total
                     scan count passed the limit, or two scans imply
                     faster-than-airliner travel between locations
  LOCATION_SUSPECT   the scan region is not in the batch's intended set
  AUTHENTIC          none of the above (repeat scans from one device
                     within the limit stay authentic but carry an alert)

UNKNOWN_TAG (decoded fine, not in the final store) and DECODE_FAILURE
(any pipeline stage rejected the symbol) are resolved before the rules
run and never carry product metadata.

On-disk layout under the service directory: `events.log` (registry,
read-only here), `ingest.log` (batches received over the wire), and
`scans.log` (every scan event).  All three survive restarts.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable

from . import textrec, wire
from .errors import QrsealError
from .pipeline import StageFailure, decode_private_tag
from .qrcode import SymbolFileError, parse_symbol
from .registry import Registry, utc_now
from .sealing import KeyMaterial

EARTH_RADIUS_KM = 6371.0


class ServiceError(QrsealError):
    pass


class ConflictError(ServiceError):
    """Ingest carried a tag that already exists with different metadata."""


class VerdictKind(Enum):
    AUTHENTIC = "AUTHENTIC"
    UNKNOWN_TAG = "UNKNOWN_TAG"
    DECODE_FAILURE = "DECODE_FAILURE"
    DUPLICATE_SUSPECT = "DUPLICATE_SUSPECT"
    LOCATION_SUSPECT = "LOCATION_SUSPECT"


@dataclass(frozen=True)
class ScanRules:
    """Thresholds for the counterfeit signals; paper gives none, these are config."""

    max_scans: int = 3
    device_limit: int = 2
    max_speed_kmh: float = 900.0


@dataclass(frozen=True)
class ScanEvent:
    tag: str  # "" when the symbol never resolved to a tag
    device_id: str
    region: str
    lat: float
    lon: float
    timestamp: str  # client-supplied, never trusted for ordering
    verdict: str
    alerts: tuple[str, ...]
    received_at: str


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    alerts: tuple[str, ...] = ()
    product: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ProductInfo:
    tag: str
    batch_id: str
    public_string: str
    name: str
    manufacturer: str
    mfg_date: str
    expiry_date: str
    regions: frozenset[str]

    def as_wire_fields(self) -> dict[str, str]:
        return {
            "tag": self.tag,
            "public": self.public_string,
            "name": self.name,
            "batch": self.batch_id,
            "manufacturer": self.manufacturer,
            "mfg_date": self.mfg_date,
            "expiry_date": self.expiry_date,
            "regions": ",".join(sorted(self.regions)),
        }


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlon = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def _parse_ts(value: str) -> datetime | None:
    try:
        return datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        return None


def classify_scan(record: ProductInfo, history: list[ScanEvent],
                  incoming: ScanEvent, rules: ScanRules) -> Verdict:
    """Pure rule table; history is every prior event for this tag."""
    duplicate: list[str] = []
    location: list[str] = []
    notes: list[str] = []

    devices = {e.device_id for e in history} | {incoming.device_id}
    if len(devices) >= rules.device_limit:
        duplicate.append(f"tag scanned from {len(devices)} distinct devices")

    total = len(history) + 1
    if total > rules.max_scans:
        duplicate.append(f"scan count {total} exceeds limit {rules.max_scans}")

    t_in = _parse_ts(incoming.timestamp)
    for prior in history:
        t_prior = _parse_ts(prior.timestamp)
        if t_in is None or t_prior is None:
            continue
        distance = haversine_km(prior.lat, prior.lon, incoming.lat, incoming.lon)
        hours = abs((t_in - t_prior).total_seconds()) / 3600.0
        if hours == 0.0:
            if distance > 1e-6:
                duplicate.append(
                    f"impossible travel: {distance:.0f} km with no time elapsed")
            continue
        speed = distance / hours
        if speed > rules.max_speed_kmh:
            duplicate.append(
                f"impossible travel: {distance:.0f} km in {hours:.2f} h "
                f"({speed:.0f} km/h)")

    if incoming.region not in record.regions:
        location.append(f"region {incoming.region} outside intended regions "
                        f"{','.join(sorted(record.regions))}")

    if not duplicate and total > 1:
        notes.append(f"repeat scan {total} of {rules.max_scans} from the same device")

    alerts = tuple(duplicate + location + notes)
    if duplicate:
        kind = VerdictKind.DUPLICATE_SUSPECT
    elif location:
        kind = VerdictKind.LOCATION_SUSPECT
    else:
        kind = VerdictKind.AUTHENTIC
    return Verdict(kind, alerts, record.as_wire_fields())


def product_from_record(record) -> ProductInfo:
    """Convert a registry ProductRecord to the service's view."""
    return ProductInfo(
        tag=record.private_tag,
        batch_id=record.batch_id,
        public_string=record.public_string,
        name=record.product_meta.get("name", ""),
        manufacturer=record.product_meta.get("manufacturer", ""),
        mfg_date=record.product_meta.get("mfg_date", ""),
        expiry_date=record.product_meta.get("expiry_date", ""),
        regions=record.intended_regions,
    )


class VerifyService:
    """State and request handling behind the HTTP endpoints."""

    def __init__(self, directory: str | Path, keys: KeyMaterial,
                 rules: ScanRules = ScanRules(),
                 clock: Callable[[], str] = utc_now):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.keys = keys
        self.rules = rules
        self._clock = clock
        self._lock = threading.Lock()
        self._final: dict[str, ProductInfo] = {}
        self._history: dict[str, list[ScanEvent]] = {}
        self._scan_log = self.directory / "scans.log"
        self._ingest_log = self.directory / "ingest.log"
        self._load_state()

    # -- startup --

    def _load_state(self) -> None:
        if (self.directory / "events.log").exists():
            registry = Registry(self.directory)
            for record in registry.accepted_records():
                info = product_from_record(record)
                self._final[info.tag] = info
        if self._ingest_log.exists():
            with self._ingest_log.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply_final_line(textrec.fields_dict(
                            textrec.parse_record(line)))
        if self._scan_log.exists():
            with self._scan_log.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        event = self._event_from_fields(textrec.parse_record(line))
                        if event.tag:
                            self._history.setdefault(event.tag, []).append(event)

    def _apply_final_line(self, f: dict[str, str]) -> None:
        info = ProductInfo(
            tag=f["tag"], batch_id=f["batch_id"], public_string=f["public"],
            name=f["name"], manufacturer=f["manufacturer"],
            mfg_date=f["mfg_date"], expiry_date=f["expiry_date"],
            regions=frozenset(r for r in f["regions"].split(",") if r),
        )
        self._final[info.tag] = info

    @staticmethod
    def _event_from_fields(fields: list[tuple[str, str]]) -> ScanEvent:
        f = textrec.fields_dict(fields)
        alerts = tuple(v for k, v in fields if k == "alert")
        return ScanEvent(
            tag=f["tag"], device_id=f["device_id"], region=f["region"],
            lat=float(f["lat"]), lon=float(f["lon"]), timestamp=f["timestamp"],
            verdict=f["verdict"], alerts=alerts, received_at=f["at"],
        )

    # -- endpoints --

    def handle_scan(self, request: wire.ScanRequest) -> wire.VerdictResponse:
        try:
            symbol = parse_symbol(request.symbol_text)
            decoded = decode_private_tag(symbol.modules, self.keys)
            tag = decoded.private_tag
            failure = None
        except (SymbolFileError, StageFailure) as exc:
            tag = ""
            failure = exc

        with self._lock:
            if failure is not None:
                verdict = Verdict(VerdictKind.DECODE_FAILURE, (str(failure),))
            else:
                record = self._final.get(tag)
                if record is None:
                    verdict = Verdict(VerdictKind.UNKNOWN_TAG,
                                      ("tag not found in the final store",))
                else:
                    verdict = classify_scan(record, self._history.get(tag, []),
                                            self._incoming_event(tag, request), self.rules)
            event = ScanEvent(
                tag=tag, device_id=request.device_id, region=request.region,
                lat=request.lat, lon=request.lon, timestamp=request.timestamp,
                verdict=verdict.kind.value, alerts=verdict.alerts,
                received_at=self._clock(),
            )
            self._append_event(event)
            if event.tag:
                self._history.setdefault(event.tag, []).append(event)
        return wire.VerdictResponse(verdict.kind.value, verdict.alerts, verdict.product)

    def _incoming_event(self, tag: str, request: wire.ScanRequest) -> ScanEvent:
        return ScanEvent(tag=tag, device_id=request.device_id, region=request.region,
                         lat=request.lat, lon=request.lon, timestamp=request.timestamp,
                         verdict="", alerts=(), received_at=self._clock())

    def decode_factory(self, symbol_text: str) -> list[tuple[str, str]]:
        """Factory-internal decode: tag only, no registry lookup, no event."""
        try:
            symbol = parse_symbol(symbol_text)
            decoded = decode_private_tag(symbol.modules, self.keys)
            return [("status", "ok"), ("tag", decoded.private_tag)]
        except SymbolFileError as exc:
            return [("status", "error"), ("stage", "qr-decode"), ("detail", str(exc))]
        except StageFailure as exc:
            return [("status", "error"), ("stage", exc.stage), ("detail", exc.detail)]

    def ingest_batch(self, batch: wire.BatchIngest) -> tuple[int, int]:
        """Idempotent final-store update; returns (ingested, skipped)."""
        ingested = skipped = 0
        with self._lock:
            infos = [ProductInfo(
                tag=tag, batch_id=batch.batch_id, public_string=batch.public_string,
                name=batch.name, manufacturer=batch.manufacturer,
                mfg_date=batch.mfg_date, expiry_date=batch.expiry_date,
                regions=frozenset(batch.regions),
            ) for tag in batch.tags]
            for info in infos:
                existing = self._final.get(info.tag)
                if existing is not None and existing != info:
                    raise ConflictError(
                        f"tag {info.tag} already registered with different metadata")
            for info in infos:
                if info.tag in self._final:
                    skipped += 1
                    continue
                self._append_final(info)
                self._final[info.tag] = info
                ingested += 1
        return ingested, skipped

    def lookup(self, tag: str) -> ProductInfo | None:
        return self._final.get(tag)

    def events_for(self, tag: str) -> list[ScanEvent]:
        return list(self._history.get(tag, []))

    # -- persistence --

    def _append_event(self, event: ScanEvent) -> None:
        fields = [
            ("at", event.received_at),
            ("tag", event.tag),
            ("device_id", event.device_id),
            ("region", event.region),
            ("lat", repr(event.lat)),
            ("lon", repr(event.lon)),
            ("timestamp", event.timestamp),
            ("verdict", event.verdict),
        ]
        fields += [("alert", a) for a in event.alerts]
        with self._scan_log.open("a", encoding="utf-8") as fh:
            fh.write(textrec.dump_record(fields) + "\n")
            fh.flush()

    def _append_final(self, info: ProductInfo) -> None:
        with self._ingest_log.open("a", encoding="utf-8") as fh:
            fh.write(textrec.dump_record([
                ("tag", info.tag),
                ("batch_id", info.batch_id),
                ("public", info.public_string),
                ("regions", ",".join(sorted(info.regions))),
                ("name", info.name),
                ("manufacturer", info.manufacturer),
                ("mfg_date", info.mfg_date),
                ("expiry_date", info.expiry_date),
            ]) + "\n")
            fh.flush()


# ---- HTTP layer ----

class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> VerifyService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, body: str) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/v1/health":
            self._send(200, wire.dump_status([("status", "ok")]))
        else:
            self._send(404, wire.dump_status([("status", "error"),
                                              ("detail", "no such endpoint")]))

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length).decode("utf-8")
        except (ValueError, UnicodeDecodeError):
            self._send(400, wire.dump_status([("status", "error"),
                                              ("detail", "unreadable body")]))
            return
        if self.path == "/v1/scans":
            self._post_scan(body)
        elif self.path == "/v1/decode":
            self._send(200, wire.dump_status(self.service.decode_factory(body)))
        elif self.path == "/v1/batches":
            self._post_batch(body)
        else:
            self._send(404, wire.dump_status([("status", "error"),
                                              ("detail", "no such endpoint")]))

    def _post_scan(self, body: str) -> None:
        try:
            request = wire.parse_scan_request(body)
        except wire.WireError as exc:
            self._send(400, wire.dump_status([("status", "error"), ("detail", str(exc))]))
            return
        response = self.service.handle_scan(request)
        self._send(200, wire.dump_verdict_response(response))

    def _post_batch(self, body: str) -> None:
        try:
            batch = wire.parse_batch_ingest(body)
        except wire.WireError as exc:
            self._send(400, wire.dump_status([("status", "error"), ("detail", str(exc))]))
            return
        try:
            ingested, skipped = self.service.ingest_batch(batch)
        except ConflictError as exc:
            self._send(409, wire.dump_status([("status", "conflict"), ("detail", str(exc))]))
            return
        self._send(200, wire.dump_status([("status", "ok"),
                                          ("ingested", str(ingested)),
                                          ("skipped", str(skipped))]))


class VerifyServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], service: VerifyService):
        super().__init__(address, _Handler)
        self.service = service


def start_server(service: VerifyService, host: str = "127.0.0.1",
                 port: int = 0) -> tuple[VerifyServer, threading.Thread]:
    """Run the server on a background thread; port 0 picks a free one."""
    server = VerifyServer((host, port), service)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
