"""Wire bodies for the verification HTTP API.

All bodies are UTF-8 text with LF newlines and a fixed field order, so
requests and responses are byte-stable for golden-file tests.

POST /v1/scans
    line 1: device_id= region= lat= lon= timestamp=   (one textrec record)
    rest:   the QRSYM symbol text, verbatim
POST /v1/decode
    the QRSYM symbol text, verbatim
POST /v1/batches
    one record per line: first `record=batch ...`, then `record=product tag=...`
Responses
    one key=value field per line; `alert=` may repeat; product metadata
    fields appear only when the verdict carries product information.

This module handles text only; symbols stay opaque strings here so the
scan client can build requests without linking any decoding logic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import textrec
from .errors import QrsealError

SCAN_FIELDS = ("device_id", "region", "lat", "lon", "timestamp")
PRODUCT_FIELDS = ("tag", "public", "name", "batch", "manufacturer",
                  "mfg_date", "expiry_date", "regions")


class WireError(QrsealError):
    pass


@dataclass(frozen=True)
class ScanRequest:
    device_id: str
    region: str
    lat: float
    lon: float
    timestamp: str
    symbol_text: str


def dump_scan_request(req: ScanRequest) -> str:
    header = textrec.dump_record([
        ("device_id", req.device_id),
        ("region", req.region),
        ("lat", repr(req.lat)),
        ("lon", repr(req.lon)),
        ("timestamp", req.timestamp),
    ])
    return header + "\n" + req.symbol_text


def parse_scan_request(body: str) -> ScanRequest:
    header, sep, symbol_text = body.partition("\n")
    if not sep or not symbol_text:
        raise WireError("scan request must carry a header line and a symbol")
    try:
        fields = textrec.fields_dict(textrec.parse_record(header))
        lat = float(fields["lat"])
        lon = float(fields["lon"])
        return ScanRequest(fields["device_id"], fields["region"], lat, lon,
                           fields["timestamp"], symbol_text)
    except (textrec.RecordSyntaxError, KeyError, ValueError) as exc:
        raise WireError(f"malformed scan request header: {exc}") from exc


@dataclass(frozen=True)
class VerdictResponse:
    verdict: str
    alerts: tuple[str, ...] = ()
    product: dict[str, str] = field(default_factory=dict)


def dump_verdict_response(resp: VerdictResponse) -> str:
    lines = [textrec.dump_record([("verdict", resp.verdict)])]
    lines += [textrec.dump_record([("alert", a)]) for a in resp.alerts]
    if resp.product:
        lines += [textrec.dump_record([(name, resp.product.get(name, ""))])
                  for name in PRODUCT_FIELDS]
    return "\n".join(lines) + "\n"


def parse_verdict_response(body: str) -> VerdictResponse:
    verdict = ""
    alerts: list[str] = []
    product: dict[str, str] = {}
    try:
        for line in body.splitlines():
            if not line.strip():
                continue
            fields = textrec.parse_record(line)
            for key, value in fields:
                if key == "verdict":
                    verdict = value
                elif key == "alert":
                    alerts.append(value)
                elif key in PRODUCT_FIELDS:
                    product[key] = value
                else:
                    raise WireError(f"unexpected response field {key!r}")
    except textrec.RecordSyntaxError as exc:
        raise WireError(f"malformed response: {exc}") from exc
    if not verdict:
        raise WireError("response carries no verdict")
    return VerdictResponse(verdict, tuple(alerts), product)


@dataclass(frozen=True)
class BatchIngest:
    batch_id: str
    public_string: str
    regions: tuple[str, ...]
    name: str
    manufacturer: str
    mfg_date: str
    expiry_date: str
    tags: tuple[str, ...]


def dump_batch_ingest(batch: BatchIngest) -> str:
    lines = [textrec.dump_record([
        ("record", "batch"),
        ("batch_id", batch.batch_id),
        ("public", batch.public_string),
        ("regions", ",".join(batch.regions)),
        ("name", batch.name),
        ("manufacturer", batch.manufacturer),
        ("mfg_date", batch.mfg_date),
        ("expiry_date", batch.expiry_date),
    ])]
    lines += [textrec.dump_record([("record", "product"), ("tag", tag)])
              for tag in batch.tags]
    return "\n".join(lines) + "\n"


def parse_batch_ingest(body: str) -> BatchIngest:
    lines = [ln for ln in body.splitlines() if ln.strip()]
    if not lines:
        raise WireError("empty batch ingest body")
    try:
        head = textrec.fields_dict(textrec.parse_record(lines[0]))
        if head.get("record") != "batch":
            raise WireError("first ingest record must be the batch header")
        tags = []
        for line in lines[1:]:
            fields = textrec.fields_dict(textrec.parse_record(line))
            if fields.get("record") != "product" or "tag" not in fields:
                raise WireError("ingest body may only carry product records after the header")
            tags.append(fields["tag"])
        return BatchIngest(
            batch_id=head["batch_id"],
            public_string=head["public"],
            regions=tuple(r for r in head["regions"].split(",") if r),
            name=head["name"],
            manufacturer=head["manufacturer"],
            mfg_date=head["mfg_date"],
            expiry_date=head["expiry_date"],
            tags=tuple(tags),
        )
    except (textrec.RecordSyntaxError, KeyError) as exc:
        raise WireError(f"malformed batch ingest: {exc}") from exc


def dump_status(fields: list[tuple[str, str]]) -> str:
    return "\n".join(textrec.dump_record([f]) for f in fields) + "\n"


def parse_status(body: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in body.splitlines():
        if line.strip():
            out.update(textrec.fields_dict(textrec.parse_record(line)))
    return out
