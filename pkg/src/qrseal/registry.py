"""Tag registry: staging and final stores backed by an append-only event log.

State lives in `<dir>/events.log`, one key=value record per line (see
textrec).  Mutations append an event and then apply it in memory, so a
replay of the log reconstructs the exact same state; nothing is ever
rewritten in place.  Event kinds:

    event=batch     batch created, carries the shared product metadata
    event=record    one staged unit (tag, batch, sequence number)
    event=dispense  unit handed to the printer (never re-dispensed)
    event=promote   QC accepted: staging -> final
    event=reject    QC rejected: terminal
    event=symbol    symbol file written for a tag (path bookkeeping)

A unit is in the staging store while STAGED and in the final store once
ACCEPTED; the two views are disjoint by construction.  Rejected units
are visible to neither.  All mutations funnel through one writer lock.
"""

from __future__ import annotations

import random
import secrets
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator

from . import textrec
from .errors import QrsealError
from .payload import BASE62_ALPHABET

TAG_LENGTH = 11

META_FIELDS = ("name", "batch", "manufacturer", "mfg_date", "expiry_date")

_sysrand = secrets.SystemRandom()


class RegistryError(QrsealError):
    pass


class InvalidParam(RegistryError):
    pass


class NotFound(RegistryError):
    pass


class BatchExhausted(RegistryError):
    pass


class IllegalTransition(RegistryError):
    pass


class StorageError(RegistryError):
    pass


class RecordState(Enum):
    STAGED = "STAGED"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class ProductRecord:
    private_tag: str
    batch_id: str
    public_string: str
    product_meta: dict[str, str]
    intended_regions: frozenset[str]
    state: RecordState
    created_at: str
    promoted_at: str = ""
    seq: int = 0
    dispensed: bool = False
    symbol_path: str = ""


@dataclass(frozen=True)
class Batch:
    batch_id: str
    count: int
    public_string: str
    intended_regions: frozenset[str]
    name: str
    manufacturer: str
    mfg_date: str
    expiry_date: str
    seal_key_id: str
    mod_key_id: str
    created_at: str


@dataclass(frozen=True)
class BatchSpec:
    """Batch descriptor as supplied by the operator; batch_id may be blank."""

    public_string: str
    intended_regions: frozenset[str] = frozenset()
    name: str = ""
    manufacturer: str = ""
    mfg_date: str = ""
    expiry_date: str = ""
    seal_key_id: str = ""
    mod_key_id: str = ""
    batch_id: str = ""


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def random_tag(rng: random.Random | None = None) -> str:
    rng = rng or _sysrand
    return "".join(rng.choice(BASE62_ALPHABET) for _ in range(TAG_LENGTH))


@dataclass
class _BatchState:
    batch: Batch
    tags_in_order: list[str] = field(default_factory=list)
    next_dispense: int = 0


class Registry:
    """Single-writer registry over one directory."""

    def __init__(self, directory: str | Path,
                 clock: Callable[[], str] = utc_now,
                 rng: random.Random | None = None):
        self.directory = Path(directory)
        self._clock = clock
        self._rng = rng or _sysrand
        self._lock = threading.Lock()
        self._records: dict[str, ProductRecord] = {}
        self._batches: dict[str, _BatchState] = {}
        self.directory.mkdir(parents=True, exist_ok=True)
        self._log_path = self.directory / "events.log"
        if self._log_path.exists():
            self._replay()

    # -- persistence --

    def _replay(self) -> None:
        with self._log_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    self._apply(textrec.parse_record(line))

    def _append(self, fields: list[tuple[str, str]]) -> None:
        line = textrec.dump_record(fields) + "\n"
        try:
            with self._log_path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot append to {self._log_path}: {exc}") from exc
        self._apply(textrec.parse_record(line))

    def _apply(self, fields: list[tuple[str, str]]) -> None:
        f = textrec.fields_dict(fields)
        kind = f.get("event")
        if kind == "batch":
            batch = Batch(
                batch_id=f["batch_id"],
                count=int(f["count"]),
                public_string=f["public"],
                intended_regions=frozenset(r for r in f["regions"].split(",") if r),
                name=f["name"],
                manufacturer=f["manufacturer"],
                mfg_date=f["mfg_date"],
                expiry_date=f["expiry_date"],
                seal_key_id=f["seal_key_id"],
                mod_key_id=f["mod_key_id"],
                created_at=f["at"],
            )
            self._batches[batch.batch_id] = _BatchState(batch)
        elif kind == "record":
            batch_state = self._batches[f["batch_id"]]
            batch = batch_state.batch
            record = ProductRecord(
                private_tag=f["tag"],
                batch_id=batch.batch_id,
                public_string=batch.public_string,
                product_meta={
                    "name": batch.name,
                    "batch": batch.batch_id,
                    "manufacturer": batch.manufacturer,
                    "mfg_date": batch.mfg_date,
                    "expiry_date": batch.expiry_date,
                },
                intended_regions=batch.intended_regions,
                state=RecordState.STAGED,
                created_at=f["at"],
                seq=int(f["seq"]),
            )
            self._records[record.private_tag] = record
            batch_state.tags_in_order.append(record.private_tag)
        elif kind == "dispense":
            tag = f["tag"]
            self._records[tag] = replace(self._records[tag], dispensed=True)
        elif kind == "promote":
            tag = f["tag"]
            self._records[tag] = replace(
                self._records[tag], state=RecordState.ACCEPTED, promoted_at=f["at"])
        elif kind == "reject":
            tag = f["tag"]
            self._records[tag] = replace(self._records[tag], state=RecordState.REJECTED)
        elif kind == "symbol":
            tag = f["tag"]
            self._records[tag] = replace(self._records[tag], symbol_path=f["path"])
        else:
            raise StorageError(f"unknown event kind {kind!r} in {self._log_path}")

    # -- batch lifecycle --

    def create_batch(self, spec: BatchSpec, count: int) -> Batch:
        """Stage `count` fresh units with unique random tags."""
        if count < 1:
            raise InvalidParam("count must be at least 1")
        with self._lock:
            batch_id = spec.batch_id or f"B{len(self._batches) + 1:04d}"
            if batch_id in self._batches:
                raise InvalidParam(f"batch {batch_id} already exists")
            now = self._clock()
            self._append([
                ("event", "batch"),
                ("batch_id", batch_id),
                ("count", str(count)),
                ("public", spec.public_string),
                ("regions", ",".join(sorted(spec.intended_regions))),
                ("name", spec.name),
                ("manufacturer", spec.manufacturer),
                ("mfg_date", spec.mfg_date),
                ("expiry_date", spec.expiry_date),
                ("seal_key_id", spec.seal_key_id),
                ("mod_key_id", spec.mod_key_id),
                ("at", now),
            ])
            for seq in range(count):
                tag = random_tag(self._rng)
                while tag in self._records:
                    tag = random_tag(self._rng)
                self._append([
                    ("event", "record"),
                    ("tag", tag),
                    ("batch_id", batch_id),
                    ("seq", str(seq)),
                    ("at", now),
                ])
            return self._batches[batch_id].batch

    def get_batch(self, batch_id: str) -> Batch:
        state = self._batches.get(batch_id)
        if state is None:
            raise NotFound(f"no batch {batch_id}")
        return state.batch

    def batch_tags(self, batch_id: str) -> list[str]:
        state = self._batches.get(batch_id)
        if state is None:
            raise NotFound(f"no batch {batch_id}")
        return list(state.tags_in_order)

    def next_unprinted(self, batch_id: str) -> ProductRecord:
        """Lowest-sequence staged, never-dispensed unit; marks it dispensed."""
        with self._lock:
            state = self._batches.get(batch_id)
            if state is None:
                raise NotFound(f"no batch {batch_id}")
            while state.next_dispense < len(state.tags_in_order):
                tag = state.tags_in_order[state.next_dispense]
                record = self._records[tag]
                if record.state is RecordState.STAGED and not record.dispensed:
                    self._append([("event", "dispense"), ("tag", tag), ("at", self._clock())])
                    return self._records[tag]
                state.next_dispense += 1
            raise BatchExhausted(f"batch {batch_id} has no unprinted units")

    # -- QC transitions --

    def verify_staging(self, private_tag: str) -> ProductRecord | None:
        record = self._records.get(private_tag)
        if record is not None and record.state is RecordState.STAGED:
            return record
        return None

    def promote(self, private_tag: str) -> ProductRecord:
        with self._lock:
            self._require_staged(private_tag)
            self._append([("event", "promote"), ("tag", private_tag), ("at", self._clock())])
            return self._records[private_tag]

    def reject(self, private_tag: str, reason: str = "") -> ProductRecord:
        with self._lock:
            self._require_staged(private_tag)
            self._append([
                ("event", "reject"), ("tag", private_tag),
                ("reason", reason), ("at", self._clock()),
            ])
            return self._records[private_tag]

    def _require_staged(self, private_tag: str) -> None:
        record = self._records.get(private_tag)
        if record is None:
            raise NotFound(f"no record for tag {private_tag}")
        if record.state is not RecordState.STAGED:
            raise IllegalTransition(
                f"tag {private_tag} is {record.state.value}, not STAGED")

    def lookup_final(self, private_tag: str) -> ProductRecord | None:
        record = self._records.get(private_tag)
        if record is not None and record.state is RecordState.ACCEPTED:
            return record
        return None

    def record_symbol_path(self, private_tag: str, path: str) -> None:
        with self._lock:
            if private_tag not in self._records:
                raise NotFound(f"no record for tag {private_tag}")
            self._append([("event", "symbol"), ("tag", private_tag), ("path", path)])

    # -- views --

    def accepted_records(self) -> Iterator[ProductRecord]:
        for record in self._records.values():
            if record.state is RecordState.ACCEPTED:
                yield record

    def all_records(self) -> Iterator[ProductRecord]:
        yield from self._records.values()
