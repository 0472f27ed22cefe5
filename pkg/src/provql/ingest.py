"""Audit-log ingest: JSONL parsing, entity resolution, flow direction.

Each line describes one system call with its subject process and object
(file, process, or socket). Failed calls and unrecognized syscalls are
counted and skipped, never fatal. Events are reduced before they reach the
store, and the whole batch lands atomically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

from .model import EntityKind, Event, derive_category
from .reduction import ReductionConfig, reduce_events, renumber
from .store import Store

# Syscalls handled per event category.
SYSCALLS_BY_CATEGORY = {
    "ProcessToFile": ("read", "readv", "write", "writev", "execve", "rename"),
    "ProcessToProcess": ("execve", "fork", "clone"),
    "ProcessToNetwork": ("read", "readv", "recvfrom", "recvmsg", "sendto", "write", "writev"),
}
RECOGNIZED_SYSCALLS = frozenset(s for group in SYSCALLS_BY_CATEGORY.values() for s in group)

# Direction of information flow. Reads pull data from the object into the
# subject; everything else pushes from the subject into the object.
OBJECT_TO_SUBJECT = frozenset(("read", "readv", "recvfrom", "recvmsg"))

# recvmsg is ingested but stored under the recvfrom operation name, which is
# the vocabulary the query language exposes.
_OPTYPE_ALIASES = {"recvmsg": "recvfrom"}

_KIND_SYSCALLS = {
    EntityKind.FILE: frozenset(SYSCALLS_BY_CATEGORY["ProcessToFile"]),
    EntityKind.PROCESS: frozenset(SYSCALLS_BY_CATEGORY["ProcessToProcess"]),
    EntityKind.NETWORK: frozenset(SYSCALLS_BY_CATEGORY["ProcessToNetwork"]),
}


@dataclass
class RawRecord:
    syscall: str
    success: bool
    ts: int
    te: int
    bytes: int
    host: str
    subject: dict
    object_kind: EntityKind
    object_attrs: dict
    note: Optional[str] = None  # rename carries the old path here


@dataclass
class IngestStats:
    lines: int = 0
    records: int = 0
    malformed: int = 0
    failed_filtered: int = 0
    unrecognized: int = 0
    inconsistent: int = 0
    events_in: int = 0
    events_appended: int = 0

    @property
    def merged_away(self) -> int:
        return self.events_in - self.events_appended

    def summary(self) -> str:
        return (
            f"{self.records} records from {self.lines} lines "
            f"(malformed={self.malformed}, failed={self.failed_filtered}, "
            f"unrecognized={self.unrecognized}, inconsistent={self.inconsistent}); "
            f"{self.events_appended} events stored, {self.merged_away} merged away"
        )


def parse_jsonl(lines: Iterable, stats: IngestStats) -> Iterator[RawRecord]:
    """Yield well-formed records in file order; count and skip the rest."""
    for line in lines:
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        line = line.strip()
        if not line:
            continue
        stats.lines += 1
        try:
            doc = json.loads(line)
            syscall = doc["syscall"]
            if syscall not in RECOGNIZED_SYSCALLS:
                stats.unrecognized += 1
                continue
            obj = doc["object"]
            record = RawRecord(
                syscall=syscall,
                success=bool(doc["success"]),
                ts=int(doc["ts"]),
                te=int(doc["te"]),
                bytes=max(0, int(doc.get("bytes", 0))),
                host=str(doc.get("host", "")),
                subject=dict(doc["subject"]),
                object_kind=EntityKind.from_name(obj["kind"]),
                object_attrs={k: v for k, v in obj.items() if k != "kind"},
                note=obj.get("note"),
            )
        except Exception:
            stats.malformed += 1
            continue
        if record.ts > record.te:
            stats.malformed += 1
            continue
        stats.records += 1
        yield record


def resolve(records: Iterable[RawRecord], store: Store, cfg: Optional[ReductionConfig] = None,
            stats: Optional[IngestStats] = None) -> int:
    """Turn records into deduplicated entities and flow-directed events.

    Returns the number of events appended after reduction. Entity ids are
    assigned in first-seen order, so the same input always produces the
    same store contents.
    """
    stats = stats if stats is not None else IngestStats()
    batch = store.new_batch()
    protos: list = []
    for record in records:
        if not record.success:
            stats.failed_filtered += 1
            continue
        if record.syscall not in _KIND_SYSCALLS[record.object_kind]:
            stats.inconsistent += 1
            continue
        try:
            subject_id = batch.intern(EntityKind.PROCESS, record.subject)
            object_id = batch.intern(record.object_kind, record.object_attrs)
        except Exception:
            stats.malformed += 1
            continue
        if subject_id == object_id:
            stats.inconsistent += 1
            continue
        optype = _OPTYPE_ALIASES.get(record.syscall, record.syscall)
        if record.syscall in OBJECT_TO_SUBJECT:
            src, dst = object_id, subject_id
        else:
            src, dst = subject_id, object_id
        category = derive_category(EntityKind.PROCESS, record.object_kind)
        protos.append(Event(
            id=-1, srcid=src, dstid=dst, optype=optype,
            starttime=record.ts, endtime=record.te, amount=record.bytes,
            category=category, note=record.note,
        ))
    stats.events_in += len(protos)
    protos.sort(key=lambda e: (e.starttime, e.endtime, e.srcid, e.dstid, e.optype))
    reduced, _ = reduce_events(protos, cfg)
    events = renumber(reduced, start=store.event_count())
    store.commit_batch(batch.entities, events)
    stats.events_appended += len(events)
    return len(events)


def ingest_stream(fp: IO, store: Store, cfg: Optional[ReductionConfig] = None) -> IngestStats:
    """Parse and resolve a JSONL stream into the store; returns stats."""
    stats = IngestStats()
    resolve(parse_jsonl(fp, stats), store, cfg, stats)
    return stats


def ingest_file(path: str, store: Store, cfg: Optional[ReductionConfig] = None) -> IngestStats:
    with open(path, "rb") as fp:
        return ingest_stream(fp, store, cfg)
