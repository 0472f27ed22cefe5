"""Embedded, indexed event store.

Entities live in per-kind tables and events in per-category tables, with
secondary hash indexes on the selective attributes (file name and path,
process executable name, socket source/destination IP) and per-entity
adjacency lists sorted by event start time.

Readers always work against an immutable table snapshot; a commit builds
the next snapshot aside and swaps it in atomically, so concurrent readers
see either the pre-batch or the post-batch state, never a mix.
"""

from __future__ import annotations

import json
import struct
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import SnapshotError, StoreError, ValidationError
from .lang import ast
from .lang.eval import compile_entity_pred, compile_event_pred, pinned_kinds, required_equalities
from .model import (
    ENTITY_ATTRS,
    EVENT_OPS,
    Entity,
    EntityKind,
    Event,
    EventCategory,
    make_entity,
)

_MAGIC = b"PQL1"
_VERSION = 1

# Which category tables can hold a given operation type.
OPTYPE_CATEGORIES = {
    "read": (EventCategory.PROCESS_TO_FILE, EventCategory.PROCESS_TO_NETWORK),
    "readv": (EventCategory.PROCESS_TO_FILE, EventCategory.PROCESS_TO_NETWORK),
    "write": (EventCategory.PROCESS_TO_FILE, EventCategory.PROCESS_TO_NETWORK),
    "writev": (EventCategory.PROCESS_TO_FILE, EventCategory.PROCESS_TO_NETWORK),
    "execve": (EventCategory.PROCESS_TO_FILE, EventCategory.PROCESS_TO_PROCESS),
    "rename": (EventCategory.PROCESS_TO_FILE,),
    "fork": (EventCategory.PROCESS_TO_PROCESS,),
    "clone": (EventCategory.PROCESS_TO_PROCESS,),
    "recvfrom": (EventCategory.PROCESS_TO_NETWORK,),
    "sendto": (EventCategory.PROCESS_TO_NETWORK,),
}

_INDEXED = (
    (EntityKind.FILE, "name"),
    (EntityKind.FILE, "path"),
    (EntityKind.PROCESS, "exename"),
    (EntityKind.NETWORK, "srcip"),
    (EntityKind.NETWORK, "dstip"),
)

# Query attribute -> index entries that may answer an equality on it. The
# generic `name` fans out to files by name and processes by executable name.
_ATTR_INDEXES = {
    "name": ((EntityKind.FILE, "name"), (EntityKind.PROCESS, "exename")),
    "path": ((EntityKind.FILE, "path"),),
    "exename": ((EntityKind.PROCESS, "exename"),),
    "srcip": ((EntityKind.NETWORK, "srcip"),),
    "dstip": ((EntityKind.NETWORK, "dstip"),),
}


@dataclass
class _Tables:
    entities: list = field(default_factory=list)
    events: list = field(default_factory=list)
    id_by_key: dict = field(default_factory=dict)        # (kind, identity key) -> id
    by_kind: dict = field(default_factory=dict)          # EntityKind -> [entity id]
    by_category: dict = field(default_factory=dict)      # EventCategory -> [event id]
    indexes: dict = field(default_factory=dict)          # (kind, attr) -> value -> [entity id]
    out_edges: list = field(default_factory=list)        # entity id -> [event id], start-time sorted
    in_edges: list = field(default_factory=list)
    out_starts: list = field(default_factory=list)       # parallel start-time keys for bisect
    in_starts: list = field(default_factory=list)


def _empty_tables() -> _Tables:
    t = _Tables()
    for kind in EntityKind:
        t.by_kind[kind] = []
    for cat in EventCategory:
        t.by_category[cat] = []
    for entry in _INDEXED:
        t.indexes[entry] = {}
    return t


class StoreBatch:
    """Staging area for one ingest batch; entity ids continue the store's."""

    def __init__(self, store: "Store"):
        tables = store._tables
        self._base_keys = tables.id_by_key
        self.next_id = len(tables.entities)
        self.entities: list = []
        self._local: dict = {}

    def intern(self, kind: EntityKind, attrs: dict) -> int:
        """Return the id for (kind, attrs), creating the entity on first sight."""
        entity = make_entity(self.next_id, kind, attrs)
        key = (kind, entity.key)
        known = self._base_keys.get(key)
        if known is None:
            known = self._local.get(key)
        if known is not None:
            return known
        self._local[key] = entity.id
        self.entities.append(entity)
        self.next_id += 1
        return entity.id


class Store:
    def __init__(self, name: str):
        self.name = name
        self._tables = _empty_tables()
        self._write_lock = threading.Lock()

    # -- basic access ----------------------------------------------------------

    def entity_count(self) -> int:
        return len(self._tables.entities)

    def event_count(self) -> int:
        return len(self._tables.events)

    def entity(self, eid: int) -> Entity:
        t = self._tables
        if not 0 <= eid < len(t.entities):
            raise StoreError(f"unknown entity id {eid} in store {self.name!r}")
        return t.entities[eid]

    def event(self, eid: int) -> Event:
        t = self._tables
        if not 0 <= eid < len(t.events):
            raise StoreError(f"unknown event id {eid} in store {self.name!r}")
        return t.events[eid]

    def entities(self) -> list:
        return self._tables.entities

    def events(self) -> list:
        return self._tables.events

    def new_batch(self) -> StoreBatch:
        return StoreBatch(self)

    # -- commit ---------------------------------------------------------------

    def commit_batch(self, new_entities: Iterable[Entity], new_events: Iterable[Event]) -> None:
        """Append a batch atomically; readers see pre- or post-commit state."""
        with self._write_lock:
            old = self._tables
            t = _Tables(
                entities=list(old.entities),
                events=list(old.events),
                id_by_key=dict(old.id_by_key),
                by_kind={k: list(v) for k, v in old.by_kind.items()},
                by_category={k: list(v) for k, v in old.by_category.items()},
                indexes={k: {v: list(ids) for v, ids in d.items()} for k, d in old.indexes.items()},
                out_edges=[list(l) for l in old.out_edges],
                in_edges=[list(l) for l in old.in_edges],
            )
            for ent in new_entities:
                if ent.id != len(t.entities):
                    raise StoreError(f"entity id {ent.id} breaks dense assignment")
                t.entities.append(ent)
                t.id_by_key[(ent.kind, ent.key)] = ent.id
                t.by_kind[ent.kind].append(ent.id)
                t.out_edges.append([])
                t.in_edges.append([])
                for kind, attr in _INDEXED:
                    if ent.kind is kind:
                        value = ent.attrs.get(attr)
                        if value is not None:
                            t.indexes[(kind, attr)].setdefault(value, []).append(ent.id)
            n_entities = len(t.entities)
            for ev in new_events:
                if ev.id != len(t.events):
                    raise StoreError(f"event id {ev.id} breaks dense assignment")
                if not (0 <= ev.srcid < n_entities and 0 <= ev.dstid < n_entities):
                    raise StoreError(f"event {ev.id} references unknown entities")
                if ev.srcid == ev.dstid:
                    raise StoreError(f"event {ev.id} has identical endpoints")
                if ev.starttime > ev.endtime:
                    raise ValidationError(f"event {ev.id} has starttime after endtime")
                t.events.append(ev)
                t.by_category[ev.category].append(ev.id)
                t.out_edges[ev.srcid].append(ev.id)
                t.in_edges[ev.dstid].append(ev.id)
            events = t.events
            key = lambda i: (events[i].starttime, i)
            for lists, starts in ((t.out_edges, t.out_starts), (t.in_edges, t.in_starts)):
                for l in lists:
                    l.sort(key=key)
                    starts.append([events[i].starttime for i in l])
            self._tables = t

    # -- scans ------------------------------------------------------------------

    def scan_entities(self, kind: Optional[EntityKind] = None, pred: Optional[ast.Expr] = None) -> list:
        """Ids of entities matching `pred` (and `kind` if given), ascending.

        An equality on an indexed attribute narrows the scan to a posting
        list; the result is identical to a full scan either way.
        """
        t = self._tables
        kinds = set(EntityKind) if kind is None else {kind}
        if pred is not None:
            pinned = pinned_kinds(pred)
            if pinned is not None:
                kinds &= pinned
        if not kinds:
            return []
        if pred is None:
            out = []
            for k in kinds:
                out.extend(t.by_kind[k])
            return sorted(out)

        check = compile_entity_pred(pred)
        entities = t.entities
        candidates = self._index_candidates(pred, kinds)
        if candidates is not None:
            return sorted(i for i in candidates if check(entities[i]))
        out = []
        for k in sorted(kinds, key=lambda x: x.value):
            out.extend(i for i in t.by_kind[k] if check(entities[i]))
        return sorted(out)

    def _index_candidates(self, pred: ast.Expr, kinds: set) -> Optional[list]:
        """Smallest posting-list union answering a required equality, if any."""
        t = self._tables
        best = None
        for attr, value in required_equalities(pred):
            entries = _ATTR_INDEXES.get(attr)
            if not entries:
                continue
            ids: list = []
            for kind, iattr in entries:
                if kind in kinds:
                    ids.extend(t.indexes[(kind, iattr)].get(value, ()))
            if best is None or len(ids) < len(best):
                best = ids
        return best

    def scan_events(
        self,
        pred: Optional[ast.Expr] = None,
        src_in: Optional[set] = None,
        dst_in: Optional[set] = None,
        window: Optional[tuple] = None,
    ) -> list:
        """Ids of events matching the predicate and endpoint/time restrictions.

        With an endpoint restriction the scan walks adjacency lists of the
        smaller restricted side instead of the event tables.
        """
        t = self._tables
        check = compile_event_pred(pred)
        t0, t1 = window if window is not None else (None, None)
        events = t.events

        def keep(ev: Event) -> bool:
            if src_in is not None and ev.srcid not in src_in:
                return False
            if dst_in is not None and ev.dstid not in dst_in:
                return False
            if t0 is not None and (ev.starttime > t1 or ev.endtime < t0):
                return False
            return check(ev)

        if src_in is not None or dst_in is not None:
            if dst_in is None or (src_in is not None and len(src_in) <= len(dst_in)):
                lists = t.out_edges
                ids = src_in
            else:
                lists = t.in_edges
                ids = dst_in
            out = set()
            for entity_id in ids:
                if 0 <= entity_id < len(lists):
                    for ev_id in lists[entity_id]:
                        if keep(events[ev_id]):
                            out.add(ev_id)
            return sorted(out)

        categories = list(EventCategory)
        if pred is not None:
            for attr, value in required_equalities(pred):
                if attr == "optype":
                    categories = [c for c in categories if c in OPTYPE_CATEGORIES.get(value, ())]
        out = []
        for cat in categories:
            out.extend(i for i in t.by_category[cat] if keep(events[i]))
        return sorted(out)

    def neighbors(self, entity_id: int, direction: str, time_bound: Optional[tuple] = None) -> list:
        """Events adjacent to an entity, start-time sorted.

        `direction` is "in" or "out"; `time_bound` is ("start_lt", t) for a
        binary-searched prefix of events starting before t, or ("end_gt", t)
        for events ending after t.
        """
        t = self._tables
        if not 0 <= entity_id < len(t.entities):
            raise StoreError(f"unknown entity id {entity_id} in store {self.name!r}")
        if direction == "in":
            ids, starts = t.in_edges[entity_id], t.in_starts[entity_id]
        elif direction == "out":
            ids, starts = t.out_edges[entity_id], t.out_starts[entity_id]
        else:
            raise StoreError(f"direction must be 'in' or 'out', got {direction!r}")
        events = t.events
        if time_bound is None:
            return [events[i] for i in ids]
        op, instant = time_bound
        if op == "start_lt":
            cut = bisect_left(starts, instant)
            return [events[i] for i in ids[:cut]]
        if op == "end_gt":
            # events starting after the bound always qualify (end >= start);
            # the earlier part of the list is filtered by end time.
            cut = bisect_right(starts, instant)
            head = [events[i] for i in ids[:cut] if events[i].endtime > instant]
            head.extend(events[i] for i in ids[cut:])
            return head
        raise StoreError(f"unknown time bound {op!r}")

    def selectivity_count(self, pred: Optional[ast.Expr]) -> int:
        """Cheap cardinality estimate; exact for indexed equalities."""
        t = self._tables
        if pred is not None:
            candidates = self._index_candidates(pred, set(EntityKind))
            if candidates is not None:
                return len(candidates)
        return len(t.entities)

    # -- snapshots ----------------------------------------------------------------

    def save(self, path: str) -> None:
        t = self._tables
        sections = [
            ("meta", json.dumps({
                "name": self.name,
                "entities": len(t.entities),
                "events": len(t.events),
            }).encode()),
            ("entities", _pack_entities(t.entities)),
            ("events", _pack_events(t.events)),
        ]
        with open(path, "wb") as fp:
            fp.write(_MAGIC)
            fp.write(struct.pack("<HH", _VERSION, 0))
            for name, payload in sections:
                raw = name.encode()
                fp.write(struct.pack("<H", len(raw)))
                fp.write(raw)
                fp.write(struct.pack("<Q", len(payload)))
                fp.write(payload)

    @classmethod
    def load(cls, path: str) -> "Store":
        with open(path, "rb") as fp:
            if fp.read(4) != _MAGIC:
                raise SnapshotError(f"{path}: not a store snapshot")
            version, _ = struct.unpack("<HH", fp.read(4))
            if version != _VERSION:
                raise SnapshotError(f"{path}: unsupported snapshot version {version}")
            sections = {}
            while True:
                head = fp.read(2)
                if not head:
                    break
                (name_len,) = struct.unpack("<H", head)
                name = fp.read(name_len).decode()
                (size,) = struct.unpack("<Q", fp.read(8))
                payload = fp.read(size)
                if len(payload) != size:
                    raise SnapshotError(f"{path}: truncated section {name!r}")
                sections[name] = payload
        for required in ("meta", "entities", "events"):
            if required not in sections:
                raise SnapshotError(f"{path}: missing section {required!r}")
        meta = json.loads(sections["meta"])
        store = cls(meta["name"])
        entities = _unpack_entities(sections["entities"])
        events = _unpack_events(sections["events"], entities)
        if len(entities) != meta["entities"] or len(events) != meta["events"]:
            raise SnapshotError(f"{path}: section sizes disagree with metadata")
        store.commit_batch(entities, events)
        return store


# -- snapshot payload codecs -----------------------------------------------------

_KIND_CODES = {EntityKind.FILE: 0, EntityKind.PROCESS: 1, EntityKind.NETWORK: 2}
_KIND_BY_CODE = {v: k for k, v in _KIND_CODES.items()}
_OP_CODES = {op: i for i, op in enumerate(EVENT_OPS)}
_OP_BY_CODE = {v: k for k, v in _OP_CODES.items()}
_NONE_LEN = 0xFFFFFFFF


def _pack_str(out: list, value) -> None:
    if value is None:
        out.append(struct.pack("<I", _NONE_LEN))
        return
    raw = str(value).encode()
    out.append(struct.pack("<I", len(raw)))
    out.append(raw)


def _pack_entities(entities: list) -> bytes:
    out = [struct.pack("<I", len(entities))]
    for ent in entities:
        out.append(struct.pack("<B", _KIND_CODES[ent.kind]))
        for attr in ENTITY_ATTRS[ent.kind]:
            value = ent.attrs.get(attr)
            if attr in ("pid", "srcport", "dstport"):
                out.append(struct.pack("<q", -1 if value is None else int(value)))
            else:
                _pack_str(out, value)
    return b"".join(out)


def _pack_events(events: list) -> bytes:
    out = [struct.pack("<I", len(events))]
    for ev in events:
        out.append(struct.pack(
            "<IIBqqq", ev.srcid, ev.dstid, _OP_CODES[ev.optype],
            ev.starttime, ev.endtime, ev.amount,
        ))
        _pack_str(out, ev.note)
    return b"".join(out)


class _Reader:
    def __init__(self, payload: bytes):
        self.buf = payload
        self.pos = 0

    def take(self, fmt: str):
        values = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += struct.calcsize(fmt)
        return values

    def take_str(self):
        (n,) = self.take("<I")
        if n == _NONE_LEN:
            return None
        raw = self.buf[self.pos:self.pos + n]
        self.pos += n
        return raw.decode()


def _unpack_entities(payload: bytes) -> list:
    r = _Reader(payload)
    (count,) = r.take("<I")
    entities = []
    for eid in range(count):
        (code,) = r.take("<B")
        kind = _KIND_BY_CODE[code]
        attrs = {}
        for attr in ENTITY_ATTRS[kind]:
            if attr in ("pid", "srcport", "dstport"):
                (value,) = r.take("<q")
                attrs[attr] = None if value == -1 else value
            else:
                attrs[attr] = r.take_str()
        entities.append(make_entity(eid, kind, attrs))
    return entities


def _unpack_events(payload: bytes, entities: list) -> list:
    from .model import derive_category

    r = _Reader(payload)
    (count,) = r.take("<I")
    events = []
    for eid in range(count):
        src, dst, opcode, ts, te, amount = r.take("<IIBqqq")
        note = r.take_str()
        src_kind = entities[src].kind
        dst_kind = entities[dst].kind
        object_kind = dst_kind if src_kind is EntityKind.PROCESS else src_kind
        if src_kind is not EntityKind.PROCESS and dst_kind is not EntityKind.PROCESS:
            raise SnapshotError(f"event {eid} joins two non-process entities")
        category = derive_category(EntityKind.PROCESS, object_kind)
        events.append(Event(eid, src, dst, _OP_BY_CODE[opcode], ts, te, amount, category, note))
    return events
