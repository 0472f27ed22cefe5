"""Core domain types: entities, events, and immutable event graphs.

Entities are files, processes, and network sockets; events are directed
interactions between two entities where the edge direction follows the
information flow (a file read points file -> process, a write points
process -> file).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .errors import IngestError

# Keys qualify every element with the data source it came from, so graphs
# drawn from several stores can be combined without id collisions.
ElemKey = tuple[str, int]


class EntityKind(enum.Enum):
    PROCESS = "process"
    FILE = "file"
    NETWORK = "network"

    @classmethod
    def from_name(cls, name: str) -> "EntityKind":
        try:
            return cls(name)
        except ValueError:
            raise IngestError(f"unknown entity kind {name!r}") from None


class EventCategory(enum.Enum):
    PROCESS_TO_FILE = "ProcessToFile"
    PROCESS_TO_PROCESS = "ProcessToProcess"
    PROCESS_TO_NETWORK = "ProcessToNetwork"


# Attributes each entity kind carries. `user`/`group`/`protocol` are kept on
# the entities but are not part of the query expression vocabulary.
ENTITY_ATTRS = {
    EntityKind.FILE: ("name", "path", "user", "group"),
    EntityKind.PROCESS: ("pid", "exename", "exepath", "user", "group", "cmdline"),
    EntityKind.NETWORK: ("srcip", "srcport", "dstip", "dstport", "protocol"),
}

# Attribute tokens the expression language accepts.
STRING_ATTRIBUTES = ("type", "name", "path", "dstip", "srcip", "exename", "exepath", "cmdline", "optype")
NUMERIC_ATTRIBUTES = ("id", "srcid", "dstid", "starttime", "endtime", "amount", "pid", "srcport", "dstport")

EVENT_OPS = ("read", "write", "execve", "readv", "writev", "rename", "fork", "clone", "recvfrom", "sendto")

_IDENTITY_FIELDS = {
    EntityKind.PROCESS: ("exename", "pid"),
    EntityKind.FILE: ("path",),
    EntityKind.NETWORK: ("srcip", "srcport", "dstip", "dstport", "protocol"),
}


def identity_key(kind: EntityKind, attrs: Mapping[str, object]) -> str:
    """Canonical identity string for an entity.

    Processes are keyed by executable name and pid, files by absolute path,
    sockets by the full 5-tuple. Raises IngestError naming the first missing
    identity attribute.
    """
    for f in _IDENTITY_FIELDS[kind]:
        if attrs.get(f) is None:
            raise IngestError(f"{kind.value} entity is missing identity attribute {f!r}")
    if kind is EntityKind.PROCESS:
        return f"{attrs['exename']}:{attrs['pid']}"
    if kind is EntityKind.FILE:
        return str(attrs["path"])
    return "{srcip}:{srcport}:{dstip}:{dstport}:{protocol}".format(**attrs)


@dataclass(slots=True)
class Entity:
    """One file, process, or network socket. Immutable after construction."""

    id: int
    kind: EntityKind
    attrs: dict
    key: str

    def __repr__(self) -> str:  # keep store dumps readable
        return f"Entity({self.id}, {self.kind.value}, {self.key!r})"


def make_entity(eid: int, kind: EntityKind, attrs: Mapping[str, object]) -> Entity:
    """Normalize the attribute map for `kind` and derive the identity key."""
    cleaned = {}
    for name in ENTITY_ATTRS[kind]:
        cleaned[name] = attrs.get(name)
    if kind is EntityKind.FILE and cleaned.get("name") is None and cleaned.get("path"):
        cleaned["name"] = str(cleaned["path"]).rstrip("/").rsplit("/", 1)[-1]
    return Entity(eid, kind, cleaned, identity_key(kind, cleaned))


@dataclass(slots=True)
class Event:
    """A directed interaction between two entities.

    `srcid` is the information-flow source and `dstid` the sink; `note`
    carries side details (the old path of a rename) and never takes part
    in identity.
    """

    id: int
    srcid: int
    dstid: int
    optype: str
    starttime: int
    endtime: int
    amount: int
    category: EventCategory
    note: Optional[str] = None


def derive_category(subject_kind: EntityKind, object_kind: EntityKind) -> EventCategory:
    if subject_kind is not EntityKind.PROCESS:
        raise IngestError(f"event subject must be a process, got {subject_kind.value}")
    if object_kind is EntityKind.FILE:
        return EventCategory.PROCESS_TO_FILE
    if object_kind is EntityKind.PROCESS:
        return EventCategory.PROCESS_TO_PROCESS
    return EventCategory.PROCESS_TO_NETWORK


def attr_get(item, name: str):
    """Uniform attribute access for entities and events.

    Returns None when the item's kind does not carry the attribute. On
    processes the generic `name` resolves to the executable name, which is
    what filters like name="vscode" are expected to match.
    """
    if isinstance(item, Entity):
        if name == "type":
            return item.kind.value
        if name == "id":
            return item.id
        if name == "name" and item.kind is EntityKind.PROCESS:
            return item.attrs.get("exename")
        if name in ENTITY_ATTRS[item.kind]:
            return item.attrs.get(name)
        return None
    if isinstance(item, Event):
        if name in ("id", "srcid", "dstid", "optype", "starttime", "endtime", "amount"):
            return getattr(item, name)
        return None
    raise TypeError(f"attr_get expects Entity or Event, got {type(item).__name__}")


def event_fingerprint(event: Event, src: Entity, dst: Entity) -> tuple:
    """Content identity of an event: endpoint keys, operation, window, amount."""
    return (src.key, dst.key, event.optype, event.starttime, event.endtime, event.amount)


def interval_gap(a: Event, b: Event) -> int:
    """Time between two event windows; overlapping windows have gap 0."""
    return max(0, max(a.starttime, b.starttime) - min(a.endtime, b.endtime))


class EventGraph:
    """An immutable set of entities and events, keyed by (source, id).

    Query results and algebra operands are EventGraphs. All operations
    return new graphs; the closure invariant (every event's endpoints are
    present) is restored after every operation.
    """

    __slots__ = ("entities", "events")

    def __init__(self, entities: Mapping[ElemKey, Entity], events: Mapping[ElemKey, Event]):
        self.entities = dict(entities)
        self.events = dict(events)

    @classmethod
    def empty(cls) -> "EventGraph":
        return cls({}, {})

    @classmethod
    def from_elements(cls, source: str, entities: Iterable[Entity], events: Iterable[Event]) -> "EventGraph":
        ent = {(source, e.id): e for e in entities}
        evs = {(source, e.id): e for e in events}
        g = cls(ent, evs)
        g.check_closure()
        return g

    # -- endpoint helpers ---------------------------------------------------

    @staticmethod
    def src_key(key: ElemKey, event: Event) -> ElemKey:
        return (key[0], event.srcid)

    @staticmethod
    def dst_key(key: ElemKey, event: Event) -> ElemKey:
        return (key[0], event.dstid)

    def node_count(self) -> int:
        return len(self.entities)

    def edge_count(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EventGraph)
            and self.entities == other.entities
            and self.events == other.events
        )

    def __repr__(self) -> str:
        return f"EventGraph(nodes={len(self.entities)}, edges={len(self.events)})"

    def check_closure(self) -> None:
        for key, ev in self.events.items():
            if self.src_key(key, ev) not in self.entities or self.dst_key(key, ev) not in self.entities:
                raise ValueError(f"event {key} references entities outside the graph")

    # -- algebra ------------------------------------------------------------

    def _entity_for(self, key: ElemKey, other: "EventGraph") -> Entity:
        ent = self.entities.get(key) or other.entities.get(key)
        if ent is None:
            raise ValueError(f"no entity for key {key}")
        return ent

    def union(self, other: "EventGraph") -> "EventGraph":
        entities = dict(self.entities)
        entities.update(other.entities)
        events = dict(self.events)
        events.update(other.events)
        return EventGraph(entities, events)

    def intersection(self, other: "EventGraph") -> "EventGraph":
        events = {k: e for k, e in self.events.items() if k in other.events}
        return self._closed(events, other)

    def difference(self, other: "EventGraph") -> "EventGraph":
        events = {k: e for k, e in self.events.items() if k not in other.events}
        return self._closed(events, other)

    def _closed(self, events: dict, other: "EventGraph") -> "EventGraph":
        entities = {}
        for key, ev in events.items():
            sk, dk = self.src_key(key, ev), self.dst_key(key, ev)
            entities[sk] = self._entity_for(sk, other)
            entities[dk] = self._entity_for(dk, other)
        return EventGraph(entities, events)

    def fingerprints(self) -> set:
        out = set()
        for key, ev in self.events.items():
            src = self.entities[self.src_key(key, ev)]
            dst = self.entities[self.dst_key(key, ev)]
            out.add(event_fingerprint(ev, src, dst))
        return out
