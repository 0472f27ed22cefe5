"""Uniform access to the two kinds of query data sources.

Searches and tracking run either against a store (indexed, persistent) or
against an in-memory graph bound to a session variable. Adapters expose the
same surface for both; graph adapters simply walk the restricted element
sets the variable holds.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Iterable, Optional

from .lang import ast
from .lang.eval import compile_entity_pred, compile_event_pred
from .model import ElemKey, Entity, Event, EventGraph
from .store import Store


class StoreSource:
    def __init__(self, store: Store):
        self.store = store
        self.name = store.name

    def entity(self, key: ElemKey) -> Entity:
        return self.store.entity(key[1])

    def all_entities(self) -> Iterable:
        name = self.name
        return (((name, e.id), e) for e in self.store.entities())

    def all_events(self) -> Iterable:
        name = self.name
        return (((name, e.id), e) for e in self.store.events())

    def event_endpoints(self, key: ElemKey, ev: Event) -> tuple:
        return (self.name, ev.srcid), (self.name, ev.dstid)

    def entities_matching(self, expr: Optional[ast.Expr]) -> list:
        return [(self.name, i) for i in self.store.scan_entities(pred=expr)]

    def events_for_component(
        self,
        optype: Optional[str],
        src_keys: Optional[set],
        dst_keys: Optional[set],
    ) -> list:
        """Events with the given operation and endpoint id restrictions."""
        pred = ast.Comparison("optype", "=", optype) if optype else None
        src_in = {k[1] for k in src_keys if k[0] == self.name} if src_keys is not None else None
        dst_in = {k[1] for k in dst_keys if k[0] == self.name} if dst_keys is not None else None
        ids = self.store.scan_events(pred, src_in=src_in, dst_in=dst_in)
        return [((self.name, i), self.store.event(i)) for i in ids]

    def in_edges(self, key: ElemKey, start_lt: Optional[int] = None) -> list:
        if key[0] != self.name:
            return []
        bound = None if start_lt is None else ("start_lt", start_lt)
        return [((self.name, e.id), e) for e in self.store.neighbors(key[1], "in", bound)]

    def out_edges(self, key: ElemKey, end_gt: Optional[int] = None) -> list:
        if key[0] != self.name:
            return []
        bound = None if end_gt is None else ("end_gt", end_gt)
        return [((self.name, e.id), e) for e in self.store.neighbors(key[1], "out", bound)]


class GraphSource:
    """Adapter over an EventGraph; used when a variable is the data source."""

    def __init__(self, graph: EventGraph):
        self.graph = graph
        self._in: dict = {}
        self._out: dict = {}
        for key, ev in graph.events.items():
            self._out.setdefault(EventGraph.src_key(key, ev), []).append((key, ev))
            self._in.setdefault(EventGraph.dst_key(key, ev), []).append((key, ev))
        by_start = lambda pair: (pair[1].starttime, pair[0])
        for adj in (self._in, self._out):
            for bucket in adj.values():
                bucket.sort(key=by_start)

    def entity(self, key: ElemKey) -> Entity:
        return self.graph.entities[key]

    def all_entities(self) -> Iterable:
        return self.graph.entities.items()

    def all_events(self) -> Iterable:
        return self.graph.events.items()

    def event_endpoints(self, key: ElemKey, ev: Event) -> tuple:
        return EventGraph.src_key(key, ev), EventGraph.dst_key(key, ev)

    def entities_matching(self, expr: Optional[ast.Expr]) -> list:
        check = compile_entity_pred(expr)
        return sorted(k for k, ent in self.graph.entities.items() if check(ent))

    def events_for_component(self, optype, src_keys, dst_keys) -> list:
        out = []
        for key, ev in self.graph.events.items():
            if optype is not None and ev.optype != optype:
                continue
            if src_keys is not None and EventGraph.src_key(key, ev) not in src_keys:
                continue
            if dst_keys is not None and EventGraph.dst_key(key, ev) not in dst_keys:
                continue
            out.append((key, ev))
        out.sort(key=lambda pair: pair[0])
        return out

    def in_edges(self, key: ElemKey, start_lt: Optional[int] = None) -> list:
        bucket = self._in.get(key, [])
        if start_lt is None:
            return bucket
        cut = bisect_left([p[1].starttime for p in bucket], start_lt)
        return bucket[:cut]

    def out_edges(self, key: ElemKey, end_gt: Optional[int] = None) -> list:
        bucket = self._out.get(key, [])
        if end_gt is None:
            return bucket
        starts = [p[1].starttime for p in bucket]
        cut = bisect_right(starts, end_gt)
        head = [p for p in bucket[:cut] if p[1].endtime > end_gt]
        head.extend(bucket[cut:])
        return head


def as_source(source):
    if isinstance(source, Store):
        return StoreSource(source)
    if isinstance(source, EventGraph):
        return GraphSource(source)
    return source


def event_pred_filter(expr: Optional[ast.Expr], pairs: Iterable) -> list:
    check = compile_event_pred(expr)
    return [(k, e) for k, e in pairs if check(e)]
