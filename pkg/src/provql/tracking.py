"""Causal dependency tracking: backward toward origins, forward to effects.

Two events are causally linked when the earlier one's sink is the later
one's source and the earlier one starts before the later one ends. Tracking
is a breadth-first expansion of that relation from a set of start entities,
each carrying a time bound that tightens along the path:

  backward  expand entity u bounded by B over in-edges with starttime < B;
            an admitted event hands its own endtime to its source entity.
  forward   expand entity v bounded by B over out-edges with endtime > B;
            an admitted event hands its own starttime to its sink entity.

Node filters are applied to the entity an admitted event would newly reach;
an excluded entity stops expansion and the event into it is dropped too.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .budget import Deadline
from .errors import ExecutionError
from .lang import ast
from .lang.eval import compile_entity_pred, compile_event_pred
from .model import ElemKey, EventGraph
from .sources import GraphSource, StoreSource, as_source


@dataclass
class TrackRequest:
    direction: str  # back | forward
    seeds: list = field(default_factory=list)         # [(entity key, bound | None)]
    seed_events: list = field(default_factory=list)   # [(event key, Event)]
    include_nodes: Optional[ast.Expr] = None
    include_edges: Optional[ast.Expr] = None
    exclude_nodes: Optional[ast.Expr] = None
    exclude_edges: Optional[ast.Expr] = None
    step_limit: Optional[int] = None
    time_limit_s: Optional[float] = None


def resolve_poi(poi, source, session_vars: dict, direction: str):
    """Start entities (with time bounds) and seed events for a tracking run.

    A constraint expression seeds every matching entity with an open bound.
    A graph variable seeds from its events: backward starts at each event's
    source bounded by the event's end, forward at each sink bounded by the
    start; the events themselves are part of the result.
    """
    src = as_source(source)
    if isinstance(poi, ast.VarPoi):
        graph = session_vars.get(poi.name)
        if graph is None:
            raise ExecutionError(f"tracking start '{poi.name}' is not a bound graph variable")
        seeds: dict = {}
        for key, ev in graph.events.items():
            if direction == "back":
                entity_key = EventGraph.src_key(key, ev)
                bound = ev.endtime
                better = max
            else:
                entity_key = EventGraph.dst_key(key, ev)
                bound = ev.starttime
                better = min
            prev = seeds.get(entity_key)
            seeds[entity_key] = bound if prev is None else better(prev, bound)
        return list(seeds.items()), list(graph.events.items())
    matched = src.entities_matching(poi)
    return [(key, None) for key in matched], []


def _weaker(direction: str, a, b) -> bool:
    """True when bound `a` admits strictly more than bound `b`."""
    if a is None:
        return b is not None
    if b is None:
        return False
    return a > b if direction == "back" else a < b


def track(req: TrackRequest, source, deadline: Optional[Deadline] = None):
    """Run one tracking request; returns (EventGraph, truncated flag).

    The step limit counts event hops from the seeds; depth 0 entities are
    the seeds themselves. The time limit truncates the walk and flags the
    partial result instead of failing. An empty seed set yields an empty
    graph, which is a legitimate answer.
    """
    adapter = as_source(source)
    backward = req.direction == "back"
    deadline = deadline or Deadline(None)
    cutoff = None if req.time_limit_s is None else time.monotonic() + req.time_limit_s

    node_inc = compile_entity_pred(req.include_nodes) if req.include_nodes is not None else None
    node_exc = compile_entity_pred(req.exclude_nodes) if req.exclude_nodes is not None else None
    edge_inc = compile_event_pred(req.include_edges) if req.include_edges is not None else None
    edge_exc = compile_event_pred(req.exclude_edges) if req.exclude_edges is not None else None

    entities: dict = {}
    events: dict = {}
    truncated = False

    def excluded(key: ElemKey) -> bool:
        return node_exc is not None and node_exc(adapter.entity(key))

    # merge seeds per entity, keeping the weakest bound; excluded seeds drop
    seed_bounds: dict = {}
    for key, bound in req.seeds:
        if excluded(key):
            continue
        if key not in seed_bounds or _weaker(req.direction, bound, seed_bounds[key]):
            seed_bounds[key] = bound
    seed_keys = set(seed_bounds)

    for key in seed_keys:
        entities[key] = adapter.entity(key)
    for key, ev in req.seed_events:
        sk, dk = adapter.event_endpoints(key, ev)
        if excluded(sk) or excluded(dk):
            continue
        if edge_exc is not None and edge_exc(ev):
            continue
        events[key] = ev
        entities[sk] = adapter.entity(sk)
        entities[dk] = adapter.entity(dk)

    # per-entity pareto states over (bound, depth): a pending expansion is
    # redundant only if an earlier one had a bound at least as weak and a
    # depth at least as small
    states: dict = {}

    def admit(key: ElemKey, bound, depth: int) -> bool:
        existing = states.get(key)
        if existing is None:
            states[key] = [(bound, depth)]
            return True
        for b, d in existing:
            if d <= depth and not _weaker(req.direction, bound, b):
                return False
        existing[:] = [(b, d) for b, d in existing
                       if _weaker(req.direction, b, bound) or d < depth]
        existing.append((bound, depth))
        return True

    queue = deque()
    for key, bound in seed_bounds.items():
        admit(key, bound, 0)
        queue.append((key, bound, 0))

    while queue:
        if cutoff is not None and time.monotonic() >= cutoff:
            truncated = True
            break
        deadline.check("tracking")
        key, bound, depth = queue.popleft()
        if req.step_limit is not None and depth >= req.step_limit:
            continue
        if backward:
            neighbors = adapter.in_edges(key, start_lt=bound)
        else:
            neighbors = adapter.out_edges(key, end_gt=bound)
        for ekey, ev in neighbors:
            if edge_inc is not None and not edge_inc(ev):
                continue
            if edge_exc is not None and edge_exc(ev):
                continue
            sk, dk = adapter.event_endpoints(ekey, ev)
            far = sk if backward else dk
            if excluded(far):
                continue
            if node_inc is not None and far not in seed_keys and not node_inc(adapter.entity(far)):
                continue
            events[ekey] = ev
            entities[sk] = adapter.entity(sk)
            entities[dk] = adapter.entity(dk)
            new_bound = ev.endtime if backward else ev.starttime
            if admit(far, new_bound, depth + 1):
                queue.append((far, new_bound, depth + 1))

    return EventGraph(entities, events), truncated


__all__ = ["TrackRequest", "resolve_poi", "track", "GraphSource", "StoreSource"]
