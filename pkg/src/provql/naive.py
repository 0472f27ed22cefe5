"""Reference nested-loop matcher for search statements.

Used as the benchmark baseline and as the correctness oracle for the
scheduled engine. It does everything the slow way on purpose: per-relation
candidates come from full event scans, tuples are enumerated by cartesian
product, and binding consistency plus window constraints are post-checked
on complete tuples. No indexes, no scheduling, no propagation.
"""

from __future__ import annotations

from itertools import product

from .lang import ast
from .lang.eval import compile_entity_pred
from .model import EventGraph, interval_gap
from .sources import as_source


def naive_search(stmt: ast.SearchStmt, source) -> EventGraph:
    src = as_source(source)
    checks = {node.var: compile_entity_pred(node.expr) for node in stmt.nodes}
    all_events = list(src.all_events())

    def leaf_candidates(rel: ast.SearchRel) -> list:
        src_check = checks[rel.from_var]
        dst_check = checks[rel.to_var]
        out = []
        for key, ev in all_events:
            if rel.optype is not None and ev.optype != rel.optype:
                continue
            sk, dk = src.event_endpoints(key, ev)
            if rel.from_var == rel.to_var and sk != dk:
                continue
            if not src_check(src.entity(sk)) or not dst_check(src.entity(dk)):
                continue
            out.append(({rel.from_var: sk, rel.to_var: dk}, ((key, ev),)))
        return out

    def matches(node) -> list:
        if isinstance(node, ast.SearchRel):
            return leaf_candidates(node)
        left = matches(node.left)
        right = matches(node.right)
        if node.op == "||":
            return left + right
        out = []
        for (lbind, levents), (rbind, revents) in product(left, right):
            joined = dict(lbind)
            joined.update(rbind)
            if any(lbind[v] != rbind[v] for v in lbind.keys() & rbind.keys()):
                continue
            if node.window is not None:
                limit = node.window.ns
                strict = node.window.comp == "<"
                bad = False
                for _, a in levents:
                    for _, b in revents:
                        gap = interval_gap(a, b)
                        if (gap >= limit) if strict else (gap > limit):
                            bad = True
                            break
                    if bad:
                        break
                if bad:
                    continue
            out.append((joined, levents + revents))
        return out

    entities: dict = {}
    events: dict = {}
    for _, tuple_events in matches(stmt.rels):
        for key, ev in tuple_events:
            if key not in events:
                events[key] = ev
                sk, dk = src.event_endpoints(key, ev)
                entities[sk] = src.entity(sk)
                entities[dk] = src.entity(dk)
    return EventGraph(entities, events)
