"""Component-based execution of search statements.

A search pattern is decomposed into one component per event relation. Each
component compiles to an independent store scan; components connected by a
shared entity variable run in descending pruning-score order, and the
entity bindings a finished component produced shrink the scan space of the
ones still waiting. A final join over the relation tree enforces binding
consistency and the temporal windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .budget import Deadline
from .errors import ExecutionError
from .lang import ast
from .model import EventGraph, interval_gap
from .sources import as_source

_CHECK_EVERY = 4096


@dataclass
class PatternComponent:
    """One event relation with the predicates routed to it."""

    index: int
    rel: ast.SearchRel
    src_expr: ast.Expr
    dst_expr: ast.Expr
    optype: Optional[str]
    score: int

    @property
    def vars(self) -> tuple:
        return (self.rel.from_var, self.rel.to_var)


def decompose(stmt: ast.SearchStmt):
    """Components plus the dependency edges between variable-sharing pairs."""
    decls = {}
    for node in stmt.nodes:
        decls[node.var] = node.expr
    components = []
    for i, rel in enumerate(ast.rel_leaves(stmt.rels)):
        src_expr = decls.get(rel.from_var)
        dst_expr = decls.get(rel.to_var)
        if src_expr is None or dst_expr is None:
            raise ExecutionError(f"relation uses undeclared variable in {rel.from_var}->{rel.to_var}")
        score = ast.count_atoms(src_expr) + ast.count_atoms(dst_expr) + (1 if rel.optype else 0)
        components.append(PatternComponent(i, rel, src_expr, dst_expr, rel.optype, score))
    edges = set()
    for a in components:
        for b in components:
            if a.index < b.index and set(a.vars) & set(b.vars):
                edges.add((a.index, b.index))
    return components, edges


def schedule(components, edges, selectivity=None) -> list:
    """Execution order: per dependency group, descending pruning score.

    Ties fall back to textual order; when a `selectivity` estimator is
    supplied it refines tie-breaking only (smaller estimated candidate set
    first). Groups themselves run in textual order.
    """
    parent = list(range(len(components)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)

    group_rank = {}
    for comp in components:
        root = find(comp.index)
        group_rank.setdefault(root, min(c.index for c in components if find(c.index) == root))

    def sort_key(comp):
        tie = selectivity(comp) if selectivity is not None else 0
        return (group_rank[find(comp.index)], -comp.score, tie, comp.index)

    return [c.index for c in sorted(components, key=sort_key)]


def _propagation_pairs(rels: ast.RelExpr) -> set:
    """Directed (from, to) leaf pairs where binding propagation is sound.

    A leaf may restrict another only when every match touching the target
    necessarily also uses the source leaf: the two sides must meet at a
    conjunction and the source must not sit under any `||` below it,
    otherwise a match through the other alternative would be pruned away.
    """
    pairs = set()
    counter = [0]

    def walk(node):
        if isinstance(node, ast.SearchRel):
            idx = counter[0]
            counter[0] += 1
            return {idx}, {idx}  # (all leaves, leaves required by every match)
        left_all, left_req = walk(node.left)
        right_all, right_req = walk(node.right)
        if node.op == "&&":
            for a in left_req:
                for b in right_all:
                    pairs.add((a, b))
            for a in right_req:
                for b in left_all:
                    pairs.add((a, b))
            return left_all | right_all, left_req | right_req
        return left_all | right_all, set()

    walk(rels)
    return pairs


def _window_ok(window: ast.Window, left_events, right_events) -> bool:
    limit = window.ns
    strict = window.comp == "<"
    for _, a in left_events:
        for _, b in right_events:
            gap = interval_gap(a, b)
            if gap >= limit if strict else gap > limit:
                return False
    return True


def execute_search(
    stmt: ast.SearchStmt,
    source,
    *,
    propagate: bool = True,
    deadline: Optional[Deadline] = None,
    selectivity_tiebreak: bool = False,
    order_override: Optional[list] = None,
) -> EventGraph:
    """Run a search statement against a store or a bound graph.

    `propagate=False` disables result propagation between components; the
    result set is identical, only more work is done, and the same holds for
    any component permutation forced through `order_override`. An empty
    result is a valid outcome, not an error.
    """
    deadline = deadline or Deadline(None)
    src = as_source(source)
    components, edges = decompose(stmt)
    estimator = None
    if selectivity_tiebreak and hasattr(src, "store"):
        estimator = lambda comp: min(
            src.store.selectivity_count(comp.src_expr),
            src.store.selectivity_count(comp.dst_expr),
        )
    order = order_override if order_override is not None else schedule(components, edges, estimator)
    can_propagate = _propagation_pairs(stmt.rels)

    # Entity sets per declared variable are shared by every component that
    # references the variable.
    var_sets: dict = {}

    def entity_set(var: str, expr) -> set:
        cached = var_sets.get(var)
        if cached is None:
            cached = set(src.entities_matching(expr))
            var_sets[var] = cached
        return cached

    # (component index, var) -> propagated restriction from finished partners
    restrictions: dict = {}
    candidates: dict = {}
    done: list = []

    for ci in order:
        deadline.check("search")
        comp = components[ci]
        src_allowed = entity_set(comp.rel.from_var, comp.src_expr)
        dst_allowed = entity_set(comp.rel.to_var, comp.dst_expr)
        if propagate:
            extra = restrictions.get((ci, comp.rel.from_var))
            if extra is not None:
                src_allowed = src_allowed & extra
            extra = restrictions.get((ci, comp.rel.to_var))
            if extra is not None:
                dst_allowed = dst_allowed & extra
        pairs = src.events_for_component(comp.optype, src_allowed, dst_allowed)
        candidates[ci] = pairs
        done.append(ci)
        if not propagate:
            continue
        for var, side in ((comp.rel.from_var, 0), (comp.rel.to_var, 1)):
            seen = set()
            for key, ev in pairs:
                sk, dk = src.event_endpoints(key, ev)
                seen.add(sk if side == 0 else dk)
            for other in components:
                if other.index in done or var not in other.vars:
                    continue
                if (ci, other.index) not in can_propagate:
                    continue
                slot = (other.index, var)
                prev = restrictions.get(slot)
                restrictions[slot] = seen if prev is None else (prev & seen)

    # -- join: frames carry consistent bindings plus their events ----------------

    leaf_comp = {}
    for comp in components:
        leaf_comp[id(comp.rel)] = comp

    counter = [0]

    def tick():
        counter[0] += 1
        if counter[0] % _CHECK_EVERY == 0:
            deadline.check("search join")

    def frames(node) -> list:
        if isinstance(node, ast.SearchRel):
            comp = leaf_comp[id(node)]
            out = []
            for key, ev in candidates[comp.index]:
                tick()
                sk, dk = src.event_endpoints(key, ev)
                if node.from_var == node.to_var and sk != dk:
                    continue
                out.append(({node.from_var: sk, node.to_var: dk}, [(key, ev)]))
            return out
        left = frames(node.left)
        if node.op == "||":
            return left + frames(node.right)
        right = frames(node.right)
        out = []
        for lbind, levents in left:
            for rbind, revents in right:
                tick()
                merged = dict(lbind)
                ok = True
                for var, key in rbind.items():
                    prev = merged.get(var)
                    if prev is not None and prev != key:
                        ok = False
                        break
                    merged[var] = key
                if not ok:
                    continue
                if node.window is not None and not _window_ok(node.window, levents, revents):
                    continue
                out.append((merged, levents + revents))
        return out

    entities: dict = {}
    events: dict = {}
    for _, frame_events in frames(stmt.rels):
        for key, ev in frame_events:
            if key in events:
                continue
            events[key] = ev
            sk, dk = src.event_endpoints(key, ev)
            entities[sk] = src.entity(sk)
            entities[dk] = src.entity(dk)
    return EventGraph(entities, events)
