"""Session state and statement execution.

A session maps graph variable names to in-memory event graphs and data
source names to stores. Statements execute serially within a session,
mirroring how an analyst refines results query by query.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Optional

from .budget import Deadline
from .errors import ExecutionError, SemanticError
from .lang import ast, parse
from .lang.analyzer import analyze_statement, bound_name
from .model import EventGraph, EntityKind, Event, EventCategory, make_entity
from .search import execute_search
from .store import Store
from .tracking import TrackRequest, resolve_poi, track


@dataclass
class StatementResult:
    kind: str                      # search | track | bind | display | export
    stmt: ast.Stmt
    graph: Optional[EventGraph] = None
    bound_name: Optional[str] = None
    display: bool = False
    truncated: bool = False
    export_path: Optional[str] = None
    elapsed_ms: float = 0.0

    def summary(self) -> str:
        parts = []
        if self.bound_name:
            parts.append(f"{self.bound_name} =")
        if self.graph is not None:
            parts.append(f"graph(nodes={self.graph.node_count()}, edges={self.graph.edge_count()})")
        if self.truncated:
            parts.append("[truncated]")
        if self.export_path:
            parts.append(f"exported to {self.export_path}")
        return " ".join(parts) or self.kind


class Session:
    def __init__(self, export_dir: str = "."):
        self.vars: dict = {}
        self.sources: dict = {}
        self.history: list = []
        self.export_dir = export_dir

    def register_source(self, store: Store) -> None:
        self.sources[store.name] = store

    # -- execution ---------------------------------------------------------------

    def execute_text(self, text: str, deadline: Optional[Deadline] = None) -> list:
        """Parse, analyze, and run a statement batch.

        Analysis diagnostics are fatal for the whole batch; nothing runs and
        the session is unchanged.
        """
        stmts = parse(text)
        diagnostics = []
        known = set(self.vars)
        for stmt in stmts:
            diagnostics.extend(analyze_statement(stmt, self.sources, known))
            name = bound_name(stmt)
            if name:
                known.add(name)
        if diagnostics:
            raise SemanticError(diagnostics)
        return [self.execute(stmt, deadline) for stmt in stmts]

    def execute(self, stmt: ast.Stmt, deadline: Optional[Deadline] = None) -> StatementResult:
        started = time.perf_counter()
        result = self._dispatch(stmt, deadline or Deadline(None))
        result.elapsed_ms = (time.perf_counter() - started) * 1000.0
        self.history.append((stmt, result.summary()))
        return result

    def _dispatch(self, stmt: ast.Stmt, deadline: Deadline) -> StatementResult:
        if isinstance(stmt, ast.SearchStmt):
            source = self._resolve_source(stmt.source)
            graph = execute_search(stmt, source, deadline=deadline)
            if stmt.ret.bind:
                self.vars[stmt.ret.bind] = graph
                return StatementResult("search", stmt, graph, bound_name=stmt.ret.bind)
            return StatementResult("search", stmt, graph, display=True)
        if isinstance(stmt, ast.TrackStmt):
            source = self._resolve_source(stmt.source)
            seeds, seed_events = resolve_poi(stmt.poi, source, self.vars, stmt.direction)
            limit = stmt.limit or ast.TrackLimit()
            request = TrackRequest(
                direction=stmt.direction,
                seeds=seeds,
                seed_events=seed_events,
                include_nodes=stmt.filters.include_nodes,
                include_edges=stmt.filters.include_edges,
                exclude_nodes=stmt.filters.exclude_nodes,
                exclude_edges=stmt.filters.exclude_edges,
                step_limit=limit.step,
                time_limit_s=limit.time_s,
            )
            graph, truncated = track(request, source, deadline=deadline)
            if stmt.bind:
                self.vars[stmt.bind] = graph
                return StatementResult("track", stmt, graph, bound_name=stmt.bind, truncated=truncated)
            return StatementResult("track", stmt, graph, display=True, truncated=truncated)
        if isinstance(stmt, ast.GraphOpStmt):
            graph = eval_graph_expr(stmt.expr, self.vars)
            self.vars[stmt.var] = graph
            return StatementResult("bind", stmt, graph, bound_name=stmt.var)
        if isinstance(stmt, ast.DisplayStmt):
            graph = eval_graph_expr(stmt.expr, self.vars)
            return StatementResult("display", stmt, graph, display=True)
        if isinstance(stmt, ast.ExportStmt):
            graph = eval_graph_expr(stmt.expr, self.vars)
            path = stmt.path
            if not os.path.isabs(path):
                path = os.path.join(self.export_dir, path)
            export_graph(graph, path)
            return StatementResult("export", stmt, graph, export_path=path)
        raise ExecutionError(f"cannot execute {type(stmt).__name__}")

    def _resolve_source(self, source: ast.DataSource):
        if isinstance(source, ast.DbSource):
            store = self.sources.get(source.name)
            if store is None:
                raise ExecutionError(f"unknown data source db({source.name})")
            return store
        graph = self.vars.get(source.name)
        if graph is None:
            raise ExecutionError(f"data source '{source.name}' is not a bound graph variable")
        return graph


def eval_graph_expr(expr: ast.GraphExpr, variables: dict) -> EventGraph:
    if isinstance(expr, ast.GraphVar):
        graph = variables.get(expr.name)
        if graph is None:
            raise ExecutionError(f"unbound graph variable '{expr.name}'")
        return graph
    left = eval_graph_expr(expr.left, variables)
    right = eval_graph_expr(expr.right, variables)
    if expr.op == "|":
        return left.union(right)
    if expr.op == "&":
        return left.intersection(right)
    return left.difference(right)


# -- export / import ----------------------------------------------------------------

def graph_payload(graph: EventGraph) -> dict:
    """JSON-ready dict with stable (source, id) ordering."""
    entities = []
    for (source, eid) in sorted(graph.entities):
        ent = graph.entities[(source, eid)]
        entities.append({
            "source": source,
            "id": eid,
            "kind": ent.kind.value,
            "key": ent.key,
            "attrs": {k: v for k, v in ent.attrs.items() if v is not None},
        })
    events = []
    for (source, eid) in sorted(graph.events):
        ev = graph.events[(source, eid)]
        src = graph.entities[(source, ev.srcid)]
        dst = graph.entities[(source, ev.dstid)]
        record = {
            "source": source,
            "id": eid,
            "srcid": ev.srcid,
            "dstid": ev.dstid,
            "srckey": src.key,
            "dstkey": dst.key,
            "optype": ev.optype,
            "starttime": ev.starttime,
            "endtime": ev.endtime,
            "amount": ev.amount,
        }
        if ev.note is not None:
            record["note"] = ev.note
        events.append(record)
    return {"entities": entities, "events": events}


def export_graph(graph: EventGraph, path: str, fmt: Optional[str] = None) -> None:
    """Write a graph as JSON (default) or DOT, chosen by extension."""
    if fmt is None:
        fmt = "dot" if path.endswith(".dot") else "json"
    if fmt == "json":
        payload = graph_payload(graph)
        with open(path, "w") as fp:
            json.dump(payload, fp, indent=1, sort_keys=True)
            fp.write("\n")
        return
    if fmt == "dot":
        with open(path, "w") as fp:
            fp.write(render_dot(graph))
        return
    raise ExecutionError(f"unknown export format {fmt!r}")


def render_dot(graph: EventGraph) -> str:
    def quote(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = ["digraph provenance {"]
    names = {}
    for key in sorted(graph.entities):
        ent = graph.entities[key]
        names[key] = f"n{len(names)}"
        lines.append(f"  {names[key]} [label={quote(ent.kind.value + ': ' + ent.key)}];")
    for key in sorted(graph.events):
        ev = graph.events[key]
        a = names[EventGraph.src_key(key, ev)]
        b = names[EventGraph.dst_key(key, ev)]
        label = f"{ev.optype} [{ev.starttime},{ev.endtime}]"
        lines.append(f"  {a} -> {b} [label={quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def import_graph(path: str) -> EventGraph:
    """Read back a JSON export; the result equals the exported graph."""
    with open(path) as fp:
        payload = json.load(fp)
    entities = {}
    for doc in payload["entities"]:
        kind = EntityKind(doc["kind"])
        ent = make_entity(doc["id"], kind, doc["attrs"])
        entities[(doc["source"], doc["id"])] = ent
    events = {}
    for doc in payload["events"]:
        src_kind = entities[(doc["source"], doc["srcid"])].kind
        dst_kind = entities[(doc["source"], doc["dstid"])].kind
        object_kind = dst_kind if src_kind is EntityKind.PROCESS else src_kind
        category = (
            EventCategory.PROCESS_TO_FILE if object_kind is EntityKind.FILE
            else EventCategory.PROCESS_TO_PROCESS if object_kind is EntityKind.PROCESS
            else EventCategory.PROCESS_TO_NETWORK
        )
        events[(doc["source"], doc["id"])] = Event(
            id=doc["id"], srcid=doc["srcid"], dstid=doc["dstid"], optype=doc["optype"],
            starttime=doc["starttime"], endtime=doc["endtime"], amount=doc["amount"],
            category=category, note=doc.get("note"),
        )
    graph = EventGraph(entities, events)
    graph.check_closure()
    return graph
