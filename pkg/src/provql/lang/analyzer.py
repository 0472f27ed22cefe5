"""Semantic analysis: variable scoping, source existence, attribute contexts.

Analysis never raises; it collects every diagnostic it can find so a user
sees all problems in one pass. Callers decide whether diagnostics are fatal.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from ..errors import Diagnostic
from ..model import EntityKind
from . import ast

_EVENT_ONLY_ATTRS = frozenset(("optype", "srcid", "dstid", "starttime", "endtime", "amount"))
_ENTITY_ONLY_ATTRS = frozenset((
    "type", "name", "path", "dstip", "srcip", "exename", "exepath", "cmdline",
    "pid", "srcport", "dstport",
))

# Attributes that can be non-null for each kind (expression vocabulary only).
_KIND_ATTRS = {
    EntityKind.FILE: frozenset(("type", "name", "path", "id")),
    EntityKind.PROCESS: frozenset(("type", "name", "exename", "exepath", "cmdline", "id", "pid")),
    EntityKind.NETWORK: frozenset(("type", "srcip", "dstip", "id", "srcport", "dstport")),
}


def _atoms(expr: ast.Expr):
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, ast.Comparison):
            yield node
        elif isinstance(node, ast.Not):
            stack.append(node.operand)
        else:
            stack.append(node.left)
            stack.append(node.right)


def _check_expr(expr: ast.Expr, context: str, what: str, out: list) -> None:
    banned = _EVENT_ONLY_ATTRS if context == "entity" else _ENTITY_ONLY_ATTRS
    for atom in _atoms(expr):
        if atom.attr in banned:
            out.append(Diagnostic(
                f"attribute '{atom.attr}' cannot be used in {what} (wrong context)", atom.loc))
        if atom.op == "like" and isinstance(atom.value, int):
            out.append(Diagnostic(
                f"'like' does not apply to numeric attribute '{atom.attr}'", atom.loc))
    if context == "entity":
        _check_kind_compat(expr, what, out)


def _check_kind_compat(expr: ast.Expr, what: str, out: list) -> None:
    # Only a top-level `type = K` conjunct pins the kind reliably.
    pinned = None
    stack = [expr]
    atoms_top = []
    while stack:
        node = stack.pop()
        if isinstance(node, ast.BoolOp) and node.op == "&&":
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, ast.Comparison):
            atoms_top.append(node)
            if node.attr == "type" and node.op == "=" and node.value in ("process", "file", "network"):
                pinned = EntityKind(node.value)
    if pinned is None:
        return
    allowed = _KIND_ATTRS[pinned]
    for atom in atoms_top:
        if atom.attr in _EVENT_ONLY_ATTRS:
            continue  # already reported as wrong context
        if atom.attr not in allowed:
            out.append(Diagnostic(
                f"attribute '{atom.attr}' is never present on {pinned.value} entities ({what})",
                atom.loc))


def _check_source(source: ast.DataSource, sources: Mapping, known_vars: set, out: list) -> None:
    if isinstance(source, ast.DbSource):
        if source.name not in sources:
            out.append(Diagnostic(f"unknown data source db({source.name})", source.loc))
    else:
        if source.name not in known_vars:
            out.append(Diagnostic(f"data source '{source.name}' is not a bound graph variable", source.loc))


def _check_bind(name: str, loc, sources: Mapping, out: list) -> None:
    if name in sources:
        out.append(Diagnostic(f"variable '{name}' shadows data source db({name})", loc))


def _check_graph_expr(expr: ast.GraphExpr, known_vars: set, out: list) -> None:
    if isinstance(expr, ast.GraphVar):
        if expr.name not in known_vars:
            out.append(Diagnostic(f"unbound graph variable '{expr.name}'", expr.loc))
    else:
        _check_graph_expr(expr.left, known_vars, out)
        _check_graph_expr(expr.right, known_vars, out)


def analyze_statement(stmt: ast.Stmt, sources: Mapping, known_vars: set) -> list:
    """Diagnostics for one statement given the variables bound so far."""
    out: list = []
    if isinstance(stmt, ast.SearchStmt):
        _check_source(stmt.source, sources, known_vars, out)
        declared = {}
        for node in stmt.nodes:
            if node.var in declared:
                out.append(Diagnostic(f"entity variable '{node.var}' declared twice", node.loc))
            declared[node.var] = node
            _check_expr(node.expr, "entity", f"the declaration of '{node.var}'", out)
        for rel in ast.rel_leaves(stmt.rels):
            for var in (rel.from_var, rel.to_var):
                if var not in declared:
                    out.append(Diagnostic(f"undeclared entity variable '{var}'", rel.loc))
        if stmt.ret.bind:
            _check_bind(stmt.ret.bind, stmt.loc, sources, out)
    elif isinstance(stmt, ast.TrackStmt):
        _check_source(stmt.source, sources, known_vars, out)
        if isinstance(stmt.poi, ast.VarPoi):
            if stmt.poi.name not in known_vars:
                out.append(Diagnostic(
                    f"tracking start '{stmt.poi.name}' is not a bound graph variable", stmt.poi.loc))
        else:
            _check_expr(stmt.poi, "entity", "the tracking start expression", out)
        f = stmt.filters
        for expr, context, what in (
            (f.include_nodes, "entity", "an include-nodes filter"),
            (f.exclude_nodes, "entity", "an exclude-nodes filter"),
            (f.include_edges, "event", "an include-edges filter"),
            (f.exclude_edges, "event", "an exclude-edges filter"),
        ):
            if expr is not None:
                _check_expr(expr, context, what, out)
        if stmt.bind:
            _check_bind(stmt.bind, stmt.loc, sources, out)
    elif isinstance(stmt, ast.GraphOpStmt):
        _check_graph_expr(stmt.expr, known_vars, out)
        _check_bind(stmt.var, stmt.loc, sources, out)
    elif isinstance(stmt, (ast.DisplayStmt, ast.ExportStmt)):
        _check_graph_expr(stmt.expr, known_vars, out)
    return out


def bound_name(stmt: ast.Stmt):
    if isinstance(stmt, ast.SearchStmt):
        return stmt.ret.bind
    if isinstance(stmt, ast.TrackStmt):
        return stmt.bind
    if isinstance(stmt, ast.GraphOpStmt):
        return stmt.var
    return None


def analyze(stmts: Iterable[ast.Stmt], sources: Mapping, vars_: Mapping) -> list:
    """Diagnostics for a statement sequence.

    Bindings made by earlier statements are visible to later ones, matching
    execution order within a script or a session.
    """
    known = set(vars_)
    out: list = []
    for stmt in stmts:
        out.extend(analyze_statement(stmt, sources, known))
        name = bound_name(stmt)
        if name:
            known.add(name)
    return out
