"""Canonical pretty-printer. `parse(pretty(stmt))` yields an equal AST."""

from __future__ import annotations

from . import ast

_ENTITY_TYPES = ("process", "file", "network")
_PREC = {"||": 1, "&&": 2}


def _string_text(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def _value_text(value) -> str:
    if isinstance(value, int):
        return str(value)
    if value in _ENTITY_TYPES:
        return value
    return _string_text(value)


def expr_text(expr: ast.Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, ast.Comparison):
        return f"{expr.attr} {expr.op} {_value_text(expr.value)}"
    if isinstance(expr, ast.Not):
        inner = expr_text(expr.operand, parent_prec=3)
        if isinstance(expr.operand, ast.BoolOp):
            inner = f"({inner})"
        return f"!{inner}"
    prec = _PREC[expr.op]
    left = expr_text(expr.left, prec)
    right = expr_text(expr.right, prec, right_side=True)
    if isinstance(expr.left, ast.BoolOp) and _PREC[expr.left.op] < prec:
        left = f"({left})"
    if isinstance(expr.right, ast.BoolOp) and _PREC[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def _window_text(window: ast.Window) -> str:
    return f"[{window.comp}{window.value}{window.unit}]"


def _rel_text(rel: ast.RelExpr) -> str:
    if isinstance(rel, ast.SearchRel):
        op = f"[{rel.optype}]" if rel.optype else ""
        return f"{rel.from_var}{op}->{rel.to_var}"
    left = _rel_text(rel.left)
    window = _window_text(rel.window) if rel.window else ""
    return f"{left} {rel.op}{window} {_rel_text(rel.right)}"


def _source_text(source: ast.DataSource) -> str:
    if isinstance(source, ast.DbSource):
        return f"db({source.name})"
    return source.name


def _graph_text(expr: ast.GraphExpr) -> str:
    if isinstance(expr, ast.GraphVar):
        return expr.name
    left = _graph_text(expr.left)
    right = _graph_text(expr.right)
    if isinstance(expr.right, ast.GraphOp):
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def _filters_text(filters: ast.TrackFilters) -> str:
    def clause(nodes, edges):
        parts = []
        if nodes is not None:
            parts.append(f"nodes where {expr_text(nodes)}")
        if edges is not None:
            parts.append(f"edges where {expr_text(edges)}")
        return ", ".join(parts)

    out = ""
    if filters.include_nodes is not None or filters.include_edges is not None:
        out += f" include {clause(filters.include_nodes, filters.include_edges)}"
    if filters.exclude_nodes is not None or filters.exclude_edges is not None:
        out += f" exclude {clause(filters.exclude_nodes, filters.exclude_edges)}"
    return out


def _limit_text(limit) -> str:
    if limit is None:
        return ""
    parts = []
    if limit.step is not None:
        parts.append(f"step {limit.step}")
    if limit.time_s is not None:
        parts.append(f"time {limit.time_s}")
    return " limit " + ", ".join(parts)


def pretty(stmt: ast.Stmt) -> str:
    """One-line canonical rendering of a statement."""
    if isinstance(stmt, ast.SearchStmt):
        nodes = ", ".join(f"{n.var}{{{expr_text(n.expr)}}}" for n in stmt.nodes)
        ret = " as " + stmt.ret.bind if stmt.ret.bind else ""
        return (
            f"search from {_source_text(stmt.source)} where {nodes} "
            f"with {_rel_text(stmt.rels)} return *{ret};"
        )
    if isinstance(stmt, ast.TrackStmt):
        bind = f"{stmt.bind} = " if stmt.bind else ""
        if isinstance(stmt.poi, ast.VarPoi):
            poi = stmt.poi.name
        else:
            poi = f"where {expr_text(stmt.poi)}"
        return (
            f"{bind}{stmt.direction} track {poi} from {_source_text(stmt.source)}"
            f"{_filters_text(stmt.filters)}{_limit_text(stmt.limit)};"
        )
    if isinstance(stmt, ast.GraphOpStmt):
        return f"{stmt.var} = {_graph_text(stmt.expr)};"
    if isinstance(stmt, ast.DisplayStmt):
        return f"display {_graph_text(stmt.expr)};"
    if isinstance(stmt, ast.ExportStmt):
        return f"export {_graph_text(stmt.expr)} as {_string_text(stmt.path)};"
    raise TypeError(f"not a statement: {type(stmt).__name__}")


def pretty_script(stmts) -> str:
    return "\n".join(pretty(s) for s in stmts)
