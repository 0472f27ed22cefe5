"""Compilation of attribute expressions into predicate callables.

Null semantics: a comparison whose attribute is absent on the item's kind
evaluates to false (both `=` and `!=`); negation then flips that result.
`like` uses SQL wildcards, `%` for any run and `_` for one character,
matched case-sensitively against the whole value.
"""

from __future__ import annotations

import re
from typing import Callable

from ..model import Entity, EntityKind
from . import ast

_EVENT_FIELDS = frozenset(("id", "srcid", "dstid", "optype", "starttime", "endtime", "amount"))


def like_regex(pattern: str) -> "re.Pattern":
    out = []
    for ch in pattern:
        if ch == "%":
            out.append(".*")
        elif ch == "_":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return re.compile("".join(out), re.DOTALL)


def _entity_getter(attr: str) -> Callable:
    if attr == "type":
        return lambda e: e.kind.value
    if attr == "id":
        return lambda e: e.id
    if attr == "name":
        # processes answer `name` queries with their executable name
        def get_name(e):
            return e.attrs.get("exename") if e.kind is EntityKind.PROCESS else e.attrs.get("name")
        return get_name
    return lambda e: e.attrs.get(attr)


def _event_getter(attr: str) -> Callable:
    if attr in _EVENT_FIELDS:
        return lambda e, _a=attr: getattr(e, _a)
    return lambda e: None


def compile_pred(expr: ast.Expr, context: str) -> Callable:
    """Compile `expr` to a callable over entities or events.

    `context` is "entity" or "event" and selects the attribute resolution;
    attributes foreign to the context resolve to None and the containing
    comparison is false.
    """
    getter_for = _entity_getter if context == "entity" else _event_getter

    def build(node):
        if isinstance(node, ast.Comparison):
            get = getter_for(node.attr)
            value = node.value
            op = node.op
            if op == "=":
                return lambda item: get(item) == value
            if op == "!=":
                def ne(item):
                    v = get(item)
                    return v is not None and v != value
                return ne
            if op == "like":
                pat = like_regex(str(value))
                def like(item):
                    v = get(item)
                    return v is not None and pat.fullmatch(str(v)) is not None
                return like
            if op == ">":
                return lambda item: (v := get(item)) is not None and v > value
            if op == ">=":
                return lambda item: (v := get(item)) is not None and v >= value
            if op == "<":
                return lambda item: (v := get(item)) is not None and v < value
            return lambda item: (v := get(item)) is not None and v <= value
        if isinstance(node, ast.Not):
            inner = build(node.operand)
            return lambda item: not inner(item)
        left = build(node.left)
        right = build(node.right)
        if node.op == "&&":
            return lambda item: left(item) and right(item)
        return lambda item: left(item) or right(item)

    return build(expr)


def compile_entity_pred(expr) -> Callable:
    if expr is None:
        return lambda item: True
    return compile_pred(expr, "entity")


def compile_event_pred(expr) -> Callable:
    if expr is None:
        return lambda item: True
    return compile_pred(expr, "event")


def required_equalities(expr: ast.Expr) -> list:
    """(attr, value) pairs that every match must satisfy.

    Walks top-level conjunctions only; anything under `!` or `||` gives no
    guarantee and is skipped. Used for index selection and kind narrowing.
    """
    out = []
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, ast.BoolOp) and node.op == "&&":
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, ast.Comparison) and node.op == "=":
            out.append((node.attr, node.value))
    return out


def pinned_kinds(expr: ast.Expr) -> "set[EntityKind] | None":
    """Entity kinds a top-level `type = ...` equality restricts to, or None."""
    kinds = None
    for attr, value in required_equalities(expr):
        if attr == "type":
            k = {EntityKind(value)} if value in ("process", "file", "network") else set()
            kinds = k if kinds is None else (kinds & k)
    return kinds


def evaluate(expr: ast.Expr, item) -> bool:
    """One-off evaluation; prefer compile_pred for scans."""
    context = "entity" if isinstance(item, Entity) else "event"
    return compile_pred(expr, context)(item)


__all__ = [
    "compile_pred", "compile_entity_pred", "compile_event_pred",
    "required_equalities", "pinned_kinds", "evaluate", "like_regex",
]
