"""Statement and expression AST for the threat search and tracking language.

Source locations are carried for diagnostics but excluded from equality so
a pretty-printed statement reparses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import SourceLocation

_NS_PER_UNIT = {"ms": 1_000_000, "s": 1_000_000_000, "m": 60_000_000_000}


def _loc_field():
    return field(default=None, compare=False, repr=False)


# -- attribute expressions ---------------------------------------------------

@dataclass
class Comparison:
    attr: str
    op: str  # = != like > >= < <=
    value: Union[str, int]
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class Not:
    operand: "Expr"
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class BoolOp:
    op: str  # && or ||
    left: "Expr"
    right: "Expr"
    loc: Optional[SourceLocation] = _loc_field()


Expr = Union[Comparison, Not, BoolOp]


# -- search statements --------------------------------------------------------

@dataclass
class NodeDecl:
    var: str
    expr: Expr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class SearchRel:
    from_var: str
    optype: Optional[str]
    to_var: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class Window:
    comp: str  # < or <=
    value: int
    unit: str  # m, s, or ms

    @property
    def ns(self) -> int:
        return self.value * _NS_PER_UNIT[self.unit]


@dataclass
class RelOp:
    op: str  # && or ||
    left: "RelExpr"
    right: "RelExpr"
    window: Optional[Window] = None  # only meaningful on &&
    loc: Optional[SourceLocation] = _loc_field()


RelExpr = Union[SearchRel, RelOp]


@dataclass
class DbSource:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class VarSource:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


DataSource = Union[DbSource, VarSource]


@dataclass
class ReturnSpec:
    bind: Optional[str] = None  # `return * as <bind>` binds, bare `return *` displays


@dataclass
class SearchStmt:
    source: DataSource
    nodes: list
    rels: RelExpr
    ret: ReturnSpec
    loc: Optional[SourceLocation] = _loc_field()


# -- tracking statements -------------------------------------------------------

@dataclass
class VarPoi:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class TrackFilters:
    include_nodes: Optional[Expr] = None
    include_edges: Optional[Expr] = None
    exclude_nodes: Optional[Expr] = None
    exclude_edges: Optional[Expr] = None


@dataclass
class TrackLimit:
    step: Optional[int] = None
    time_s: Optional[int] = None


@dataclass
class TrackStmt:
    bind: Optional[str]
    direction: str  # back or forward
    poi: Union[Expr, VarPoi]
    source: DataSource
    filters: TrackFilters
    limit: Optional[TrackLimit]
    loc: Optional[SourceLocation] = _loc_field()


# -- graph manipulation ---------------------------------------------------------

@dataclass
class GraphVar:
    name: str
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class GraphOp:
    op: str  # | & -
    left: "GraphExpr"
    right: "GraphExpr"
    loc: Optional[SourceLocation] = _loc_field()


GraphExpr = Union[GraphVar, GraphOp]


@dataclass
class GraphOpStmt:
    var: str
    expr: GraphExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class DisplayStmt:
    expr: GraphExpr
    loc: Optional[SourceLocation] = _loc_field()


@dataclass
class ExportStmt:
    expr: GraphExpr
    path: str
    loc: Optional[SourceLocation] = _loc_field()


Stmt = Union[SearchStmt, TrackStmt, GraphOpStmt, DisplayStmt, ExportStmt]


def count_atoms(expr: Optional[Expr]) -> int:
    """Number of atomic comparisons anywhere inside an expression."""
    if expr is None:
        return 0
    if isinstance(expr, Comparison):
        return 1
    if isinstance(expr, Not):
        return count_atoms(expr.operand)
    return count_atoms(expr.left) + count_atoms(expr.right)


def rel_leaves(rels: RelExpr) -> list:
    """SearchRel leaves of a relation tree, in textual order."""
    if isinstance(rels, SearchRel):
        return [rels]
    return rel_leaves(rels.left) + rel_leaves(rels.right)
