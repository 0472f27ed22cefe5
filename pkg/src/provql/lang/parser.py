"""Hand-written recursive-descent parser for the query language.

One statement form per grammar rule; every error carries the location and
the token the parser expected instead. Entry points: `parse` for a script,
`parse_one` when exactly one statement is expected.
"""

from __future__ import annotations

from typing import Optional

from ..errors import ParseError
from ..model import EVENT_OPS, NUMERIC_ATTRIBUTES, STRING_ATTRIBUTES
from . import ast
from .lexer import Lexer, Token

_ENTITY_TYPES = ("process", "file", "network")
_NUMERIC_OPS = ("=", "!=", "like", ">", ">=", "<", "<=")
_EQ_OPS = ("=", "!=", "like")


class Parser:
    def __init__(self, text: str):
        self._lexer = Lexer(text)
        self._tokens = self._lexer.tokenize()
        self._pos = 0

    # -- token plumbing ------------------------------------------------------

    def _peek(self, offset: int = 0) -> Token:
        return self._tokens[min(self._pos + offset, len(self._tokens) - 1)]

    def _advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def _loc(self, tok: Token):
        return self._lexer.location(tok.pos)

    def _error(self, expected: str, tok: Optional[Token] = None):
        tok = tok or self._peek()
        found = "end of input" if tok.kind == "eof" else repr(str(tok.value))
        raise ParseError(f"expected {expected}, found {found}", self._loc(tok))

    def _at_punct(self, value: str) -> bool:
        tok = self._peek()
        return tok.kind == "punct" and tok.value == value

    def _at_word(self, value: str) -> bool:
        tok = self._peek()
        return tok.kind in ("keyword", "ident") and tok.value == value

    def _expect_punct(self, value: str) -> Token:
        if not self._at_punct(value):
            self._error(f"'{value}'")
        return self._advance()

    def _expect_word(self, value: str) -> Token:
        if not self._at_word(value):
            self._error(f"'{value}'")
        return self._advance()

    def _expect_ident(self, what: str = "identifier") -> Token:
        tok = self._peek()
        if tok.kind != "ident":
            self._error(what)
        return self._advance()

    def _expect_int(self) -> int:
        tok = self._peek()
        if tok.kind != "int":
            self._error("integer")
        return self._advance().value

    # -- entry points ----------------------------------------------------------

    def parse(self) -> list:
        stmts = []
        while self._peek().kind != "eof":
            stmts.append(self._statement())
        return stmts

    def parse_one(self) -> ast.Stmt:
        stmt = self._statement()
        tok = self._peek()
        if tok.kind != "eof":
            self._error("end of input", tok)
        return stmt

    # -- statements -------------------------------------------------------------

    def _statement(self) -> ast.Stmt:
        tok = self._peek()
        if self._at_word("search"):
            return self._search_stmt()
        if self._at_word("back") or self._at_word("forward"):
            return self._track_stmt(bind=None)
        if self._at_word("display"):
            return self._display_stmt()
        if self._at_word("export"):
            return self._export_stmt()
        if tok.kind == "ident":
            return self._assignment()
        self._error("a statement (search, track, display, export, or assignment)")

    def _assignment(self) -> ast.Stmt:
        name_tok = self._expect_ident("variable name")
        self._expect_punct("=")
        if self._at_word("back") or self._at_word("forward"):
            return self._track_stmt(bind=name_tok.value, loc_tok=name_tok)
        expr = self._graph_expr()
        self._expect_punct(";")
        return ast.GraphOpStmt(name_tok.value, expr, loc=self._loc(name_tok))

    def _search_stmt(self) -> ast.SearchStmt:
        start = self._expect_word("search")
        self._expect_word("from")
        source = self._data_source()
        self._expect_word("where")
        nodes = [self._search_node()]
        while self._at_punct(","):
            self._advance()
            nodes.append(self._search_node())
        self._expect_word("with")
        rels = self._search_rel_expr()
        self._expect_word("return")
        self._expect_punct("*")
        bind = None
        if self._at_word("as"):
            self._advance()
            bind = self._expect_ident("result variable").value
        self._expect_punct(";")
        return ast.SearchStmt(source, nodes, rels, ast.ReturnSpec(bind), loc=self._loc(start))

    def _search_node(self) -> ast.NodeDecl:
        var = self._expect_ident("entity variable")
        self._expect_punct("{")
        expr = self._expr()
        # commas between constraints inside the braces mean conjunction
        while self._at_punct(","):
            comma = self._advance()
            expr = ast.BoolOp("&&", expr, self._expr(), loc=self._loc(comma))
        self._expect_punct("}")
        return ast.NodeDecl(var.value, expr, loc=self._loc(var))

    def _data_source(self) -> ast.DataSource:
        if self._at_word("db"):
            tok = self._advance()
            self._expect_punct("(")
            name = self._expect_ident("data source name").value
            self._expect_punct(")")
            return ast.DbSource(name, loc=self._loc(tok))
        tok = self._expect_ident("data source")
        return ast.VarSource(tok.value, loc=self._loc(tok))

    def _search_rel_expr(self) -> ast.RelExpr:
        left = self._search_rel()
        while self._at_punct("&&") or self._at_punct("||"):
            op_tok = self._advance()
            window = None
            if op_tok.value == "&&" and self._at_punct("["):
                window = self._window()
            right = self._search_rel()
            left = ast.RelOp(op_tok.value, left, right, window, loc=self._loc(op_tok))
        return left

    def _search_rel(self) -> ast.SearchRel:
        from_tok = self._expect_ident("entity variable")
        optype = None
        if self._at_punct("["):
            self._advance()
            op_tok = self._peek()
            if op_tok.kind != "ident" or op_tok.value not in EVENT_OPS:
                self._error("an event operation (" + ", ".join(EVENT_OPS) + ")")
            optype = self._advance().value
            self._expect_punct("]")
        self._expect_punct("->")
        to_tok = self._expect_ident("entity variable")
        return ast.SearchRel(from_tok.value, optype, to_tok.value, loc=self._loc(from_tok))

    def _window(self) -> ast.Window:
        self._expect_punct("[")
        comp = "<="
        if self._at_punct("<") or self._at_punct("<="):
            comp = self._advance().value
        value = self._expect_int()
        unit_tok = self._peek()
        if unit_tok.kind != "unit":
            self._error("a time unit (m, s, or ms)")
        self._advance()
        self._expect_punct("]")
        return ast.Window(comp, value, unit_tok.value)

    def _track_stmt(self, bind: Optional[str], loc_tok: Optional[Token] = None) -> ast.TrackStmt:
        dir_tok = self._advance()  # back | forward
        self._expect_word("track")
        if self._at_word("where"):
            self._advance()
            poi = self._expr()
        else:
            tok = self._expect_ident("a graph variable or 'where <expr>'")
            poi = ast.VarPoi(tok.value, loc=self._loc(tok))
        self._expect_word("from")
        source = self._data_source()
        filters = self._track_filters()
        limit = self._track_limit()
        self._expect_punct(";")
        return ast.TrackStmt(
            bind, dir_tok.value, poi, source, filters, limit,
            loc=self._loc(loc_tok or dir_tok),
        )

    def _track_filters(self) -> ast.TrackFilters:
        filters = ast.TrackFilters()
        if self._at_word("include"):
            self._advance()
            filters.include_nodes, filters.include_edges = self._type_track_filter()
        if self._at_word("exclude"):
            self._advance()
            filters.exclude_nodes, filters.exclude_edges = self._type_track_filter()
        return filters

    def _type_track_filter(self):
        nodes = edges = None
        if self._at_word("nodes"):
            self._advance()
            self._expect_word("where")
            nodes = self._expr()
        if self._at_punct(","):
            self._advance()
        if self._at_word("edges"):
            self._advance()
            self._expect_word("where")
            edges = self._expr()
        if nodes is None and edges is None:
            self._error("'nodes where <expr>' or 'edges where <expr>'")
        return nodes, edges

    def _track_limit(self) -> Optional[ast.TrackLimit]:
        if not self._at_word("limit"):
            return None
        self._advance()
        step = time_s = None
        if self._at_word("step"):
            self._advance()
            step = self._expect_int()
        if self._at_punct(","):
            self._advance()
        if self._at_word("time"):
            self._advance()
            time_s = self._expect_int()
        if step is None and time_s is None:
            self._error("'step <int>' or 'time <int>'")
        return ast.TrackLimit(step, time_s)

    def _display_stmt(self) -> ast.DisplayStmt:
        tok = self._expect_word("display")
        expr = self._graph_expr()
        self._expect_punct(";")
        return ast.DisplayStmt(expr, loc=self._loc(tok))

    def _export_stmt(self) -> ast.ExportStmt:
        tok = self._expect_word("export")
        expr = self._graph_expr()
        self._expect_word("as")
        path_tok = self._peek()
        if path_tok.kind != "string":
            self._error("a quoted file path")
        self._advance()
        self._expect_punct(";")
        return ast.ExportStmt(expr, path_tok.value, loc=self._loc(tok))

    # -- graph expressions ----------------------------------------------------

    def _graph_expr(self) -> ast.GraphExpr:
        left = self._graph_primary()
        while self._at_punct("|") or self._at_punct("&") or self._at_punct("-"):
            op_tok = self._advance()
            right = self._graph_primary()
            left = ast.GraphOp(op_tok.value, left, right, loc=self._loc(op_tok))
        return left

    def _graph_primary(self) -> ast.GraphExpr:
        if self._at_punct("("):
            self._advance()
            expr = self._graph_expr()
            self._expect_punct(")")
            return expr
        tok = self._expect_ident("graph variable")
        return ast.GraphVar(tok.value, loc=self._loc(tok))

    # -- attribute expressions ---------------------------------------------------

    def _expr(self) -> ast.Expr:
        left = self._and_expr()
        while self._at_punct("||"):
            op_tok = self._advance()
            left = ast.BoolOp("||", left, self._and_expr(), loc=self._loc(op_tok))
        return left

    def _and_expr(self) -> ast.Expr:
        left = self._unary_expr()
        while self._at_punct("&&"):
            op_tok = self._advance()
            left = ast.BoolOp("&&", left, self._unary_expr(), loc=self._loc(op_tok))
        return left

    def _unary_expr(self) -> ast.Expr:
        if self._at_punct("!"):
            tok = self._advance()
            return ast.Not(self._unary_expr(), loc=self._loc(tok))
        if self._at_punct("("):
            self._advance()
            expr = self._expr()
            self._expect_punct(")")
            return expr
        return self._comparison()

    def _comparison(self) -> ast.Comparison:
        tok = self._peek()
        attr = tok.value if tok.kind in ("ident", "keyword") else None
        if attr in STRING_ATTRIBUTES:
            self._advance()
            op = self._comparison_op(_EQ_OPS)
            val_tok = self._peek()
            if val_tok.kind == "string":
                value = self._advance().value
            elif val_tok.kind == "ident" and val_tok.value in _ENTITY_TYPES:
                value = self._advance().value
            else:
                self._error("a quoted string or entity type")
            return ast.Comparison(attr, op, value, loc=self._loc(tok))
        if attr in NUMERIC_ATTRIBUTES:
            self._advance()
            op = self._comparison_op(_NUMERIC_OPS)
            value = self._expect_int()
            return ast.Comparison(attr, op, value, loc=self._loc(tok))
        self._error("an attribute name")

    def _comparison_op(self, allowed) -> str:
        tok = self._peek()
        is_like = tok.kind == "keyword" and tok.value == "like"
        is_punct = tok.kind == "punct" and tok.value in allowed
        if not (is_punct or (is_like and "like" in allowed)):
            self._error("a comparison operator (" + ", ".join(allowed) + ")")
        return self._advance().value


def parse(text: str) -> list:
    """Parse a script into a statement list."""
    return Parser(text).parse()


def parse_one(text: str) -> ast.Stmt:
    return Parser(text).parse_one()
