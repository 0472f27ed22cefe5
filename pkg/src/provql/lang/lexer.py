"""Regex-driven tokenizer.

Produces (kind, value, pos) tokens; line/column locations are resolved
lazily through `Lexer.location` so the hot path stays cheap.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import Union

from ..errors import LexError, SourceLocation

# Words with structural meaning. Attribute names, event operations, and
# entity type names are deliberately not reserved; the parser matches them
# by value where the grammar expects them.
KEYWORDS = frozenset({
    "search", "from", "where", "with", "return", "as", "db",
    "back", "forward", "track", "include", "exclude", "nodes", "edges",
    "limit", "step", "time", "display", "export", "like",
})

_MASTER = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>//[^\n]*)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<intunit>\d+(?:ms|m|s)(?![A-Za-z0-9_]))
    | (?P<int>\d+)
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>->|&&|\|\||!=|<=|>=|[=<>!{}\[\](),;|&*-])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(slots=True)
class Token:
    kind: str  # keyword | ident | string | int | unit | punct | eof
    value: Union[str, int]
    pos: int


def _unescape(raw: str) -> str:
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw):
            out.append(_ESCAPES.get(raw[i + 1], raw[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self._line_starts = None

    def location(self, pos: int) -> SourceLocation:
        if self._line_starts is None:
            starts = [0]
            for m in re.finditer("\n", self.text):
                starts.append(m.end())
            self._line_starts = starts
        line = bisect_right(self._line_starts, pos)
        return SourceLocation(line, pos - self._line_starts[line - 1] + 1)

    def tokenize(self) -> list:
        text = self.text
        tokens = []
        pos = 0
        n = len(text)
        match = _MASTER.match
        while pos < n:
            m = match(text, pos)
            if m is None:
                if text[pos] == '"':
                    raise LexError("unterminated string literal", self.location(pos))
                raise LexError(f"unexpected character {text[pos]!r}", self.location(pos))
            kind = m.lastgroup
            if kind == "ws" or kind == "comment":
                pos = m.end()
                continue
            value = m.group()
            if kind == "word":
                tokens.append(Token("keyword" if value in KEYWORDS else "ident", value, pos))
            elif kind == "int":
                tokens.append(Token("int", int(value), pos))
            elif kind == "intunit":
                digits = value.rstrip("ms")
                # rstrip eats both letters; recover the unit from the tail
                unit = value[len(digits):]
                tokens.append(Token("int", int(digits), pos))
                tokens.append(Token("unit", unit, pos + len(digits)))
            elif kind == "string":
                tokens.append(Token("string", _unescape(value[1:-1]), pos))
            else:
                tokens.append(Token("punct", value, pos))
            pos = m.end()
        tokens.append(Token("eof", "", n))
        return tokens


def tokenize(text: str) -> list:
    return Lexer(text).tokenize()
