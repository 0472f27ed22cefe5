"""Query language: lexer, parser, semantic analysis, printing, evaluation."""

from . import ast
from .analyzer import analyze, analyze_statement
from .lexer import tokenize
from .parser import parse, parse_one
from .printer import pretty, pretty_script

__all__ = ["ast", "tokenize", "parse", "parse_one", "pretty", "pretty_script", "analyze", "analyze_statement"]
