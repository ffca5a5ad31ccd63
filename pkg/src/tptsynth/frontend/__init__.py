"""Lexing, preprocessing, parsing and static checking of model sources."""

from tptsynth.frontend import ast
from tptsynth.frontend.lexer import Token, tokenize
from tptsynth.frontend.parser import parse, parse_source
from tptsynth.frontend.preprocess import preprocess
from tptsynth.frontend.printer import format_expr, format_program
from tptsynth.frontend.semantics import SemanticDiagnostic, check_semantics, diagnose

__all__ = [
    "ast",
    "Token",
    "tokenize",
    "preprocess",
    "parse",
    "parse_source",
    "format_expr",
    "format_program",
    "SemanticDiagnostic",
    "check_semantics",
    "diagnose",
]
