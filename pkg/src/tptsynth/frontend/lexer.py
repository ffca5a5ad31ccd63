"""Indentation-aware tokenizer for the model language.

Layout follows Python: a logical line ends in NEWLINE, leading spaces open or
close blocks through INDENT/DEDENT, and newlines inside brackets are ignored.
Only spaces may be used for indentation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from tptsynth.errors import LexError

KEYWORDS = frozenset(
    {
        "Param",
        "Var",
        "def",
        "return",
        "if",
        "elif",
        "else",
        "for",
        "in",
        "with",
        "as",
        "and",
        "or",
        "not",
    }
)

# Longest operators first so that "==" wins over "=".
_OPERATORS = ("==", "!=", "<=", ">=", "+", "-", "*", "/", "%", "<", ">", "=")
_PUNCT = "()[],:.@;"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ ]+)
  | (?P<comment>\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[-+*/%<>=])
  | (?P<punct>[()\[\],:.@;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | integer-literal | operator | punctuation | newline | indent | dedent | eof
    text: str
    line: int
    column: int

    def is_(self, kind: str, text: str | None = None) -> bool:
        return self.kind == kind and (text is None or self.text == text)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.column})"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    indents = [0]
    depth = 0  # bracket nesting; newlines inside brackets are not significant
    lines = source.split("\n")

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        stripped = line.lstrip(" ")
        if depth == 0:
            if not stripped.strip() or stripped.startswith("#"):
                continue
            if stripped[0] == "\t":
                raise LexError("tab character in indentation", lineno, line.index("\t") + 1)
            width = len(line) - len(stripped)
            if width > indents[-1]:
                indents.append(width)
                tokens.append(Token("indent", "", lineno, 1))
            else:
                while width < indents[-1]:
                    indents.pop()
                    tokens.append(Token("dedent", "", lineno, 1))
                if width != indents[-1]:
                    raise LexError("inconsistent dedent level", lineno, width + 1)
            pos = width
        else:
            pos = 0

        emitted = False
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                ch = line[pos]
                if ch == "\t":
                    pos += 1
                    continue
                raise LexError(f"unexpected character {ch!r}", lineno, pos + 1)
            kind = m.lastgroup
            text = m.group()
            col = pos + 1
            pos = m.end()
            if kind in ("ws", "comment"):
                continue
            if kind == "int":
                tokens.append(Token("integer-literal", text, lineno, col))
            elif kind == "name":
                tokens.append(Token("keyword" if text in KEYWORDS else "identifier", text, lineno, col))
            elif kind == "op":
                tokens.append(Token("operator", text, lineno, col))
            else:
                if text in "([":
                    depth += 1
                elif text in ")]":
                    depth = max(0, depth - 1)
                tokens.append(Token("punctuation", text, lineno, col))
            emitted = True

        if depth == 0 and (emitted or (tokens and tokens[-1].kind not in ("newline", "indent", "dedent"))):
            if tokens and tokens[-1].kind != "newline":
                tokens.append(Token("newline", "", lineno, len(line) + 1))

    end_line = len(lines) + 1
    if tokens and tokens[-1].kind not in ("newline", "dedent"):
        tokens.append(Token("newline", "", end_line, 1))
    while len(indents) > 1:
        indents.pop()
        tokens.append(Token("dedent", "", end_line, 1))
    tokens.append(Token("eof", "", end_line, 1))
    return tokens
