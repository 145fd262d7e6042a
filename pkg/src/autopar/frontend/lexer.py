from __future__ import annotations

import re
from dataclasses import dataclass

from autopar.errors import ParseError
from autopar.frontend.ast import SourceSpan

KEYWORDS = {
    "int", "float", "bool", "void", "if", "else", "while", "for", "return",
    "break", "continue", "true", "false", "new",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>=!(){}\[\];,:@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int, float, ident, keyword, op, eof
    text: str
    span: SourceSpan

    def __str__(self):
        return self.text or self.kind


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            span = SourceSpan(filename, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {source[pos]!r}", span)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            span = SourceSpan(filename, line, pos - line_start + 1, len(text))
            tokens.append(Token(kind, text, span))
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, line, pos - line_start + 1, 0)))
    return tokens
