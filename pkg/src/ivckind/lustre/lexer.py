from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import LexError

KEYWORDS = {
    "node", "function", "returns", "var", "let", "tel",
    "if", "then", "else", "pre", "not", "and", "or", "xor",
    "div", "mod", "true", "false", "bool", "int", "real",
}

SYMBOLS = ("->", "=>", "<>", "<=", ">=", "(", ")", ",", ":", ";",
           "=", "<", ">", "+", "-", "*", "/")

_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?")


@dataclass(frozen=True)
class Token:
    kind: str  # id, int, real, kw, sym, pragma, eof
    value: Union[str, int, Fraction, tuple]
    pos: tuple[int, int]


def _real_literal(text: str) -> Fraction:
    return Fraction(text)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in source[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = source[i]
        pos = (line, col)
        if ch in " \t\r\n":
            advance(1)
        elif source.startswith("--%", i):
            end = source.find("\n", i)
            end = n if end == -1 else end
            body = source[i + 3:end].strip()
            m = _ID.match(body)
            if not m:
                raise LexError("malformed pragma", pos)
            tokens.append(Token("pragma", (m.group(0).upper(), body[m.end():].strip()), pos))
            advance(end - i)
        elif source.startswith("--", i):
            end = source.find("\n", i)
            advance((n if end == -1 else end) - i)
        elif source.startswith("(*", i) or source.startswith("/*", i):
            close = "*)" if ch == "(" else "*/"
            end = source.find(close, i + 2)
            if end == -1:
                raise LexError("unterminated comment", pos)
            advance(end + 2 - i)
        elif ch.isdigit():
            m = _NUM.match(source, i)
            text = m.group(0)
            if m.group(1) or m.group(2):
                tokens.append(Token("real", _real_literal(text), pos))
            else:
                tokens.append(Token("int", int(text), pos))
            advance(len(text))
        elif ch.isalpha() or ch == "_":
            text = _ID.match(source, i).group(0)
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, pos))
            advance(len(text))
        else:
            for sym in SYMBOLS:
                if source.startswith(sym, i):
                    tokens.append(Token("sym", sym, pos))
                    advance(len(sym))
                    break
            else:
                raise LexError(f"unexpected character {ch!r}", pos)
    tokens.append(Token("eof", "", (line, col)))
    return tokens
