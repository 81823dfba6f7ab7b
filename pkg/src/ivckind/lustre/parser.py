"""Recursive-descent parser for the Lustre subset.

Grammar (informally)::

    program  := node+
    node     := ("node" | "function") ID "(" [decls] ")" "returns" "(" decls ")" [";"]
                ["var" (decls ";")+] "let" (equation | pragma)* "tel" [";" | "."]
    decls    := decl (";" decl)* [";"]
    decl     := ID ("," ID)* ":" ("bool" | "int" | "real")
    equation := ID "=" expr ";"
    pragma   := "--%PROPERTY" ID ("," ID)* ";"
              | "--%IVC" [ID ("," ID)*] ";"
              | "--%MAIN" [";"]

Operator precedence, loosest first: ``->`` (right), ``=>`` (right),
``or``/``xor``, ``and``, comparisons (non-associative), ``not``, ``+``/``-``,
``*``/``/``/``div``/``mod``, then prefix ``-`` and ``pre``.  ``if`` is a
prefix form whose ``else`` branch extends as far right as possible.
"""

from __future__ import annotations

import re
from typing import Optional

from . import ast
from .errors import ParseError
from .lexer import Token, tokenize

_PRAGMA_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, kind: str, value=None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_sym(self, *values: str) -> bool:
        return self.tok.kind == "sym" and self.tok.value in values

    def at_kw(self, *values: str) -> bool:
        return self.tok.kind == "kw" and self.tok.value in values

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind: str, value=None) -> Token:
        if not self.at(kind, value):
            want = repr(value) if value is not None else kind
            got = self.tok.value if self.tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want}, found {got!r}", self.tok.pos)
        return self.next()

    def accept(self, kind: str, value=None) -> Optional[Token]:
        if self.at(kind, value):
            return self.next()
        return None

    # -- declarations --------------------------------------------------
    def program(self) -> ast.Program:
        nodes = []
        while not self.at("eof"):
            nodes.append(self.node())
        if not nodes:
            raise ParseError("expected node", self.tok.pos)
        mains = [n for n in nodes if n.is_main]
        if len(mains) > 1:
            raise ParseError("more than one node marked --%MAIN", mains[1].pos)
        main = mains[0].name if mains else nodes[-1].name
        return ast.Program(tuple(nodes), main)

    def node(self) -> ast.Node:
        if self.at("pragma"):
            raise ParseError("pragma outside of a node body", self.tok.pos)
        if not self.at_kw("node", "function"):
            raise ParseError("expected node", self.tok.pos)
        start = self.next().pos
        name = self.expect("id").value
        self.expect("sym", "(")
        inputs = () if self.at_sym(")") else self.decls()
        self.expect("sym", ")")
        self.expect("kw", "returns")
        self.expect("sym", "(")
        outputs = self.decls()
        self.expect("sym", ")")
        self.accept("sym", ";")
        locals_: tuple = ()
        if self.accept("kw", "var"):
            while self.at("id"):
                locals_ += self.decl()
                self.expect("sym", ";")
        self.expect("kw", "let")
        equations, props, ivc, is_main = [], [], None, False
        while not self.at_kw("tel"):
            if self.at("pragma"):
                tok = self.next()
                kind, body = tok.value
                names = self._pragma_names(body, tok.pos)
                if kind == "PROPERTY":
                    if not names:
                        raise ParseError("--%PROPERTY needs a variable", tok.pos)
                    props.extend(names)
                elif kind == "IVC":
                    ivc = (ivc or ()) + tuple(n for n in names if n not in (ivc or ()))
                elif kind == "MAIN":
                    is_main = True
                else:
                    raise ParseError(f"unknown pragma --%{kind}", tok.pos)
            elif self.at("eof"):
                raise ParseError("expected 'tel'", self.tok.pos)
            else:
                equations.append(self.equation())
        self.next()
        if not self.accept("sym", ";"):
            self.accept("sym", ".")
        return ast.Node(name, inputs, outputs, locals_, tuple(equations),
                        tuple(props), ivc, is_main, start)

    @staticmethod
    def _pragma_names(body: str, pos) -> list[str]:
        body = body.strip()
        if body.endswith(";"):
            body = body[:-1]
        names = [s.strip() for s in body.split(",")] if body.strip() else []
        for n in names:
            if not _PRAGMA_ID.match(n):
                raise ParseError(f"bad identifier {n!r} in pragma", pos)
        return names

    def decls(self) -> tuple:
        out = self.decl()
        while self.accept("sym", ";"):
            if not self.at("id"):
                break
            out += self.decl()
        return out

    def decl(self) -> tuple:
        names = [self.expect("id").value]
        while self.accept("sym", ","):
            names.append(self.expect("id").value)
        self.expect("sym", ":")
        if not self.at_kw(*ast.TYPES):
            raise ParseError("expected a type (bool, int, real)", self.tok.pos)
        ty = self.next().value
        return tuple((n, ty) for n in names)

    def equation(self) -> ast.Equation:
        tok = self.expect("id")
        self.expect("sym", "=")
        rhs = self.expr()
        self.expect("sym", ";")
        return ast.Equation(tok.value, rhs, tok.pos)

    # -- expressions ---------------------------------------------------
    def expr(self) -> ast.Expr:
        return self.arrow()

    def arrow(self) -> ast.Expr:
        left = self.implies()
        if self.at_sym("->"):
            pos = self.next().pos
            return ast.Binary("->", left, self.arrow(), pos)
        return left

    def implies(self) -> ast.Expr:
        left = self.disj()
        if self.at_sym("=>"):
            pos = self.next().pos
            return ast.Binary("=>", left, self.implies(), pos)
        return left

    def disj(self) -> ast.Expr:
        left = self.conj()
        while self.at_kw("or", "xor"):
            tok = self.next()
            left = ast.Binary(tok.value, left, self.conj(), tok.pos)
        return left

    def conj(self) -> ast.Expr:
        left = self.compare()
        while self.at_kw("and"):
            tok = self.next()
            left = ast.Binary("and", left, self.compare(), tok.pos)
        return left

    def compare(self) -> ast.Expr:
        left = self.negation()
        if self.at_sym("<", "<=", ">", ">=", "=", "<>"):
            tok = self.next()
            left = ast.Binary(tok.value, left, self.negation(), tok.pos)
            if self.at_sym("<", "<=", ">", ">=", "=", "<>"):
                raise ParseError("comparison operators do not chain", self.tok.pos)
        return left

    def negation(self) -> ast.Expr:
        if self.at_kw("not"):
            pos = self.next().pos
            return ast.Unary("not", self.negation(), pos)
        return self.additive()

    def additive(self) -> ast.Expr:
        left = self.multiplicative()
        while self.at_sym("+", "-"):
            tok = self.next()
            left = ast.Binary(tok.value, left, self.multiplicative(), tok.pos)
        return left

    def multiplicative(self) -> ast.Expr:
        left = self.prefix()
        while self.at_sym("*", "/") or self.at_kw("div", "mod"):
            tok = self.next()
            left = ast.Binary(tok.value, left, self.prefix(), tok.pos)
        return left

    def prefix(self) -> ast.Expr:
        if self.at_sym("-"):
            pos = self.next().pos
            return ast.Unary("-", self.prefix(), pos)
        if self.at_kw("pre"):
            pos = self.next().pos
            return ast.Unary("pre", self.prefix(), pos)
        return self.primary()

    def primary(self) -> ast.Expr:
        t = self.tok
        if t.kind == "int":
            self.next()
            return ast.Const(t.value, ast.INT, t.pos)
        if t.kind == "real":
            self.next()
            return ast.Const(t.value, ast.REAL, t.pos)
        if self.at_kw("true", "false"):
            self.next()
            return ast.Const(t.value == "true", ast.BOOL, t.pos)
        if self.at_kw("if"):
            self.next()
            cond = self.expr()
            self.expect("kw", "then")
            then = self.expr()
            self.expect("kw", "else")
            return ast.Ite(cond, then, self.expr(), t.pos)
        if t.kind == "id":
            self.next()
            if self.accept("sym", "("):
                args = []
                if not self.at_sym(")"):
                    args.append(self.expr())
                    while self.accept("sym", ","):
                        args.append(self.expr())
                self.expect("sym", ")")
                return ast.Call(t.value, tuple(args), t.pos)
            return ast.Ident(t.value, t.pos)
        if self.accept("sym", "("):
            e = self.expr()
            self.expect("sym", ")")
            return e
        got = t.value if t.kind != "eof" else "end of input"
        raise ParseError(f"expected an expression, found {got!r}", t.pos)


def parse_raw(source: str) -> ast.Program:
    """Parse without semantic checks."""
    return Parser(tokenize(source)).program()
