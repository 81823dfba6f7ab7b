"""Syntax tree for the supported Lustre subset.

Nodes are frozen dataclasses.  Source positions are carried for diagnostics
but excluded from equality, so two trees compare equal when they have the
same structure regardless of where they came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

Pos = Optional[tuple[int, int]]

BOOL = "bool"
INT = "int"
REAL = "real"
TYPES = (BOOL, INT, REAL)


@dataclass(frozen=True)
class Const:
    value: Union[bool, int, Fraction]
    type: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "-", "not", "pre"
    arg: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ite:
    cond: "Expr"
    then: "Expr"
    else_: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    node: str
    args: tuple["Expr", ...]
    pos: Pos = field(default=None, compare=False, repr=False)


Expr = Union[Const, Ident, Unary, Binary, Ite, Call]

ARITH_OPS = ("+", "-", "*", "/", "div", "mod")
COMPARE_OPS = ("<", "<=", ">", ">=")
EQUALITY_OPS = ("=", "<>")
BOOL_OPS = ("and", "or", "xor", "=>")
BINARY_OPS = ARITH_OPS + COMPARE_OPS + EQUALITY_OPS + BOOL_OPS + ("->",)


@dataclass(frozen=True)
class Equation:
    target: str
    rhs: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    name: str
    inputs: tuple[tuple[str, str], ...]
    outputs: tuple[tuple[str, str], ...]
    locals: tuple[tuple[str, str], ...]
    equations: tuple[Equation, ...]
    properties: tuple[str, ...] = ()
    # None means no --%IVC annotation was given.
    ivc: Optional[tuple[str, ...]] = None
    is_main: bool = False
    pos: Pos = field(default=None, compare=False, repr=False)

    def var_types(self) -> dict[str, str]:
        return dict(self.inputs + self.outputs + self.locals)

    def defined(self) -> list[str]:
        """Outputs and locals, in declaration order."""
        return [n for n, _ in self.outputs + self.locals]

    def equation_for(self, name: str) -> Optional[Equation]:
        for eq in self.equations:
            if eq.target == name:
                return eq
        return None

    @property
    def ivc_candidates(self) -> frozenset[str]:
        if self.ivc is None:
            return frozenset(self.defined())
        return frozenset(self.ivc)


@dataclass(frozen=True)
class Program:
    nodes: tuple[Node, ...]
    main: str

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    @property
    def main_node(self) -> Node:
        return self.node(self.main)


def subexprs(e: Expr) -> Iterator[Expr]:
    """Pre-order walk over an expression."""
    stack = [e]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Unary):
            stack.append(cur.arg)
        elif isinstance(cur, Binary):
            stack.extend((cur.right, cur.left))
        elif isinstance(cur, Ite):
            stack.extend((cur.else_, cur.then, cur.cond))
        elif isinstance(cur, Call):
            stack.extend(reversed(cur.args))


def idents(e: Expr) -> set[str]:
    return {x.name for x in subexprs(e) if isinstance(x, Ident)}


def map_expr(e: Expr, fn) -> Expr:
    """Rebuild ``e`` bottom-up, applying ``fn`` to every rebuilt node."""
    if isinstance(e, Unary):
        e = Unary(e.op, map_expr(e.arg, fn), e.pos)
    elif isinstance(e, Binary):
        e = Binary(e.op, map_expr(e.left, fn), map_expr(e.right, fn), e.pos)
    elif isinstance(e, Ite):
        e = Ite(map_expr(e.cond, fn), map_expr(e.then, fn), map_expr(e.else_, fn), e.pos)
    elif isinstance(e, Call):
        e = Call(e.node, tuple(map_expr(a, fn) for a in e.args), e.pos)
    return fn(e)
