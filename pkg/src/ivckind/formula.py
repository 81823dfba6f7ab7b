"""Quantifier-free terms over booleans and linear integer/real arithmetic.

A :class:`Var` carries a ``step``.  Inside a transition system ``step`` is 0
for the current state and 1 for the next (primed) state; unrolled queries
use absolute step indices.  ``step=None`` marks a global symbol such as an
activation literal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Union

BOOL = "Bool"
INT = "Int"
REAL = "Real"


@dataclass(frozen=True)
class Const:
    value: Union[bool, int, Fraction]
    sort: str


@dataclass(frozen=True)
class Var:
    name: str
    sort: str
    step: Optional[int] = 0


@dataclass(frozen=True)
class App:
    op: str
    args: tuple
    sort: str


Term = Union[Const, Var, App]

TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)


def const(value, sort: str) -> Const:
    if sort == REAL:
        value = Fraction(value)
    return Const(value, sort)


def and_(*args: Term) -> Term:
    flat = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        if isinstance(a, App) and a.op == "and":
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return App("and", tuple(flat), BOOL)


def or_(*args: Term) -> Term:
    flat = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        if isinstance(a, App) and a.op == "or":
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return App("or", tuple(flat), BOOL)


def not_(a: Term) -> Term:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    if isinstance(a, App) and a.op == "not":
        return a.args[0]
    return App("not", (a,), BOOL)


def implies(a: Term, b: Term) -> Term:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return App("=>", (a, b), BOOL)


def eq(a: Term, b: Term) -> Term:
    return App("=", (a, b), BOOL)


def ite(c: Term, a: Term, b: Term) -> Term:
    if c == TRUE:
        return a
    if c == FALSE:
        return b
    return App("ite", (c, a, b), a.sort)


def app(op: str, *args: Term) -> App:
    if op in ("<", "<=", ">", ">=", "=", "distinct", "and", "or", "not", "=>", "xor"):
        sort = BOOL
    elif op == "ite":
        sort = args[1].sort
    else:
        sort = args[0].sort
    return App(op, tuple(args), sort)


@lru_cache(maxsize=None)
def shift(t: Term, k: int) -> Term:
    """Move every stepped variable ``k`` steps forward."""
    if k == 0 or isinstance(t, Const):
        return t
    if isinstance(t, Var):
        return t if t.step is None else Var(t.name, t.sort, t.step + k)
    return App(t.op, tuple(shift(a, k) for a in t.args), t.sort)


@lru_cache(maxsize=None)
def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t,))
    if isinstance(t, Const):
        return frozenset()
    out = frozenset()
    for a in t.args:
        out |= free_vars(a)
    return out


def steps_of(t: Term) -> set:
    return {v.step for v in free_vars(t)}


def subterms(t: Term):
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def substitute(t: Term, mapping: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t, t)
    if isinstance(t, Const):
        return t
    return App(t.op, tuple(substitute(a, mapping) for a in t.args), t.sort)


# -- SMT-LIB rendering ---------------------------------------------------

def symbol(v: Var) -> str:
    if v.step is None:
        return f"|{v.name}|"
    return f"|{v.name}@{v.step}|"


def _num(value, sort: str) -> str:
    if sort == INT:
        return str(value) if value >= 0 else f"(- {-value})"
    value = Fraction(value)
    num, den = abs(value.numerator), value.denominator
    body = f"{num}.0" if den == 1 else f"(/ {num}.0 {den}.0)"
    return body if value >= 0 else f"(- {body})"


@lru_cache(maxsize=None)
def to_smt(t: Term) -> str:
    if isinstance(t, Const):
        if t.sort == BOOL:
            return "true" if t.value else "false"
        return _num(t.value, t.sort)
    if isinstance(t, Var):
        return symbol(t)
    op = "-" if t.op == "neg" else t.op
    return f"({op} {' '.join(to_smt(a) for a in t.args)})"


# -- evaluation ----------------------------------------------------------

def _ediv(a: int, b: int) -> int:
    if b == 0:
        return 0
    q = a // b
    if a - q * b < 0:
        q += 1
    return q


def evaluate(t: Term, env: Mapping[Var, object]):
    """Evaluate a term under a total assignment of its free variables."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return env[t]
    op, args = t.op, t.args
    if op == "ite":
        return evaluate(args[1], env) if evaluate(args[0], env) else evaluate(args[2], env)
    if op == "and":
        return all(evaluate(a, env) for a in args)
    if op == "or":
        return any(evaluate(a, env) for a in args)
    vals = [evaluate(a, env) for a in args]
    if op == "not":
        return not vals[0]
    if op == "=>":
        return (not vals[0]) or vals[1]
    if op == "xor":
        return vals[0] != vals[1]
    if op == "=":
        return all(v == vals[0] for v in vals[1:])
    if op == "distinct":
        return len(set(vals)) == len(vals)
    if op == "neg":
        return -vals[0]
    if op == "+":
        return sum(vals[1:], vals[0])
    if op == "-":
        out = vals[0]
        for v in vals[1:]:
            out -= v
        return out
    if op == "*":
        out = vals[0]
        for v in vals[1:]:
            out *= v
        return out
    if op == "/":
        return Fraction(vals[0]) / Fraction(vals[1]) if vals[1] != 0 else Fraction(0)
    if op == "div":
        return _ediv(vals[0], vals[1])
    if op == "mod":
        return vals[0] - vals[1] * _ediv(vals[0], vals[1]) if vals[1] != 0 else vals[0]
    if op == "<":
        return vals[0] < vals[1]
    if op == "<=":
        return vals[0] <= vals[1]
    if op == ">":
        return vals[0] > vals[1]
    if op == ">=":
        return vals[0] >= vals[1]
    raise ValueError(f"unknown operator {op}")


def pretty(t: Term) -> str:
    """Human-readable infix rendering; primed variables for step 1."""
    if isinstance(t, Const):
        if t.sort == BOOL:
            return "true" if t.value else "false"
        return str(t.value)
    if isinstance(t, Var):
        if t.step == 1:
            return t.name + "'"
        if t.step in (0, None):
            return t.name
        return f"{t.name}@{t.step}"
    op, a = t.op, t.args
    if op == "not":
        return f"not {pretty(a[0])}"
    if op == "neg":
        return f"-{pretty(a[0])}"
    if op == "ite":
        return f"(if {pretty(a[0])} then {pretty(a[1])} else {pretty(a[2])})"
    return "(" + f" {op} ".join(pretty(x) for x in a) + ")"
