"""Reference interpreter for checked (not necessarily normalized) programs.

Values are Python ``bool``/``int``/``Fraction``.  ``pre`` on the first step
yields ``None`` (nil), which propagates strictly through every operator;
``e1 -> e2`` picks ``e1`` on the first step, so well-guarded programs never
observe nil.  Integer ``div``/``mod`` follow SMT-LIB (Euclidean) semantics.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional

from . import ast


def euclid_div(a: int, b: int) -> int:
    if b == 0:
        return 0
    q = a // b
    if a - q * b < 0:
        q += 1
    return q


def euclid_mod(a: int, b: int) -> int:
    if b == 0:
        return a
    return a - b * euclid_div(a, b)


def apply_binary(op: str, a, b):
    if a is None or b is None:
        return None
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return Fraction(a) / Fraction(b) if b != 0 else Fraction(0)
    if op == "div":
        return euclid_div(a, b)
    if op == "mod":
        return euclid_mod(a, b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "xor":
        return a != b
    if op == "=>":
        return (not a) or b
    raise ValueError(op)


class NodeInstance:
    """One running instance of a node; call ``step`` once per instant."""

    def __init__(self, program: ast.Program, node: ast.Node,
                 pre_init: Optional[Mapping[str, object]] = None):
        self.program = program
        self.node = node
        self.rhs = {eq.target: eq.rhs for eq in node.equations}
        self.first = True
        self.prev_pre: dict[int, object] = {}
        self.subs: dict[int, NodeInstance] = {}
        # Optional values for ``pre v`` on the first step (used to replay
        # solver traces, whose pre-initial state is concrete).
        self.pre_init = dict(pre_init or {})
        self.pres = [e for eq in node.equations for e in ast.subexprs(eq.rhs)
                     if isinstance(e, ast.Unary) and e.op == "pre"]
        self.calls = [e for eq in node.equations for e in ast.subexprs(eq.rhs)
                      if isinstance(e, ast.Call)]

    def step(self, inputs: Mapping[str, object]) -> dict[str, object]:
        env = {n: inputs.get(n) for n, _ in self.node.inputs}
        memo: dict[int, object] = {}
        self._env, self._memo, self._call_out = env, memo, {}

        for name in self.rhs:
            self._var(name)
        for call in self.calls:
            self._call(call)
        # Compute next-step pre values only after the whole instant is known.
        nxt = {id(p): self._eval(p.arg) for p in self.pres}
        self.prev_pre = nxt
        self.first = False
        return dict(env)

    def _var(self, name: str):
        env = self._env
        if name not in env:
            env[name] = self._eval(self.rhs[name])
        return env[name]

    def _call(self, e: ast.Call):
        key = id(e)
        if key not in self._call_out:
            sub = self.subs.get(key)
            if sub is None:
                sub = self.subs[key] = NodeInstance(self.program, self.program.node(e.node))
            args = [self._eval(a) for a in e.args]
            out = sub.step({n: v for (n, _), v in zip(sub.node.inputs, args)})
            self._call_out[key] = out[sub.node.outputs[0][0]]
        return self._call_out[key]

    def _eval(self, e: ast.Expr):
        key = id(e)
        if key in self._memo:
            return self._memo[key]
        v = self._compute(e)
        self._memo[key] = v
        return v

    def _compute(self, e: ast.Expr):
        if isinstance(e, ast.Const):
            return e.value
        if isinstance(e, ast.Ident):
            return self._var(e.name)
        if isinstance(e, ast.Unary):
            if e.op == "pre":
                if self.first:
                    if isinstance(e.arg, ast.Ident):
                        return self.pre_init.get(e.arg.name)
                    return None
                return self.prev_pre.get(id(e))
            a = self._eval(e.arg)
            if a is None:
                return None
            return (not a) if e.op == "not" else -a
        if isinstance(e, ast.Binary):
            if e.op == "->":
                left, right = self._eval(e.left), self._eval(e.right)
                return left if self.first else right
            return apply_binary(e.op, self._eval(e.left), self._eval(e.right))
        if isinstance(e, ast.Ite):
            c, a, b = self._eval(e.cond), self._eval(e.then), self._eval(e.else_)
            if c is None:
                return None
            return a if c else b
        if isinstance(e, ast.Call):
            return self._call(e)
        raise TypeError(e)


def run(program: ast.Program, trace: Iterable[Mapping[str, object]],
        pre_init: Optional[Mapping[str, object]] = None) -> list[dict[str, object]]:
    """Run the main node over a list of input assignments."""
    inst = NodeInstance(program, program.main_node, pre_init)
    return [inst.step(inp) for inp in trace]
