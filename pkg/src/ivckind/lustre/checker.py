"""Static checks: name resolution, definitions, typing, linearity, cycles."""

from __future__ import annotations

from typing import Optional

from . import ast
from .errors import (
    AnnotationError,
    CycleError,
    DuplicateDefinitionError,
    LustreTypeError,
    MissingDefinitionError,
    UnresolvedIdentifierError,
)

NUMERIC = (ast.INT, ast.REAL)


def const_value(e: ast.Expr) -> Optional[object]:
    """Fold an expression built only from literals, or return None."""
    if isinstance(e, ast.Const):
        return e.value
    if isinstance(e, ast.Unary) and e.op == "-":
        v = const_value(e.arg)
        return None if v is None or isinstance(v, bool) else -v
    if isinstance(e, ast.Binary) and e.op in ("+", "-", "*"):
        a, b = const_value(e.left), const_value(e.right)
        if a is None or b is None or isinstance(a, bool) or isinstance(b, bool):
            return None
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    return None


class TypeChecker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.nodes = {}
        for n in program.nodes:
            if n.name in self.nodes:
                raise DuplicateDefinitionError(f"node {n.name!r} defined twice", n.pos)
            self.nodes[n.name] = n

    def check(self) -> None:
        for node in self.program.nodes:
            self.check_node(node)
        for node in self.program.nodes:
            check_cycles(node, self.nodes)

    def check_node(self, node: ast.Node) -> None:
        env: dict[str, str] = {}
        for name, ty in node.inputs + node.outputs + node.locals:
            if name in env:
                raise DuplicateDefinitionError(f"variable {name!r} declared twice", node.pos)
            if name in self.nodes:
                raise DuplicateDefinitionError(f"variable {name!r} shadows a node", node.pos)
            env[name] = ty
        inputs = {n for n, _ in node.inputs}
        defined: set[str] = set()
        for eq in node.equations:
            if eq.target not in env:
                raise UnresolvedIdentifierError(f"equation for undeclared variable {eq.target!r}", eq.pos)
            if eq.target in inputs:
                raise DuplicateDefinitionError(f"input {eq.target!r} cannot be defined by an equation", eq.pos)
            if eq.target in defined:
                raise DuplicateDefinitionError(f"variable {eq.target!r} defined more than once", eq.pos)
            defined.add(eq.target)
            ty = self.type_of(eq.rhs, env)
            if ty != env[eq.target]:
                raise LustreTypeError(
                    f"equation for {eq.target!r} has type {ty}, expected {env[eq.target]}", eq.pos)
        for name in node.defined():
            if name not in defined:
                raise MissingDefinitionError(f"no equation defines {name!r}", node.pos)
        for p in node.properties:
            if p not in env:
                raise UnresolvedIdentifierError(f"property names unknown variable {p!r}", node.pos)
            if env[p] != ast.BOOL:
                raise LustreTypeError(f"property {p!r} is not boolean", node.pos)
        if node.ivc is not None:
            for v in node.ivc:
                if v not in defined:
                    raise AnnotationError(f"--%IVC names {v!r}, which is not a defined variable", node.pos)

    def type_of(self, e: ast.Expr, env: dict[str, str]) -> str:
        if isinstance(e, ast.Const):
            return e.type
        if isinstance(e, ast.Ident):
            if e.name not in env:
                raise UnresolvedIdentifierError(f"unknown identifier {e.name!r}", e.pos)
            return env[e.name]
        if isinstance(e, ast.Unary):
            t = self.type_of(e.arg, env)
            if e.op == "pre":
                return t
            if e.op == "not":
                self._want(t, (ast.BOOL,), e)
                return ast.BOOL
            self._want(t, NUMERIC, e)
            return t
        if isinstance(e, ast.Ite):
            self._want(self.type_of(e.cond, env), (ast.BOOL,), e)
            a, b = self.type_of(e.then, env), self.type_of(e.else_, env)
            if a != b:
                raise LustreTypeError(f"if branches have types {a} and {b}", e.pos)
            return a
        if isinstance(e, ast.Call):
            return self._call_type(e, env)
        a, b = self.type_of(e.left, env), self.type_of(e.right, env)
        op = e.op
        if op in ast.BOOL_OPS:
            self._want(a, (ast.BOOL,), e)
            self._want(b, (ast.BOOL,), e)
            return ast.BOOL
        if a != b:
            raise LustreTypeError(f"operands of {op!r} have types {a} and {b}", e.pos)
        if op == "->":
            return a
        if op in ast.EQUALITY_OPS:
            return ast.BOOL
        self._want(a, NUMERIC, e)
        if op in ast.COMPARE_OPS:
            return ast.BOOL
        if op in ("div", "mod"):
            self._want(a, (ast.INT,), e)
            divisor = const_value(e.right)
            if divisor is None:
                raise LustreTypeError(f"{op!r} needs a constant divisor (linear arithmetic only)", e.pos)
            if divisor == 0:
                raise LustreTypeError("division by the constant zero", e.pos)
        elif op == "/":
            self._want(a, (ast.REAL,), e)
            divisor = const_value(e.right)
            if divisor is None:
                raise LustreTypeError("'/' needs a constant divisor (linear arithmetic only)", e.pos)
            if divisor == 0:
                raise LustreTypeError("division by the constant zero", e.pos)
        elif op == "*":
            if const_value(e.left) is None and const_value(e.right) is None:
                raise LustreTypeError("'*' needs a constant operand (linear arithmetic only)", e.pos)
        return a

    def _call_type(self, e: ast.Call, env: dict[str, str]) -> str:
        callee = self.nodes.get(e.node)
        if callee is None:
            raise UnresolvedIdentifierError(f"unknown node {e.node!r}", e.pos)
        if len(callee.outputs) != 1:
            raise LustreTypeError(f"node {e.node!r} must have exactly one output to be called", e.pos)
        if len(e.args) != len(callee.inputs):
            raise LustreTypeError(
                f"node {e.node!r} takes {len(callee.inputs)} arguments, got {len(e.args)}", e.pos)
        for arg, (pname, pty) in zip(e.args, callee.inputs):
            t = self.type_of(arg, env)
            if t != pty:
                raise LustreTypeError(f"argument {pname!r} of {e.node!r} has type {t}, expected {pty}", e.pos)
        return callee.outputs[0][1]

    @staticmethod
    def _want(t: str, allowed: tuple, e) -> None:
        if t not in allowed:
            raise LustreTypeError(f"expected {' or '.join(allowed)}, found {t}", e.pos)


def instant_deps(e: ast.Expr, nodes: dict, _memo: Optional[dict] = None) -> set[str]:
    """Variables read by ``e`` in the same instant (not under ``pre``)."""
    out: set[str] = set()
    stack = [e]
    while stack:
        cur = stack.pop()
        if isinstance(cur, ast.Ident):
            out.add(cur.name)
        elif isinstance(cur, ast.Unary):
            if cur.op != "pre":
                stack.append(cur.arg)
        elif isinstance(cur, ast.Binary):
            stack.extend((cur.left, cur.right))
        elif isinstance(cur, ast.Ite):
            stack.extend((cur.cond, cur.then, cur.else_))
        elif isinstance(cur, ast.Call):
            through = _through_inputs(cur.node, nodes, _memo if _memo is not None else {})
            for idx, arg in enumerate(cur.args):
                if through is None or idx in through:
                    stack.append(arg)
    return out


def _through_inputs(name: str, nodes: dict, memo: dict):
    """Indices of inputs the node's output reads instantaneously.

    None means "assume all"; it is returned while a node is still being
    analysed, which only happens for recursive node sets (rejected later
    during normalization).
    """
    if name in memo:
        return memo[name]
    memo[name] = None
    node = nodes[name]
    deps = {eq.target: instant_deps(eq.rhs, nodes, memo) for eq in node.equations}
    out = node.outputs[0][0]
    seen, stack = set(), [out]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(deps.get(v, ()))
    result = {i for i, (n, _) in enumerate(node.inputs) if n in seen}
    memo[name] = result
    return result


def check_cycles(node: ast.Node, nodes: dict) -> None:
    memo: dict = {}
    deps = {eq.target: instant_deps(eq.rhs, nodes, memo) & {e.target for e in node.equations}
            for eq in node.equations}
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in deps}
    for root in deps:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(deps[root])))]
        color[root] = GREY
        path = [root]
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GREY:
                cyc = path[path.index(nxt):] + [nxt]
                eq = node.equation_for(nxt)
                raise CycleError("instantaneous dependency cycle: " + " -> ".join(cyc),
                                 eq.pos if eq else node.pos)
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(sorted(deps[nxt]))))


def infer_type(e: ast.Expr, env: dict[str, str], program: ast.Program) -> str:
    return TypeChecker(program).type_of(e, env)

