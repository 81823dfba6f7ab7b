"""Flatten a checked program into a single main node.

Two rewrites are applied:

* every node call is inlined.  Instance ``k`` of callee ``f`` gets variables
  ``f~k.<name>``: one equation per formal input (bound to the actual
  argument) plus a renamed copy of each callee equation.  The call site is
  replaced by the callee's output variable.
* every ``pre e`` whose operand is not a variable gets a fresh equation
  ``<target>~<n> = e`` and becomes ``pre <target>~<n>``.

Arrows are left where they are; the transition-system encoding handles
them at any depth.  ``~`` cannot occur in source identifiers, so generated
names never capture user names, and numbering is deterministic.
"""

from __future__ import annotations

from . import ast
from .checker import TypeChecker
from .errors import NodeRecursionError


def _call_graph_check(program: ast.Program) -> None:
    edges = {}
    for node in program.nodes:
        callees = set()
        for eq in node.equations:
            callees |= {e.node for e in ast.subexprs(eq.rhs) if isinstance(e, ast.Call)}
        edges[node.name] = callees
    done, active = set(), []

    def visit(name: str) -> None:
        if name in done:
            return
        if name in active:
            cyc = active[active.index(name):] + [name]
            raise NodeRecursionError("recursive nodes are not supported: " + " -> ".join(cyc),
                                     program.node(name).pos)
        active.append(name)
        for callee in sorted(edges[name]):
            visit(callee)
        active.pop()
        done.add(name)

    visit(program.main)


class _Flattener:
    def __init__(self, program: ast.Program):
        self.program = program
        self.checker = TypeChecker(program)
        self.instances: dict[str, int] = {}
        self.locals: list[tuple[str, str]] = []
        self.equations: list[ast.Equation] = []
        # name -> whether the generated equation is an IVC candidate
        self.candidacy: dict[str, bool] = {}

    def fresh_instance(self, callee: str) -> str:
        k = self.instances.get(callee, 0)
        self.instances[callee] = k + 1
        return f"{callee}~{k}"

    def inline_node(self, node: ast.Node, rename: dict[str, str], env: dict[str, str],
                    candidate_of: dict[str, bool]) -> None:
        """Emit the (renamed) equations of ``node`` into the flat node."""
        for eq in node.equations:
            target = rename[eq.target]
            rhs = self._rename(eq.rhs, rename)
            cand = candidate_of[eq.target]
            rhs = self._inline_calls(rhs, env, cand)
            self._emit(target, rhs, env, cand)

    def _rename(self, e: ast.Expr, rename: dict[str, str]) -> ast.Expr:
        def fn(x):
            if isinstance(x, ast.Ident):
                return ast.Ident(rename.get(x.name, x.name), x.pos)
            return x
        return ast.map_expr(e, fn)

    def _inline_calls(self, e: ast.Expr, env: dict[str, str], cand: bool) -> ast.Expr:
        def fn(x):
            if not isinstance(x, ast.Call):
                return x
            callee = self.program.node(x.node)
            prefix = self.fresh_instance(callee.name)
            rename = {n: f"{prefix}.{n}" for n, _ in callee.inputs + callee.outputs + callee.locals}
            for (pname, pty), arg in zip(callee.inputs, x.args):
                name = rename[pname]
                self.locals.append((name, pty))
                env[name] = pty
                self._emit(name, arg, env, cand)
            for n, t in callee.outputs + callee.locals:
                self.locals.append((rename[n], t))
                env[rename[n]] = t
            inner = {n: cand for n in callee.defined()}
            self.inline_node(callee, rename, env, inner)
            return ast.Ident(rename[callee.outputs[0][0]], x.pos)
        return ast.map_expr(e, fn)

    def _emit(self, target: str, rhs: ast.Expr, env: dict[str, str], cand: bool) -> None:
        counter = [0]
        pending: list[ast.Equation] = []

        def lift(x):
            if isinstance(x, ast.Unary) and x.op == "pre" and not isinstance(x.arg, ast.Ident):
                name = f"{target}~{counter[0]}"
                counter[0] += 1
                ty = self.checker.type_of(x.arg, env)
                env[name] = ty
                self.locals.append((name, ty))
                self.candidacy[name] = cand
                pending.append(ast.Equation(name, x.arg, x.pos))
                return ast.Unary("pre", ast.Ident(name, x.pos), x.pos)
            return x

        rhs = ast.map_expr(rhs, lift)
        self.equations.extend(pending)
        self.equations.append(ast.Equation(target, rhs))
        self.candidacy.setdefault(target, cand)


def normalize(program: ast.Program) -> ast.Program:
    _call_graph_check(program)
    main = program.main_node
    flat = _Flattener(program)
    env = main.var_types()
    candidates = main.ivc_candidates
    identity = {n: n for n in env}
    flat.inline_node(main, identity, env, {n: n in candidates for n in main.defined()})

    locals_ = main.locals + tuple(flat.locals)
    ivc = None
    if main.ivc is not None:
        ivc = tuple(n for n, _ in main.outputs + locals_ if flat.candidacy.get(n, False))
    node = ast.Node(main.name, main.inputs, main.outputs, locals_, tuple(flat.equations),
                    main.properties, ivc, False, main.pos)
    return ast.Program((node,), node.name)


def is_normalized(program: ast.Program) -> bool:
    if len(program.nodes) != 1:
        return False
    for eq in program.nodes[0].equations:
        for e in ast.subexprs(eq.rhs):
            if isinstance(e, ast.Call):
                return False
            if isinstance(e, ast.Unary) and e.op == "pre" and not isinstance(e.arg, ast.Ident):
                return False
    return True
