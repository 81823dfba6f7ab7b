"""Transition systems with a named top-level conjunction.

A normalized Lustre node becomes ``(I, T, P)`` where

* the state holds every program variable plus a boolean ``~init`` flag that
  is true only in the pre-initial state, in which all other variables are
  unconstrained (this models ``pre`` being undefined on the first step);
* ``I = ~init``;
* ``T`` has one conjunct ``v' = enc(rhs)`` per equation, named after ``v``,
  plus ``not ~init'`` under the name ``~init``;
* a property variable ``p`` becomes ``~init or p``.

``enc`` reads variables in the next state, turns ``pre v`` into the current
value of ``v`` and ``e1 -> e2`` into ``if ~init then e1 else e2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from . import formula as fm
from .lustre import ast
from .lustre.errors import NotNormalizedError
from .lustre.normalize import is_normalized

INIT = "~init"

_SORTS = {ast.BOOL: fm.BOOL, ast.INT: fm.INT, ast.REAL: fm.REAL}


@dataclass(frozen=True)
class TransitionSystem:
    name: str
    state_vars: tuple[tuple[str, str], ...]
    conjuncts: tuple[tuple[str, fm.Term], ...]
    properties: tuple[tuple[str, fm.Term], ...]
    # Conjuncts that IVC algorithms may drop.  Everything else is kept.
    candidates: frozenset[str] = frozenset()
    # Non-candidates excluded by an --%IVC annotation; they are reported as
    # part of every core that reaches them.
    excluded: frozenset[str] = frozenset()
    inputs: tuple[str, ...] = field(default=(), compare=False)

    @property
    def init_pred(self) -> fm.Term:
        return fm.Var(INIT, fm.BOOL, 0)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.conjuncts]

    @property
    def candidate_names(self) -> list[str]:
        """Candidate conjunct names in source order."""
        return [n for n, _ in self.conjuncts if n in self.candidates]

    @property
    def fixed_names(self) -> list[str]:
        return [n for n, _ in self.conjuncts if n not in self.candidates]

    def conjunct(self, name: str) -> fm.Term:
        for n, f in self.conjuncts:
            if n == name:
                return f
        raise KeyError(name)

    def transition(self) -> fm.Term:
        return fm.and_(*(f for _, f in self.conjuncts))

    def property(self, name: str | None = None) -> fm.Term:
        if name is None:
            if not self.properties:
                raise KeyError("system has no property")
            return self.properties[0][1]
        for n, f in self.properties:
            if n == name:
                return f
        raise KeyError(name)

    def sorts(self) -> dict[str, str]:
        return dict(self.state_vars)

    def state(self, step: int) -> list[fm.Var]:
        return [fm.Var(n, s, step) for n, s in self.state_vars]


class _Encoder:
    def __init__(self, types: dict[str, str]):
        self.types = types
        self.init = fm.Var(INIT, fm.BOOL, 0)

    def var(self, name: str, step: int) -> fm.Var:
        return fm.Var(name, _SORTS[self.types[name]], step)

    def enc(self, e: ast.Expr) -> fm.Term:
        if isinstance(e, ast.Const):
            return fm.const(e.value, _SORTS[e.type])
        if isinstance(e, ast.Ident):
            return self.var(e.name, 1)
        if isinstance(e, ast.Unary):
            if e.op == "pre":
                if not isinstance(e.arg, ast.Ident):
                    raise NotNormalizedError("pre applied to a non-variable", e.pos)
                return self.var(e.arg.name, 0)
            arg = self.enc(e.arg)
            return fm.not_(arg) if e.op == "not" else fm.App("neg", (arg,), arg.sort)
        if isinstance(e, ast.Ite):
            return fm.ite(self.enc(e.cond), self.enc(e.then), self.enc(e.else_))
        if isinstance(e, ast.Call):
            raise NotNormalizedError(f"call to {e.node!r} was not inlined", e.pos)
        left, right = self.enc(e.left), self.enc(e.right)
        if e.op == "->":
            return fm.ite(self.init, left, right)
        op = {"<>": "distinct"}.get(e.op, e.op)
        return fm.app(op, left, right)


def lower(program: ast.Program) -> TransitionSystem:
    if not is_normalized(program):
        raise NotNormalizedError("lower() needs a normalized single-node program")
    node = program.main_node
    types = node.var_types()
    encoder = _Encoder(types)
    conjuncts = []
    for eq in node.equations:
        conjuncts.append((eq.target, fm.eq(encoder.var(eq.target, 1), encoder.enc(eq.rhs))))
    conjuncts.append((INIT, fm.not_(fm.Var(INIT, fm.BOOL, 1))))
    init0 = fm.Var(INIT, fm.BOOL, 0)
    props = tuple((p, fm.or_(init0, encoder.var(p, 0))) for p in node.properties)
    prop_vars = set(node.properties)
    annotated = node.ivc_candidates
    defined = [eq.target for eq in node.equations]
    candidates = frozenset(v for v in defined if v in annotated and v not in prop_vars)
    excluded = frozenset(v for v in defined if v not in annotated and v not in prop_vars)
    state_vars = tuple((n, _SORTS[t]) for n, t in node.inputs + node.outputs + node.locals)
    return TransitionSystem(
        name=node.name,
        state_vars=state_vars + ((INIT, fm.BOOL),),
        conjuncts=tuple(conjuncts),
        properties=props,
        candidates=candidates,
        excluded=excluded,
        inputs=tuple(n for n, _ in node.inputs),
    )


def restrict(ts: TransitionSystem, keep: Iterable[str]) -> TransitionSystem:
    """Drop every conjunct not named in ``keep`` (``~init`` always stays).

    Variables of dropped conjuncts stay in the state and become free.
    """
    keep = set(keep)
    unknown = keep - set(ts.names)
    if unknown:
        raise KeyError(f"unknown conjunct(s): {', '.join(sorted(unknown))}")
    keep.add(INIT)
    return replace(ts, conjuncts=tuple((n, f) for n, f in ts.conjuncts if n in keep))


def _primed(t: fm.Term) -> fm.Term:
    mapping = {v: fm.Var(v.name + ("'" if v.step == 1 else ""), v.sort, None)
               for v in fm.free_vars(t) if v.step is not None}
    return fm.substitute(t, mapping)


def dump(ts: TransitionSystem) -> str:
    """SMT-LIB-style s-expression listing of (I, T, P)."""
    out = [f"; transition system {ts.name}"]
    for n, s in ts.state_vars:
        out.append(f"(declare-state |{n}| {s})")
    out.append(f"(init {fm.to_smt(_primed(ts.init_pred))})")
    for n, f in ts.conjuncts:
        tag = "conjunct" if n in ts.candidates else "fixed-conjunct"
        out.append(f"({tag} |{n}| {fm.to_smt(_primed(f))})")
    for n, f in ts.properties:
        out.append(f"(property |{n}| {fm.to_smt(_primed(f))})")
    return "\n".join(out) + "\n"


def from_source(source: str):
    """Parse, normalize and lower; returns ``(normalized_program, ts)``."""
    from .lustre import normalize, parse
    program = normalize(parse(source))
    return program, lower(program)


def dependencies(ts: TransitionSystem) -> dict[str, set[str]]:
    """Conjunct name -> conjunct names whose variables it mentions."""
    names = set(ts.names)
    return {n: {v.name for v in fm.free_vars(f)} & names - {n, INIT}
            for n, f in ts.conjuncts}


def slice_names(ts: TransitionSystem, roots: Iterable[str]) -> set[str]:
    """Backward slice over conjuncts (same fixpoint as the source-level slicer)."""
    deps = dependencies(ts)
    seen: set[str] = set()
    work = [r for r in roots if r in deps]
    while work:
        n = work.pop()
        if n not in seen:
            seen.add(n)
            work.extend(deps[n] - seen)
    return seen
