"""k-induction: query construction, BMC, Houdini invariants and ``prove``.

Step convention: ``s0`` is the pre-initial state (``~init`` true, every
other variable unconstrained); the first observable program instant is
``s1``.  A counterexample of length ``k`` is a path ``s0 .. sk`` whose last
state violates the property.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import formula as fm
from . import smt
from .transition import INIT, TransitionSystem

log = logging.getLogger(__name__)

DEFAULT_MAX_K = 20
# Keeps the pairwise-implication template from exploding on wide models.
MAX_IMPLICATION_VARS = 16


@dataclass(frozen=True)
class InductiveProof:
    property: str
    k: int
    invariants: tuple = ()  # ((name, Formula), ...)
    engine: str = "k-induction"
    time_ms: float = field(default=0.0, compare=False)

    @property
    def invariant_names(self) -> list[str]:
        return [n for n, _ in self.invariants]


@dataclass(frozen=True)
class Counterexample:
    property: str
    length: int
    trace: tuple = ()  # one {var: value} dict per state s0 .. s_length
    time_ms: float = field(default=0.0, compare=False)

    def steps(self) -> list[dict]:
        """Program-visible instants (s1 onwards), without the init flag."""
        return [{n: v for n, v in st.items() if n != INIT} for st in self.trace[1:]]


@dataclass(frozen=True)
class Unknown:
    property: str
    reason: str
    k: int = 0
    time_ms: float = field(default=0.0, compare=False)


ProofResult = InductiveProof | Counterexample | Unknown


# -- queries ------------------------------------------------------------------

def _path(trans: fm.Term, k: int) -> list[fm.Term]:
    return [fm.shift(trans, j) for j in range(k)]


def base_query(ts: TransitionSystem, prop: fm.Term, k: int,
               trans: Optional[fm.Term] = None) -> fm.Term:
    """Conjunction of the k base checks I(s0) ∧ T.. ⇒ P(s_j), j < k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    trans = ts.transition() if trans is None else trans
    init = ts.init_pred
    steps = _path(trans, k - 1)
    return fm.and_(*(fm.implies(fm.and_(init, *steps[:j]), fm.shift(prop, j))
                     for j in range(k)))


def ind_query(ts: TransitionSystem, assume: fm.Term, prop: fm.Term, k: int,
              trans: Optional[fm.Term] = None) -> fm.Term:
    """``assume`` on s0..s_{k-1} with k transitions implies ``prop`` at s_k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    trans = ts.transition() if trans is None else trans
    hyp = []
    for j in range(k):
        hyp.append(fm.shift(assume, j))
        hyp.append(fm.shift(trans, j))
    return fm.implies(fm.and_(*hyp), fm.shift(prop, k))


def full_query(ts: TransitionSystem, prop: fm.Term, k: int,
               trans: Optional[fm.Term] = None) -> fm.Term:
    return fm.and_(base_query(ts, prop, k, trans), ind_query(ts, prop, prop, k, trans))


def is_valid(config: smt.SolverConfig, query: fm.Term) -> Optional[bool]:
    """Validity of ``query`` in a fresh session; None when the solver gives up."""
    with smt.Session(config) as s:
        res = s.check_sat((), fm.not_(query), model=False)
    if isinstance(res, smt.Unknown):
        return None
    return isinstance(res, smt.Unsat)


# -- helpers ------------------------------------------------------------------

def _trace(ts: TransitionSystem, model: dict, k: int) -> tuple:
    out = []
    for j in range(k + 1):
        out.append({n: model.get(fm.Var(n, s, j)) for n, s in ts.state_vars})
    return tuple(out)


class _Clock:
    def __init__(self, deadline: Optional[float]):
        self.deadline = deadline

    def left(self) -> Optional[float]:
        if self.deadline is None:
            return None
        return self.deadline - time.monotonic()

    def expired(self) -> bool:
        left = self.left()
        return left is not None and left <= 0


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


# -- BMC ------------------------------------------------------------------------

def bmc(ts: TransitionSystem, prop: Optional[str], max_k: int,
        config: smt.SolverConfig, deadline: Optional[float] = None):
    """Shortest counterexample of length <= ``max_k``; None if there is none.

    Returns an :class:`Unknown` when the solver gives up at some depth.
    """
    if max_k < 1:
        raise ValueError("max_k must be at least 1")
    name = prop or ts.properties[0][0]
    p = ts.property(prop)
    trans = ts.transition()
    clock = _Clock(deadline)
    start = time.perf_counter()
    with smt.Session(config) as s:
        s.assert_(ts.init_pred)
        for j in range(max_k + 1):
            res = s.check_sat((), fm.not_(fm.shift(p, j)), timeout=clock.left())
            if isinstance(res, smt.Sat):
                return Counterexample(name, j, _trace(ts, res.model, j), _ms(start))
            if isinstance(res, smt.Unknown):
                return Unknown(name, res.reason, j, _ms(start))
            s.assert_(fm.shift(trans, j))
    return None


# -- invariant generation --------------------------------------------------------

def _single_step(t: fm.Term) -> Optional[fm.Term]:
    steps = fm.steps_of(t)
    if len(steps) != 1:
        return None
    (step,) = steps
    if step is None or step not in (0, 1):
        return None
    return fm.shift(t, -step)


def _mentions_init(t: fm.Term) -> bool:
    return any(v.name == INIT for v in fm.free_vars(t))


def invariant_candidates(ts: TransitionSystem, prop: Optional[fm.Term] = None,
                         seeds: Sequence[fm.Term] = ()) -> list[fm.Term]:
    """Template candidates, each already wrapped as ``~init or q``."""
    raw: list[fm.Term] = []
    zero = {fm.INT: fm.const(0, fm.INT), fm.REAL: fm.const(0, fm.REAL)}
    numeric = [(n, s) for n, s in ts.state_vars if s in zero]
    booleans = [n for n, s in ts.state_vars if s == fm.BOOL and n != INIT]
    for n, s in numeric:
        v = fm.Var(n, s, 0)
        raw.append(fm.app(">=", v, zero[s]))
        raw.append(fm.app("<=", v, zero[s]))
    sources = [f for _, f in ts.conjuncts] + [f for _, f in ts.properties]
    if prop is not None:
        sources.append(prop)
    for f in sources:
        for t in fm.subterms(f):
            if t.sort != fm.BOOL or isinstance(t, fm.Const) or _mentions_init(t):
                continue
            q = _single_step(t)
            if q is not None:
                raw.append(q)
                raw.append(fm.not_(q))
    for n in booleans:
        v = fm.Var(n, fm.BOOL, 0)
        raw.append(v)
        raw.append(fm.not_(v))
    bvars = [fm.Var(n, fm.BOOL, 0) for n in booleans[:MAX_IMPLICATION_VARS]]
    for a, b in itertools.permutations(bvars, 2):
        raw.append(fm.implies(a, b))
    raw.extend(seeds)
    init = ts.init_pred
    out, seen = [], set()
    for q in raw:
        c = q if _mentions_init(q) else fm.or_(init, q)
        if c == fm.TRUE or c in seen:
            continue
        seen.add(c)
        out.append(c)
    return out


def _unwrap(c: fm.Term) -> fm.Term:
    if isinstance(c, fm.App) and c.op == "or" and c.args[0] == fm.Var(INIT, fm.BOOL, 0):
        return fm.or_(*c.args[1:])
    return c


def invariant_name(c: fm.Term) -> str:
    return fm.pretty(_unwrap(c))


def houdini(session: smt.Session, ts: TransitionSystem, candidates: list[fm.Term],
            clock: _Clock) -> Optional[list[fm.Term]]:
    """Largest subset of ``candidates`` that is 1-inductive; None on Unknown.

    Every candidate holds in the pre-initial state by construction, so only
    the consecution check is needed.
    """
    alive = list(candidates)
    session.push()
    try:
        session.assert_(ts.transition())
        while alive:
            now = fm.and_(*alive)
            nxt = fm.or_(*(fm.not_(fm.shift(c, 1)) for c in alive))
            res = session.check_sat((), fm.and_(now, nxt), timeout=clock.left())
            if isinstance(res, smt.Unsat):
                break
            if isinstance(res, smt.Unknown):
                return None
            env = dict(res.model)
            for n, s in ts.state_vars:
                for j in (0, 1):
                    env.setdefault(fm.Var(n, s, j), False if s == fm.BOOL else 0)
            keep = [c for c in alive if fm.evaluate(fm.shift(c, 1), env)]
            if len(keep) == len(alive):
                raise smt.SolverError("model does not falsify any invariant candidate")
            alive = keep
    finally:
        if session.depth:
            session.pop()
    return alive


def generate_invariants(ts: TransitionSystem, prop: Optional[str],
                        config: smt.SolverConfig, seeds: Sequence[fm.Term] = (),
                        deadline: Optional[float] = None) -> list[tuple[str, fm.Term]]:
    """Houdini over syntactic templates; returns ``(name, formula)`` pairs."""
    p = ts.property(prop)
    with smt.Session(config) as s:
        found = houdini(s, ts, invariant_candidates(ts, p, seeds), _Clock(deadline))
    return [(invariant_name(c), c) for c in found or []]


# -- prove ---------------------------------------------------------------------

def prove(ts: TransitionSystem, prop: Optional[str] = None, max_k: int = DEFAULT_MAX_K,
          config: Optional[smt.SolverConfig] = None, seeds: Sequence[fm.Term] = (),
          deadline: Optional[float] = None, invariants: bool = True,
          validate: bool = True) -> ProofResult:
    """Interleave BMC and k-induction (k = 1..max_k) strengthened by Houdini.

    ``seeds`` are extra invariant candidates (previously discovered lemmas);
    they are re-validated, never trusted.
    """
    if max_k < 1:
        raise ValueError("max_k must be at least 1")
    config = config or smt.SolverConfig.resolve()
    name = prop or ts.properties[0][0]
    p = ts.property(prop)
    clock = _Clock(deadline)
    start = time.perf_counter()
    trans = ts.transition()
    with smt.Session(config) as s:
        q: list[fm.Term] = []
        if invariants:
            found = houdini(s, ts, invariant_candidates(ts, p, seeds), clock)
            q = [c for c in (found or []) if c != p]
        pq = fm.and_(p, *q)
        a_init = s.activation(ts.init_pred, "init")
        a_ind = s.activation(fm.TRUE, "induction")
        for k in range(1, max_k + 1):
            if clock.expired():
                return Unknown(name, "deadline", k, _ms(start))
            # base case at depth k-1
            res = s.check_sat([a_init], fm.not_(fm.shift(p, k - 1)), timeout=clock.left())
            if isinstance(res, smt.Sat):
                return Counterexample(name, k - 1, _trace(ts, res.model, k - 1), _ms(start))
            if isinstance(res, smt.Unknown):
                return Unknown(name, res.reason, k, _ms(start))
            s.assert_(fm.shift(trans, k - 1))
            s.assert_(fm.implies(a_ind.var, fm.shift(pq, k - 1)))
            res = s.check_sat([a_ind], fm.not_(fm.shift(p, k)), model=False,
                              timeout=clock.left())
            if isinstance(res, smt.Unknown):
                return Unknown(name, res.reason, k, _ms(start))
            if isinstance(res, smt.Unsat):
                proof = InductiveProof(name, k, tuple((invariant_name(c), c) for c in q),
                                       time_ms=_ms(start))
                break
        else:
            return Unknown(name, f"not proved within k={max_k}", max_k, _ms(start))
    if validate:
        ok = check_proof(ts, proof, config)
        if ok is None:
            return Unknown(name, "proof re-validation timed out", proof.k, _ms(start))
        if not ok:
            raise smt.SolverError(f"k-induction proof of {name} failed re-validation")
    return InductiveProof(proof.property, proof.k, proof.invariants, proof.engine, _ms(start))


def check_proof(ts: TransitionSystem, proof: InductiveProof,
                config: smt.SolverConfig) -> Optional[bool]:
    """Replay FullQuery_k for P ∧ Q in a fresh session."""
    pq = fm.and_(ts.property(proof.property), *(f for _, f in proof.invariants))
    return is_valid(config, full_query(ts, pq, proof.k))
