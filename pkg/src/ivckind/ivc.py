"""Inductive validity cores.

``ivc_bf`` is the brute-force deletion loop over whole re-proofs.
``ivc_uc`` works from one k-inductive proof: shrink k, shrink the invariant
set, then read the needed conjuncts off an unsat core.  ``ivc_ucbf`` runs
the deletion loop on the UC result to certify minimality.

Cores are tuples of conjunct names in source order.  Conjuncts that are not
candidates (the property's own equation, ``~init`` and anything left out of
an ``--%IVC`` annotation) are never dropped; the annotation-excluded ones are
reported as part of the core when the property slice reaches them.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import formula as fm
from . import smt
from .engine import (
    DEFAULT_MAX_K,
    Counterexample,
    InductiveProof,
    Unknown,
    check_proof,
    full_query,
    is_valid,
    prove,
)
from .transition import TransitionSystem, restrict, slice_names

log = logging.getLogger(__name__)

ALGORITHMS = ("uc", "bf", "ucbf")


class IvcError(Exception):
    """An IVC stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class Indeterminate(Exception):
    """The prover gave up, so validity of a candidate core is unknown."""


@dataclass(frozen=True)
class IvcResult:
    property: str
    core: tuple
    algorithm: str
    minimal: bool
    k: int
    invariants: tuple = ()
    proof_ms: float = field(default=0.0, compare=False)
    ivc_ms: float = field(default=0.0, compare=False)
    non_candidates: tuple = ()
    # Elements kept only because their re-proof was inconclusive.
    indeterminate: tuple = ()

    @property
    def timings(self) -> dict:
        return {"proof_ms": self.proof_ms, "ivc_ms": self.ivc_ms}


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def _ordered(ts: TransitionSystem, names: Iterable[str]) -> tuple:
    names = set(names)
    return tuple(n for n in ts.names if n in names)


def _report_core(ts: TransitionSystem, prop: str, chosen: Iterable[str]) -> tuple:
    """Chosen candidates plus reachable annotation-excluded conjuncts."""
    reach = slice_names(ts, [prop])
    return _ordered(ts, set(chosen) | (ts.excluded & reach))


def _non_candidates(ts: TransitionSystem) -> tuple:
    return tuple(n for n in ts.fixed_names if n not in ts.excluded)


def _prop_name(ts: TransitionSystem, prop: Optional[str]) -> str:
    return prop or ts.properties[0][0]


def _with_fixed(ts: TransitionSystem, names: Iterable[str]) -> set:
    return set(names) | set(ts.fixed_names)


# -- checkers -----------------------------------------------------------------

def check_ivc(ts: TransitionSystem, prop: Optional[str], core: Iterable[str],
              config: smt.SolverConfig, max_k: int = DEFAULT_MAX_K,
              deadline: Optional[float] = None) -> bool:
    """True iff the property is proved using only ``core`` and the fixed conjuncts.

    Raises :class:`Indeterminate` when the prover answers unknown.
    """
    sub = restrict(ts, _with_fixed(ts, core))
    res = prove(sub, prop, max_k, config, deadline=deadline)
    if isinstance(res, Unknown):
        raise Indeterminate(res.reason)
    return isinstance(res, InductiveProof)


def is_minimal(ts: TransitionSystem, prop: Optional[str], core: Iterable[str],
               config: smt.SolverConfig, max_k: int = DEFAULT_MAX_K) -> bool:
    """Valid, and no single candidate can be dropped (relative to the prover)."""
    core = list(core)
    if not check_ivc(ts, prop, core, config, max_k):
        return False
    for x in core:
        if x not in ts.candidates:
            continue
        if check_ivc(ts, prop, [y for y in core if y != x], config, max_k):
            return False
    return True


# -- brute force ---------------------------------------------------------------

def _drop_loop(ts: TransitionSystem, prop: str, start: Sequence[str],
               config: smt.SolverConfig, max_k: int, seeds: list,
               jobs: int = 1, deadline: Optional[float] = None):
    """Deletion loop: returns (kept candidates, indeterminate elements, seeds)."""
    current = list(start)
    unknown: list[str] = []

    def attempt(x):
        sub = restrict(ts, _with_fixed(ts, [y for y in current if y != x]))
        return prove(sub, prop, max_k, config, seeds=tuple(seeds), deadline=deadline)

    order = [x for x in start if x in ts.candidates]
    i = 0
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while i < len(order):
            batch = order[i:i + max(jobs, 1)]
            if pool is None:
                results = [attempt(batch[0])]
            else:
                results = list(pool.map(attempt, batch))
            consumed = len(batch)
            for j, (x, res) in enumerate(zip(batch, results)):
                if isinstance(res, InductiveProof):
                    log.debug("dropped %s", x)
                    current.remove(x)
                    seeds.extend(f for _, f in res.invariants if f not in seeds)
                    # Later results in the batch were computed against the
                    # old set and must be redone.
                    consumed = j + 1
                    break
                if isinstance(res, Unknown):
                    unknown.append(x)
            i += consumed
    finally:
        if pool is not None:
            pool.shutdown()
    return current, unknown, seeds


def ivc_bf(ts: TransitionSystem, prop: Optional[str] = None,
           config: Optional[smt.SolverConfig] = None, max_k: int = DEFAULT_MAX_K,
           jobs: int = 1, proof: Optional[InductiveProof] = None,
           deadline: Optional[float] = None) -> IvcResult:
    config = config or smt.SolverConfig.resolve()
    name = _prop_name(ts, prop)
    if proof is None:
        proof = _establish(ts, name, config, max_k, deadline)
    start = time.perf_counter()
    seeds = [f for _, f in proof.invariants]
    kept, unknown, seeds = _drop_loop(ts, name, ts.candidate_names, config, max_k,
                                      seeds, jobs, deadline)
    return IvcResult(name, _report_core(ts, name, kept), "BF", not unknown, proof.k,
                     tuple(proof.invariant_names), proof.time_ms, _ms(start),
                     _non_candidates(ts), tuple(unknown))


def _establish(ts, name, config, max_k, deadline) -> InductiveProof:
    res = prove(ts, name, max_k, config, deadline=deadline)
    if isinstance(res, Counterexample):
        raise IvcError("prove", f"property {name} is falsified (length {res.length})")
    if isinstance(res, Unknown):
        raise IvcError("prove", f"property {name} not proved: {res.reason}")
    return res


# -- UC pipeline ------------------------------------------------------------------

def minimize_k(ts: TransitionSystem, pq: fm.Term, k: int,
               config: smt.SolverConfig) -> int:
    """Least k' <= k for which the inductive step of ``pq`` holds."""
    trans = ts.transition()
    with smt.Session(config) as s:
        for kk in range(1, k + 1):
            s.assert_(fm.shift(pq, kk - 1))
            s.assert_(fm.shift(trans, kk - 1))
            res = s.check_sat((), fm.not_(fm.shift(pq, kk)), model=False)
            if isinstance(res, smt.Unsat):
                return kk
            if isinstance(res, smt.Unknown):
                raise IvcError("minimize_k", res.reason)
    return k


def _ind_negation(rs: Sequence[fm.Term], k: int) -> fm.Term:
    """R on s0..s_{k-1} and not R at s_k (T is asserted separately)."""
    r = fm.and_(*rs)
    return fm.and_(*(fm.shift(r, j) for j in range(k)), fm.not_(fm.shift(r, k)))


def reduce_invariants(ts: TransitionSystem, invariants: Sequence, prop: fm.Term, k: int,
                      config: smt.SolverConfig) -> list:
    """Grow R from {P} with the invariants its inductive step needs.

    ``invariants`` are ``(name, formula)`` pairs; the result keeps that shape
    and starts with ``("P", prop)``.  Each round assumes the remaining
    guarded invariants plus R on steps 0..k-1, and moves a minimal set of the
    guarded ones into R, until R needs nothing more.  The minimal set is
    found by deletion over all remaining literals in the given order.
    """
    trans = ts.transition()
    result = [("P", prop)]
    with smt.Session(config) as s:
        for j in range(k):
            s.assert_(fm.shift(trans, j))
        remaining = []
        for name, q in invariants:
            guarded = fm.and_(*(fm.shift(q, j) for j in range(k)))
            remaining.append(s.activation(guarded, (name, q)))
        while True:
            query = _ind_negation([f for _, f in result], k)
            res = s.check_sat(remaining, query, model=False)
            if isinstance(res, smt.Unknown):
                raise IvcError("reduce_invariants", res.reason)
            if isinstance(res, smt.Sat):
                raise IvcError("reduce_invariants", "P and Q are not k-inductive")
            try:
                core = s.minimize_core(remaining, query)
            except smt.SolverTimeout as exc:
                raise IvcError("reduce_invariants", str(exc)) from exc
            if not core:
                return result
            used = {a.name for a in core}
            result.extend(a.payload for a in remaining if a.name in used)
            remaining = [a for a in remaining if a.name not in used]


def minimize_ivc(ts: TransitionSystem, invariants: Sequence[fm.Term], k: int,
                 config: smt.SolverConfig) -> list[str]:
    """Candidate conjuncts used by a minimized core of the full k-query for R."""
    lits = {}
    with smt.Session(config) as s:
        parts = []
        for name, f in ts.conjuncts:
            if name in ts.candidates:
                lit = s.activation(fm.TRUE, name)
                lits[name] = lit
                parts.append(fm.implies(lit.var, f))
            else:
                parts.append(f)
        guarded = fm.and_(*parts)
        r = fm.and_(*invariants)
        query = fm.not_(full_query(ts, r, k, trans=guarded))
        s.assert_(query)
        res = s.check_sat(list(lits.values()), model=False)
        if isinstance(res, smt.Unknown):
            raise IvcError("minimize_ivc", res.reason)
        if isinstance(res, smt.Sat):
            raise IvcError("minimize_ivc", "R is not k-inductive for the full system")
        try:
            core = s.minimize_core(s.unsat_core())
        except smt.SolverTimeout as exc:
            raise IvcError("minimize_ivc", str(exc)) from exc
    return [a.payload for a in core]


def ivc_uc(ts: TransitionSystem, proof: InductiveProof,
           config: Optional[smt.SolverConfig] = None) -> IvcResult:
    config = config or smt.SolverConfig.resolve()
    start = time.perf_counter()
    name = proof.property
    p = ts.property(name)
    q = list(proof.invariants)
    pq = fm.and_(p, *(f for _, f in q))
    k = minimize_k(ts, pq, proof.k, config)
    reduced = reduce_invariants(ts, q, p, k, config)
    rs = [f for _, f in reduced]
    chosen = minimize_ivc(ts, rs, k, config)
    # Re-check: the restricted system must still make R k-inductive.
    sub = restrict(ts, _with_fixed(ts, chosen))
    ok = is_valid(config, full_query(sub, fm.and_(*rs), k))
    if ok is None:
        raise IvcError("validate", "solver gave up re-checking the core")
    if not ok:
        raise IvcError("validate", "core does not preserve the proof")
    used = tuple(n for n, _ in reduced[1:])
    return IvcResult(name, _report_core(ts, name, chosen), "UC", False, k, used,
                     proof.time_ms, _ms(start), _non_candidates(ts))


def ivc_ucbf(ts: TransitionSystem, proof: InductiveProof,
             config: Optional[smt.SolverConfig] = None, max_k: int = DEFAULT_MAX_K,
             jobs: int = 1, deadline: Optional[float] = None) -> IvcResult:
    config = config or smt.SolverConfig.resolve()
    start = time.perf_counter()
    uc = ivc_uc(ts, proof, config)
    seeds = [f for _, f in proof.invariants]
    kept, unknown, _ = _drop_loop(ts, proof.property, list(uc.core), config, max_k,
                                  seeds, jobs, deadline)
    return IvcResult(proof.property, _report_core(ts, proof.property, kept), "UCBF",
                     not unknown, uc.k, uc.invariants, proof.time_ms, _ms(start),
                     _non_candidates(ts), tuple(unknown))


def compute_ivc(ts: TransitionSystem, prop: Optional[str], algorithm: str,
                config: Optional[smt.SolverConfig] = None, max_k: int = DEFAULT_MAX_K,
                jobs: int = 1, proof: Optional[InductiveProof] = None,
                deadline: Optional[float] = None) -> IvcResult:
    """Prove (unless ``proof`` is given) and run one IVC algorithm."""
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    config = config or smt.SolverConfig.resolve()
    name = _prop_name(ts, prop)
    if proof is None:
        proof = _establish(ts, name, config, max_k, deadline)
    if algorithm == "bf":
        return ivc_bf(ts, name, config, max_k, jobs, proof, deadline)
    if algorithm == "uc":
        return ivc_uc(ts, proof, config)
    return ivc_ucbf(ts, proof, config, max_k, jobs, deadline)


def verify_proof(ts: TransitionSystem, proof: InductiveProof,
                 config: smt.SolverConfig) -> bool:
    ok = check_proof(ts, proof, config)
    if ok is None:
        raise Indeterminate("proof replay timed out")
    return ok

