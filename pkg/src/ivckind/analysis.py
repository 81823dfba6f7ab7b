"""Core diversity, overhead and the minimality-hardness gadget.

Distances are exact ``Fraction`` values.  Standard deviations are population
deviations computed from the exact variance and returned as floats.
"""

from __future__ import annotations

import builtins
import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import formula as fm
from .transition import INIT, TransitionSystem

STATUSES = ("proved", "cex", "unknown", "error")


def jaccard(a: Iterable, b: Iterable) -> Fraction:
    """Jaccard distance; two empty sets are at distance 0."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return Fraction(0)
    return 1 - Fraction(len(a & b), len(union))


@dataclass(frozen=True)
class Stats:
    count: int = 0
    min: Optional[Fraction] = None
    max: Optional[Fraction] = None
    mean: Optional[Fraction] = None
    stdev: Optional[float] = None

    def as_dict(self) -> dict:
        conv = (lambda v: None if v is None else float(v))
        return {"count": self.count, "min": conv(self.min), "max": conv(self.max),
                "mean": conv(self.mean), "stdev": self.stdev}


def describe(values: Sequence) -> Stats:
    """min/max/mean/population stdev of exact values."""
    values = [Fraction(v) for v in values]
    if not values:
        return Stats()
    n = len(values)
    mean = sum(values, Fraction(0)) / n
    var = sum(((v - mean) ** 2 for v in values), Fraction(0)) / n
    return Stats(n, min(values), max(values), mean, math.sqrt(var))


def pairwise_distances(cores: Sequence[Iterable]) -> list[Fraction]:
    sets = [set(c) for c in cores]
    return [jaccard(a, b) for a, b in itertools.combinations(sets, 2)]


def pairwise_stats(cores: Sequence[Iterable]) -> Stats:
    if len(cores) < 2:
        return Stats()
    return describe(pairwise_distances(cores))


def core_set(cores: Sequence[Iterable]) -> set:
    sets = [set(c) for c in cores]
    if not sets:
        raise ValueError("core_set needs at least one core")
    return set.intersection(*sets)


def overall_dissimilarity(cores: Sequence[Iterable]) -> Fraction:
    """Mean Jaccard distance of each core to the intersection of all cores."""
    sets = [set(c) for c in cores]
    if not sets:
        raise ValueError("overall_dissimilarity needs at least one core")
    common = set.intersection(*sets)
    return sum((jaccard(s, common) for s in sets), Fraction(0)) / len(sets)


def overhead(ivc_ms: float, baseline_ms: float) -> Optional[float]:
    """Percent of IVC time over the plain proof time; None for a zero baseline."""
    if baseline_ms is None or baseline_ms <= 0:
        return None
    return 100.0 * ivc_ms / baseline_ms


# -- records and reports -----------------------------------------------------

@dataclass
class RunRecord:
    model: str
    solver: str
    algorithm: str
    status: str
    property: Optional[str] = None
    core: Optional[list] = None
    minimal: Optional[bool] = None
    k: Optional[int] = None
    invariants: list = field(default_factory=list)
    proof_ms: float = 0.0
    ivc_ms: float = 0.0
    overhead_pct: Optional[float] = None
    candidates: int = 0
    slice: Optional[list] = None
    cex_length: Optional[int] = None
    message: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    @builtins.property  # the ``property`` field shadows the builtin here
    def config(self) -> str:
        return f"{self.solver}/{self.algorithm}"

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: Mapping) -> "RunRecord":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True)
class DiversityReport:
    model: str
    cores: dict                 # configuration -> sorted core list
    distances: list             # (config_a, config_b, Fraction) sorted by distance
    stats: Stats
    core_set: list
    dissimilarity: Fraction
    dissimilarity_no_bf: Optional[Fraction]

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "cores": self.cores,
            "pairs": [{"a": a, "b": b, "distance": str(d), "value": float(d)}
                      for a, b, d in self.distances],
            "stats": self.stats.as_dict(),
            "core_set": self.core_set,
            "dissimilarity": float(self.dissimilarity),
            "dissimilarity_exact": str(self.dissimilarity),
            "dissimilarity_no_bf": None if self.dissimilarity_no_bf is None
            else float(self.dissimilarity_no_bf),
        }


def diversity(model: str, cores: Mapping[str, Iterable]) -> DiversityReport:
    """Report over ``{configuration: core}`` for one model."""
    keys = sorted(cores)
    sets = {k: sorted(set(cores[k])) for k in keys}
    pairs = [(a, b, jaccard(sets[a], sets[b])) for a, b in itertools.combinations(keys, 2)]
    pairs.sort(key=lambda t: (t[2], t[0], t[1]))
    stats = pairwise_stats([sets[k] for k in keys])
    common = sorted(core_set([sets[k] for k in keys])) if keys else []
    dis = overall_dissimilarity([sets[k] for k in keys]) if keys else Fraction(0)
    no_bf = [sets[k] for k in keys if not k.lower().endswith("/bf")]
    dis_no_bf = overall_dissimilarity(no_bf) if no_bf and len(no_bf) < len(keys) else None
    return DiversityReport(model, sets, pairs, stats, common, dis, dis_no_bf)


def diversity_reports(records: Iterable[RunRecord]) -> list[DiversityReport]:
    by_model: dict[str, dict[str, list]] = {}
    for r in records:
        if r.status == "proved" and r.core is not None:
            by_model.setdefault(r.model, {})[r.config] = r.core
    return [diversity(m, by_model[m]) for m in sorted(by_model)]


# -- gadget ----------------------------------------------------------------------

G1, G2 = "~g1", "~g2"
GADGET_PROPERTY = "~gadget"


def gadget(base: TransitionSystem, prop: Optional[str] = None,
           x: str = "~gx", y: str = "~gy") -> TransitionSystem:
    """Wrap ``base`` so that {G1, G2} is a minimal IVC iff the base property fails.

    G1 is ``x' => y'``; G2 is ``(y' => P') and T`` with T the base transition
    relation (minus the init conjunct, kept separately).  The property is
    ``x => P``.  The pre-initial state satisfies it through ``~init``, which
    plays the role of starting with x false.
    """
    vocab = {n for n, _ in base.state_vars} | set(base.names)
    for fresh in (x, y, G1, G2, GADGET_PROPERTY):
        if fresh in vocab:
            raise ValueError(f"gadget name {fresh!r} clashes with the base system")
    p = base.property(prop)
    xv, yv = fm.Var(x, fm.BOOL, 0), fm.Var(y, fm.BOOL, 0)
    body = fm.and_(*(f for n, f in base.conjuncts if n != INIT))
    g1 = fm.implies(fm.shift(xv, 1), fm.shift(yv, 1))
    g2 = fm.and_(fm.implies(fm.shift(yv, 1), fm.shift(p, 1)), body)
    init_step = base.conjunct(INIT)
    state = tuple(v for v in base.state_vars if v[0] != INIT)
    return TransitionSystem(
        name=f"gadget({base.name})",
        state_vars=state + ((x, fm.BOOL), (y, fm.BOOL), (INIT, fm.BOOL)),
        conjuncts=((G1, g1), (G2, g2), (INIT, init_step)),
        properties=((GADGET_PROPERTY, fm.or_(base.init_pred, fm.implies(xv, p))),),
        candidates=frozenset({G1, G2}),
        inputs=base.inputs + (x, y),
    )
