from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivckind import formula as fm
from ivckind import smt
from ivckind.engine import bmc
from ivckind.lustre import NotNormalizedError, parse
from ivckind.transition import INIT, dump, from_source, lower, restrict, slice_names

from conftest import corpus_names, load, requires_z3

I0 = fm.Var(INIT, fm.BOOL, 0)


def v(name, sort=fm.INT, step=0):
    return fm.Var(name, sort, step)


# -- formula -----------------------------------------------------------------

def test_builders_simplify():
    x = v("x", fm.BOOL)
    assert fm.and_() == fm.TRUE
    assert fm.and_(x, fm.TRUE) == x
    assert fm.or_(x, fm.TRUE) == fm.TRUE
    assert fm.implies(fm.FALSE, x) == fm.TRUE
    assert fm.not_(fm.not_(x)) == x
    assert fm.ite(fm.TRUE, v("a"), v("b")) == v("a")


def test_shift_and_steps():
    t = fm.app("+", v("x"), v("y", step=1))
    s = fm.shift(t, 2)
    assert fm.steps_of(s) == {2, 3}
    assert fm.free_vars(s) == {v("x", step=2), v("y", step=3)}


def test_to_smt_symbols():
    t = fm.app(">=", v("f~0.x", fm.REAL, 1), fm.const(Fraction(-1, 2), fm.REAL))
    assert fm.to_smt(t) == "(>= |f~0.x@1| (- (/ 1.0 2.0)))"
    assert fm.to_smt(fm.const(-3, fm.INT)) == "(- 3)"


@pytest.mark.parametrize("a, b", [(7, 2), (-7, 2), (7, -2), (-7, -2), (0, 3)])
def test_euclidean_div_mod(a, b):
    env = {}
    q = fm.evaluate(fm.app("div", fm.const(a, fm.INT), fm.const(b, fm.INT)), env)
    r = fm.evaluate(fm.app("mod", fm.const(a, fm.INT), fm.const(b, fm.INT)), env)
    assert a == q * b + r
    assert 0 <= r < abs(b)


# -- lowering ----------------------------------------------------------------

def test_filter_lowering_matches_hand_encoding():
    _, ts = load("filter")
    assert ts.init_pred == I0
    names = ts.names
    assert names[-1] == INIT and names.count(INIT) == 1
    assert {"a", "b", "y"} <= set(ts.candidates)
    assert "ok" not in ts.candidates and INIT not in ts.candidates
    a1, y0, y1, b1 = v("a", fm.REAL, 1), v("y", fm.REAL, 0), v("y", fm.REAL, 1), v("b", fm.REAL, 1)
    zero = fm.const(0, fm.REAL)
    assert ts.conjunct("b") == fm.eq(b1, fm.ite(fm.app(">=", a1, zero), a1, fm.app("neg", a1)))
    assert ts.conjunct("y") == fm.eq(y1, fm.app("+", b1, fm.ite(I0, zero, y0)))
    assert ts.conjunct(INIT) == fm.not_(fm.Var(INIT, fm.BOOL, 1))
    assert ts.property("ok") == fm.or_(I0, v("ok", fm.BOOL))


def test_counter_lowering():
    _, ts = load("counter_falsified")
    c0, c1 = v("c"), v("c", step=1)
    assert ts.conjunct("c") == fm.eq(c1, fm.ite(I0, fm.const(0, fm.INT),
                                               fm.app("+", c0, fm.const(1, fm.INT))))


def test_constant_equation():
    _, ts = from_source("node m(x: bool) returns (c: bool); let c = true; tel")
    assert ts.conjunct("c") == fm.eq(v("c", fm.BOOL, 1), fm.TRUE)


def test_lower_rejects_unnormalized():
    with pytest.raises(NotNormalizedError):
        lower(parse("node m(x: int) returns (y: int); let y = 0 -> pre (x + 1); tel"))


@pytest.mark.parametrize("name", corpus_names())
def test_lower_deterministic_and_well_scoped(name):
    prog, ts = load(name)
    assert lower(prog) == ts
    assert dump(lower(prog)) == dump(ts)
    declared = {n for n, _ in ts.state_vars}
    for _, f in ts.conjuncts:
        assert {x.name for x in fm.free_vars(f)} <= declared
        assert fm.steps_of(f) <= {0, 1}
    for _, f in ts.properties:
        assert fm.steps_of(f) == {0}
    assert len(set(ts.names)) == len(ts.names)
    assert ts.candidates <= set(ts.names) - {INIT} - {p for p, _ in ts.properties}


def test_dump_format():
    _, ts = load("counter_falsified")
    text = dump(ts)
    assert "(conjunct |c| (= |c'| (ite |~init| 0 (+ |c| 1))))" in text
    assert "(fixed-conjunct |~init| (not |~init'|))" in text
    assert "(property |ok| (or |~init| |ok|))" in text


def test_restrict_basic():
    _, ts = load("filter")
    assert restrict(ts, ts.names) == ts
    sub = restrict(ts, {"b", "y", "ok"})
    assert sub.names == ["b", "y", "ok", INIT]
    assert sub.state_vars == ts.state_vars
    assert sub.properties == ts.properties
    with pytest.raises(KeyError):
        restrict(ts, {"nope"})


@requires_z3
def test_restrict_empty_fails_at_depth_one(z3cfg):
    _, ts = load("filter")
    res = bmc(restrict(ts, set()), "ok", 5, z3cfg)
    assert res is not None and res.length == 1


def test_slice_names_matches_source_slicer():
    _, ts = load("filter")
    assert slice_names(ts, ["ok"]) == {"ok", "a", "b", "y", "f~0.x", "f~0.p", "f~0.r"}


@requires_z3
@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["filter", "bounded_queue", "voter", "sensor_fusion", "tank"]),
       st.data())
def test_restrict_monotone(name, data):
    """A model of restrict(ts, B) satisfies restrict(ts, A) for A <= B."""
    _, ts = load(name)
    names = ts.candidate_names
    b = data.draw(st.sets(st.sampled_from(names)))
    a = data.draw(st.sets(st.sampled_from(sorted(b)))) if b else set()
    tb, ta = restrict(ts, b), restrict(ts, a)
    cfg = smt.SolverConfig.resolve("z3", timeout=30)
    with smt.Session(cfg) as s:
        s.declare_all(fm.and_(*(fm.Var(n, srt, st_) for n, srt in ts.state_vars for st_ in (0, 1))))
        res = s.check_sat((), tb.transition())
    assert isinstance(res, smt.Sat)
    assert fm.evaluate(ta.transition(), res.model) is True
