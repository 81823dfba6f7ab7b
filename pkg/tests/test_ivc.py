import itertools
import time

import pytest

from ivckind import formula as fm
from ivckind.engine import InductiveProof, full_query, ind_query, is_valid, prove
from ivckind.ivc import (
    Indeterminate,
    IvcError,
    check_ivc,
    compute_ivc,
    is_minimal,
    ivc_bf,
    ivc_uc,
    ivc_ucbf,
    minimize_ivc,
    minimize_k,
    reduce_invariants,
)
from ivckind.transition import INIT, restrict

from conftest import load, requires_z3

pytestmark = requires_z3

I0 = fm.Var(INIT, fm.BOOL, 0)


def w(q):
    return fm.or_(I0, q)


def ge0(name, sort=fm.INT):
    return w(fm.app(">=", fm.Var(name, sort, 0), fm.const(0, sort)))


def proof_for(ts, cfg):
    res = prove(ts, None, 20, cfg)
    assert isinstance(res, InductiveProof)
    return res


@pytest.mark.parametrize("algo", ["uc", "bf", "ucbf"])
def test_filter_core(algo, anycfg):
    _, ts = load("filter")
    res = compute_ivc(ts, "ok", algo, anycfg)
    assert res.core == ("b", "y")
    assert res.minimal is (algo != "uc")
    assert res.algorithm == algo.upper()
    assert res.non_candidates == ("ok", INIT)


def test_toy_singletons(anycfg):
    _, ts = load("toy_ab")
    cores = {a: compute_ivc(ts, "ok", a, anycfg).core for a in ("uc", "bf", "ucbf")}
    assert all(len(c) == 1 for c in cores.values())
    # BF drops a first (source order), so b survives.
    assert cores["bf"] == ("b",)
    assert check_ivc(ts, "ok", ["a"], anycfg) and check_ivc(ts, "ok", ["b"], anycfg)
    assert not check_ivc(ts, "ok", [], anycfg)


def test_fully_needed_chain(z3cfg):
    _, ts = load("pipeline")
    full = tuple(ts.candidate_names)
    for algo in ("uc", "bf", "ucbf"):
        assert compute_ivc(ts, None, algo, z3cfg).core == full


def test_uc_chain_redundancy(z3cfg):
    _, ts = load("uc_chain")
    pf = proof_for(ts, z3cfg)
    uc = ivc_uc(ts, pf, z3cfg)
    ucbf = ivc_ucbf(ts, pf, z3cfg)
    assert uc.core == ("d", "e", "x") and uc.minimal is False
    assert ucbf.core == ("d", "x") and ucbf.minimal is True


def test_minimize_k(z3cfg):
    _, ts = load("counter_nonneg")
    assert minimize_k(ts, ge0("c"), 1, z3cfg) == 1
    assert minimize_k(ts, ge0("c"), 5, z3cfg) == 1
    _, ts = load("two_phase")
    assert minimize_k(ts, ts.property(), 5, z3cfg) == 2


def test_reduce_invariants_empty_q(z3cfg):
    _, ts = load("uc_chain")
    p = ge0("d")
    assert reduce_invariants(ts, [], p, 1, z3cfg) == [("P", p)]


def test_reduce_invariants_drops_junk(z3cfg):
    _, ts = load("uc_chain")
    p = ge0("x")
    junk = ("d=e", w(fm.eq(fm.Var("d", fm.INT, 0), fm.Var("e", fm.INT, 0))))
    useful = ("d>=0", ge0("d"))
    got = reduce_invariants(ts, [junk, useful], p, 1, z3cfg)
    assert [n for n, _ in got] == ["P", "d>=0"]
    # brute force over the four subsets of Q
    ok = {}
    for r in range(3):
        for sub in itertools.combinations([junk, useful], r):
            rs = fm.and_(p, *(f for _, f in sub))
            ok[tuple(n for n, _ in sub)] = is_valid(z3cfg, ind_query(ts, rs, rs, 1))
    assert ok == {(): False, ("d=e",): False, ("d>=0",): True, ("d=e", "d>=0"): True}


def test_minimize_ivc_filter(z3cfg):
    _, ts = load("filter")
    y0, ok0 = fm.Var("y", fm.REAL, 0), fm.Var("ok", fm.BOOL, 0)
    r = [ts.property(), w(fm.eq(ok0, fm.app(">=", y0, fm.const(0, fm.REAL))))]
    assert sorted(minimize_ivc(ts, r, 1, z3cfg)) == ["b", "y"]


def test_minimize_ivc_toy_and_single(z3cfg):
    _, ts = load("toy_ab")
    got = minimize_ivc(ts, [ts.property()], 1, z3cfg)
    assert got in (["a"], ["b"])
    _, ts = load("counter_nonneg")
    assert minimize_ivc(ts, [ts.property(), ge0("c")], 1, z3cfg) == ["c"]


def test_minimize_ivc_rejects_non_inductive(z3cfg):
    _, ts = load("counter_nonneg")
    with pytest.raises(IvcError) as info:
        minimize_ivc(ts, [ts.property()], 1, z3cfg)
    assert info.value.stage == "minimize_ivc"


def test_check_ivc_and_is_minimal(z3cfg):
    _, ts = load("filter")
    assert check_ivc(ts, "ok", ts.candidate_names, z3cfg)
    assert not check_ivc(ts, "ok", [], z3cfg)
    assert is_minimal(ts, "ok", ["b", "y"], z3cfg)
    assert not is_minimal(ts, "ok", ["a", "b", "y"], z3cfg)


def test_check_ivc_indeterminate(z3cfg):
    _, ts = load("counter_nonneg")
    with pytest.raises(Indeterminate):
        check_ivc(ts, "ok", ["c"], z3cfg, deadline=time.monotonic() - 1)


def test_bf_unknown_keeps_elements(z3cfg):
    _, ts = load("uc_chain")
    pf = proof_for(ts, z3cfg)
    res = ivc_bf(ts, None, z3cfg, proof=pf, deadline=time.monotonic() - 1)
    assert res.core == tuple(ts.candidate_names)
    assert res.minimal is False
    assert res.indeterminate == tuple(ts.candidate_names)


@pytest.mark.parametrize("name", ["filter", "toy_ab", "uc_chain", "voter", "bounded_queue"])
def test_parallel_bf_is_deterministic(name, z3cfg):
    _, ts = load(name)
    pf = proof_for(ts, z3cfg)
    one = ivc_bf(ts, None, z3cfg, proof=pf)
    many = ivc_bf(ts, None, z3cfg, jobs=3, proof=pf)
    again = ivc_bf(ts, None, z3cfg, proof=pf)
    assert one == many == again


def test_annotation_excluded_conjuncts_reported(z3cfg):
    _, ts = load("annotated_mode")
    assert ts.candidates == {"mode"}
    assert "level" in ts.excluded
    res = compute_ivc(ts, None, "bf", z3cfg)
    assert res.core == ("level", "mode")
    assert "level" not in res.non_candidates


def test_compute_ivc_errors(z3cfg):
    _, ts = load("counter_falsified")
    with pytest.raises(IvcError) as info:
        compute_ivc(ts, None, "uc", z3cfg)
    assert info.value.stage == "prove"
    with pytest.raises(ValueError):
        compute_ivc(ts, None, "magic", z3cfg)


def test_uc_core_restores_full_query(z3cfg):
    _, ts = load("sensor_fusion")
    pf = proof_for(ts, z3cfg)
    res = ivc_uc(ts, pf, z3cfg)
    sub = restrict(ts, set(res.core) | set(ts.fixed_names))
    rs = fm.and_(ts.property(), *(f for n, f in pf.invariants if n in res.invariants))
    assert is_valid(z3cfg, full_query(sub, rs, res.k)) is True
