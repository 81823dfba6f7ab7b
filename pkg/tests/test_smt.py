import itertools
import os
import sys
import textwrap
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivckind import formula as fm
from ivckind import smt

from conftest import requires_z3

X = fm.Var("x", fm.INT, 0)
Y = fm.Var("y", fm.INT, 0)
ZERO = fm.const(0, fm.INT)


def gt(a, b):
    return fm.app(">", a, b)


def lt(a, b):
    return fm.app("<", a, b)


def test_parse_sexp_and_values():
    assert smt.parse_sexp("((|x@0| (- 3)) (b true))") == [["x@0", ["-", "3"]], ["b", "true"]]
    assert smt.parse_value(["-", "3"]) == -3
    assert smt.parse_value(["/", "1.0", "4.0"]) == Fraction(1, 4)
    assert smt.parse_value(["-", ["/", "1", "2"]]) == Fraction(-1, 2)
    assert smt.parse_value("true") is True


def test_resolve_presets(monkeypatch):
    monkeypatch.delenv(smt.ENV_VAR, raising=False)
    assert smt.SolverConfig.resolve().command == smt.PRESETS["z3"]
    assert smt.SolverConfig.resolve("yices").command == smt.PRESETS["yices"]
    monkeypatch.setenv(smt.ENV_VAR, "yices")
    assert smt.SolverConfig.resolve().name == "yices"
    cfg = smt.SolverConfig.resolve("/opt/z3/bin/z3 -in -smt2 -T:5")
    assert cfg.command[0] == "/opt/z3/bin/z3" and cfg.name == "z3"


def test_spawn_error():
    cfg = smt.SolverConfig("missing", ("/nonexistent/solver",))
    with pytest.raises(smt.SolverSpawnError):
        smt.Session(cfg)


def test_handshake_failure():
    with pytest.raises(smt.SolverSpawnError):
        smt.Session(smt.SolverConfig("true", ("true",), timeout=2))


def fake_solver(tmp_path, body):
    path = tmp_path / "fake_solver.py"
    path.write_text(textwrap.dedent(body))
    return smt.SolverConfig("fake", (sys.executable, str(path)), timeout=3)


def test_capability_probe_rejects_solver_without_assumptions(tmp_path):
    # Answers success to everything and sat to every check: the probe must notice.
    cfg = fake_solver(tmp_path, """
        import sys
        for line in sys.stdin:
            line = line.strip()
            if line.startswith("(check-sat"):
                print("sat")
            elif line.startswith("(exit"):
                break
            else:
                print("success")
            sys.stdout.flush()
    """)
    with pytest.raises(smt.SolverCapabilityError):
        smt.Session(cfg)


def test_unsupported_option_is_capability_error(tmp_path):
    cfg = fake_solver(tmp_path, """
        import sys
        for line in sys.stdin:
            if "produce-unsat-assumptions" in line:
                print('(error "unsupported")')
            else:
                print("success")
            sys.stdout.flush()
    """)
    with pytest.raises(smt.SolverCapabilityError):
        smt.Session(cfg)


@requires_z3
def test_basic_checks(anycfg):
    with smt.Session(anycfg) as s:
        assert isinstance(s.check_sat((), fm.and_(gt(X, ZERO), lt(X, ZERO))), smt.Unsat)
        res = s.check_sat((), fm.TRUE)
        assert isinstance(res, smt.Sat)
        res = s.check_sat((), fm.eq(X, fm.const(4, fm.INT)))
        assert res.model[X] == 4


@requires_z3
def test_activation_core(anycfg):
    with smt.Session(anycfg) as s:
        a1 = s.activation(gt(X, ZERO))
        a2 = s.activation(lt(X, ZERO))
        a3 = s.activation(fm.TRUE)
        assert isinstance(s.check_sat([a1, a2, a3]), smt.Unsat)
        assert set(s.minimize_core(s.unsat_core())) == {a1, a2}
        assert isinstance(s.check_sat([a1, a3]), smt.Sat)
        with pytest.raises(smt.SolverError):
            s.unsat_core()


@requires_z3
def test_minimize_core_singleton(anycfg):
    with smt.Session(anycfg) as s:
        a1 = s.activation(fm.and_(gt(X, ZERO), lt(X, ZERO)))
        a2 = s.activation(gt(Y, ZERO))
        assert isinstance(s.check_sat([a1, a2]), smt.Unsat)
        assert s.minimize_core([a1, a2]) == [a1]
        assert s.minimize_core([a1]) == [a1]


@requires_z3
def test_push_pop_scopes(z3cfg):
    with smt.Session(z3cfg) as s:
        s.assert_(gt(X, ZERO))
        s.push()
        assert s.depth == 1
        s.assert_(lt(X, ZERO))
        assert isinstance(s.check_sat(), smt.Unsat)
        s.pop()
        assert isinstance(s.check_sat(), smt.Sat)
        with pytest.raises(smt.SolverError):
            s.pop()


@requires_z3
def test_timeout_then_recover(z3cfg, tmp_path):
    # Pigeonhole with nine pigeons is slow enough to hit a short timeout.
    cfg = smt.SolverConfig("z3", z3cfg.command, timeout=0.3)
    with smt.Session(cfg) as s:
        s.assert_(gt(X, ZERO))
        n = 9
        hole = [[fm.Var(f"p{i}_{j}", fm.BOOL, 0) for j in range(n - 1)] for i in range(n)]
        php = fm.and_(*(fm.or_(*row) for row in hole),
                      *(fm.not_(fm.and_(hole[i][j], hole[k][j]))
                        for j in range(n - 1) for i in range(n) for k in range(i + 1, n)))
        res = s.check_sat((), php)
        if isinstance(res, smt.Unsat):
            pytest.skip("solver too fast to time out on this machine")
        assert isinstance(res, smt.Unknown)
        # The session respawns and replays the stack: x > 0 is still asserted.
        assert isinstance(s.check_sat((), lt(X, ZERO)), smt.Unsat)
        assert s.stats["restarts"] >= 1


@requires_z3
def test_transcript_dump(z3cfg, tmp_path):
    cfg = smt.SolverConfig("z3", z3cfg.command, dump_dir=str(tmp_path))
    with smt.Session(cfg) as s:
        s.check_sat((), gt(X, ZERO))
    files = os.listdir(tmp_path)
    assert len(files) == 1
    text = (tmp_path / files[0]).read_text()
    assert "(check-sat-assuming ())" in text and "(declare-fun |x@0| () Int)" in text


def _brute_minimal(lits, phis, subset_unsat):
    """All subset-minimal unsat subsets by enumeration."""
    out = []
    for r in range(len(lits) + 1):
        for sub in itertools.combinations(range(len(lits)), r):
            if subset_unsat(set(sub)) and not any(set(m) < set(sub) for m in out):
                out.append(sub)
    return [set(m) for m in out]


@requires_z3
@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["x", "y", "z"]), st.sampled_from([">", "<", "="]),
                          st.integers(-2, 2)), min_size=1, max_size=7))
def test_minimize_core_against_power_set(atoms):
    cfg = smt.SolverConfig.resolve("z3", timeout=30)
    phis = [fm.app(op, fm.Var(n, fm.INT, 0), fm.const(c, fm.INT)) for n, op, c in atoms]
    with smt.Session(cfg) as s:
        lits = [s.activation(p) for p in phis]
        if not isinstance(s.check_sat(lits), smt.Unsat):
            return
        core = s.minimize_core(lits)

        def unsat(idx):
            return isinstance(s.check_sat([lits[i] for i in idx], model=False), smt.Unsat)

        chosen = {lits.index(a) for a in core}
        assert unsat(chosen)
        assert all(not unsat(chosen - {i}) for i in chosen)
        assert chosen in _brute_minimal(lits, phis, unsat)
