import json
import shutil
from pathlib import Path

import pytest

from ivckind.smt import SolverConfig
from ivckind.transition import from_source

CORPUS = Path(__file__).resolve().parent.parent / "src" / "ivckind" / "corpus"

HAVE_Z3 = shutil.which("z3") is not None
HAVE_YICES = shutil.which("yices-smt2") is not None

requires_z3 = pytest.mark.skipif(not HAVE_Z3, reason="z3 binary not on PATH")
requires_yices = pytest.mark.skipif(not HAVE_YICES, reason="yices-smt2 not on PATH")


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.lus").read_text(encoding="utf-8")


def load(name: str):
    """(normalized program, transition system) for a bundled model."""
    return from_source(corpus_source(name))


def corpus_names() -> list[str]:
    return sorted(p.stem for p in CORPUS.glob("*.lus"))


FALSIFIED = {"counter_falsified", "alarm_falsified", "gadget_base_invalid"}


@pytest.fixture(scope="session")
def z3cfg():
    if not HAVE_Z3:
        pytest.skip("z3 binary not on PATH")
    return SolverConfig.resolve("z3", timeout=30)


@pytest.fixture(scope="session")
def yicescfg():
    if not HAVE_YICES:
        pytest.skip("yices-smt2 not on PATH")
    return SolverConfig.resolve("yices", timeout=30)


@pytest.fixture(params=["z3", "yices"])
def anycfg(request):
    which = "z3" if request.param == "z3" else "yices-smt2"
    if shutil.which(which) is None:
        pytest.skip(f"{which} not on PATH")
    return SolverConfig.resolve(request.param, timeout=30)


SCHEMAS = CORPUS.parent / "schemas"


def validate(data, schema_name: str):
    import jsonschema
    schema = json.loads((SCHEMAS / f"{schema_name}.schema.json").read_text(encoding="utf-8"))
    jsonschema.validate(data, schema, cls=jsonschema.Draft202012Validator)


# -- acceptance report -------------------------------------------------------------

ACCEPTANCE = {}   # criterion number -> verdict line, filled by test_acceptance
ACCEPTANCE_TOTAL = 10


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE.get("ran"):
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, ACCEPTANCE_TOTAL + 1):
        line = ACCEPTANCE.get(n, f"criterion {n:2d} FAIL: no verdict (errored or skipped)")
        terminalreporter.write_line(line)
