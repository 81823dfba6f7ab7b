import csv
import json
import shutil

import pytest

from ivckind.cli import main

from conftest import CORPUS, requires_z3, validate


def run_json(capsys, *argv):
    rc = main([*argv, "--json"])
    out = capsys.readouterr().out
    return rc, json.loads(out)


def model(name):
    return str(CORPUS / f"{name}.lus")


@requires_z3
def test_check_proved(capsys):
    rc, data = run_json(capsys, "check", model("filter"))
    assert rc == 0
    validate(data, "check")
    assert data["status"] == "proved" and data["k"] == 1


@requires_z3
def test_check_cex(capsys):
    rc, data = run_json(capsys, "check", model("counter_falsified"))
    assert rc == 1
    validate(data, "check")
    cex = data["cex"]
    assert cex["length"] == 3 and len(cex["trace"]) == 4
    assert cex["trace"][-1]["values"]["ok"] is False


@requires_z3
def test_check_human_table(capsys):
    assert main(["check", model("counter_falsified")]) == 1
    out = capsys.readouterr().out
    assert "falsified after 3 steps" in out
    assert out.splitlines()[1].split()[0] == "step"


EVEN = """node even() returns (ok: bool);
var x: int;
let
  x = 0 -> pre x + 2;
  ok = x <> 101;
  --%PROPERTY ok;
tel
"""


@requires_z3
def test_check_unknown(tmp_path, capsys):
    # true, but an odd run of k+1 steps ending at 101 defeats induction at small k
    path = tmp_path / "even.lus"
    path.write_text(EVEN)
    rc, data = run_json(capsys, "check", str(path), "--max-k", "4")
    validate(data, "check")
    assert rc == 2 and data["status"] == "unknown" and data["reason"]


@requires_z3
@pytest.mark.parametrize("algo", ["uc", "bf", "ucbf"])
def test_ivc_json(capsys, algo):
    rc, data = run_json(capsys, "ivc", model("filter"), "--algorithm", algo)
    assert rc == 0
    validate(data, "ivc")
    assert data["core"] == ["b", "y"]


@requires_z3
def test_ivc_on_falsified_model(capsys):
    assert main(["ivc", model("counter_falsified")]) == 1


def test_slice(capsys):
    rc, data = run_json(capsys, "slice", model("filter"))
    assert rc == 0
    validate(data, "slice")
    assert data["root"] == "ok" and {"a", "b", "y"} <= set(data["slice"])
    full = set(data["slice"])
    # a reads pre y, so its slice closes over the whole loop but not ok
    rc, data = run_json(capsys, "slice", model("filter"), "--root", "a")
    assert set(data["slice"]) == full - {"ok"}


@requires_z3
def test_dump_ts(tmp_path, capsys):
    out = tmp_path / "ts.txt"
    assert main(["check", model("counter_nonneg"), "--dump-ts", str(out), "-q"]) == 0
    text = out.read_text()
    assert "~init" in text


@requires_z3
def test_json_to_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["check", model("filter"), "--json", str(out)]) == 0
    assert "proved" in capsys.readouterr().out
    validate(json.loads(out.read_text()), "check")


@pytest.mark.parametrize("argv", [
    ["check", "/nonexistent/model.lus"],
    ["check", str(CORPUS / "filter.lus"), "--solver", "/nonexistent/solver"],
    ["check", str(CORPUS / "filter.lus"), "--property", "nope"],
    ["frobnicate"],
    ["check", str(CORPUS / "filter.lus"), "--max-k", "0"],
    ["ivc", str(CORPUS / "filter.lus"), "--jobs", "0"],
    ["diversity", "/nonexistent/dir"],
    ["bench"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == 3


def test_lustre_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.lus"
    bad.write_text("node m(x: int) returns (y: int);\nlet\n  y = z;\ntel\n")
    assert main(["check", str(bad)]) == 3
    err = capsys.readouterr().err
    assert "unresolved identifier" in err and ":3:" in err


@requires_z3
def test_bench_and_diversity(tmp_path, capsys):
    corpus = tmp_path / "models"
    corpus.mkdir()
    for n in ("filter", "toy_ab"):
        shutil.copy(CORPUS / f"{n}.lus", corpus)
    out = tmp_path / "out"
    rc, summary = run_json(capsys, "bench", "--corpus", str(corpus), "--out", str(out),
                           "--solvers", "z3", "--algorithms", "uc", "bf")
    assert rc == 0
    validate(summary, "summary")
    assert summary["records"] == 4
    assert (out / "summary.json").exists() and (out / "summary.csv").exists()

    rc, div = run_json(capsys, "diversity", str(out))
    assert rc == 0
    validate(div, "diversity")
    toy = next(m for m in div["models"] if m["model"] == "toy_ab")
    assert toy["pairs"][0]["distance"] in ("0", "1")
    with open(out / "diversity.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "model" and len(rows) == 3
    assert (out / "pairs.csv").exists()
