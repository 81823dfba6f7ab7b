"""Run (model x solver x algorithm) matrices and aggregate the records.

The output directory is the database: one JSON record per run, named
``<model>__<solver>__<algo>.json``.  Existing records are reused unless
``force`` is set.

Config files are INI::

    [bench]
    corpus = models/
    output = results/
    algorithms = uc, ucbf, bf
    max_k = 20
    timeout = 60        ; seconds per model run
    query_timeout = 30  ; seconds per solver query (defaults to timeout)
    jobs = 4

    [solvers]
    z3 = z3
    yices = yices-smt2 --incremental
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from . import smt
from .analysis import RunRecord, describe, diversity_reports, overhead
from .engine import Counterexample, Unknown, prove
from .ivc import ALGORITHMS, IvcError, compute_ivc
from .lustre import LustreError, normalize, parse
from .transition import lower, slice_names

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchConfig:
    corpus: str
    solvers: tuple = (("z3", "z3"),)      # (name, preset or command)
    algorithms: tuple = ("uc",)
    max_k: int = 20
    timeout: float = 60.0
    query_timeout: Optional[float] = None
    jobs: int = 1
    output: str = "bench-out"
    force: bool = False

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.max_k < 1 or self.jobs < 1:
            raise ValueError("max_k and jobs must be at least 1")

    @classmethod
    def from_file(cls, path, **overrides) -> "BenchConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        base = os.path.dirname(os.path.abspath(path))
        sec = cp["bench"] if cp.has_section("bench") else {}
        kw = {}
        if "corpus" in sec:
            kw["corpus"] = os.path.join(base, sec["corpus"])
        if "output" in sec:
            kw["output"] = os.path.join(base, sec["output"])
        if "algorithms" in sec:
            kw["algorithms"] = tuple(a.strip().lower() for a in sec["algorithms"].split(",") if a.strip())
        for key, conv in (("max_k", int), ("timeout", float), ("query_timeout", float), ("jobs", int)):
            if key in sec:
                kw[key] = conv(sec[key])
        if cp.has_section("solvers"):
            kw["solvers"] = tuple((k, v) for k, v in cp["solvers"].items())
        kw.update({k: v for k, v in overrides.items() if v is not None})
        if "corpus" not in kw:
            raise ValueError(f"{path}: no corpus given")
        return cls(**kw)


def record_name(model: str, solver: str, algorithm: str) -> str:
    return f"{model}__{solver}__{algorithm}.json"


def write_record(directory, record: RunRecord) -> Path:
    """Atomic write: temp file in the same directory, then rename."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / record_name(record.model, record.solver, record.algorithm)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def load_records(directory) -> list[RunRecord]:
    out = []
    for p in sorted(Path(directory).glob("*__*__*.json")):
        with open(p, encoding="utf-8") as fh:
            out.append(RunRecord.from_json(json.load(fh)))
    return out


def run_one(path, solver: str, command: str, algorithm: str, max_k: int,
            timeout: float, query_timeout: Optional[float] = None,
            dump_dir: Optional[str] = None) -> RunRecord:
    """One run, never raising: failures become ``error`` records."""
    model = Path(path).stem
    rec = RunRecord(model, solver, algorithm, "error")
    try:
        with open(path, encoding="utf-8") as fh:
            program = normalize(parse(fh.read()))
        ts = lower(program)
        if len(ts.properties) != 1:
            rec.message = f"expected exactly one property, found {len(ts.properties)}"
            return rec
        prop = ts.properties[0][0]
        rec.property = prop
        rec.candidates = len(ts.candidates)
        rec.slice = sorted(slice_names(ts, [prop]) - {prop})
        qt = min(query_timeout or timeout, timeout)
        config = replace(smt.SolverConfig.resolve(command, qt, dump_dir), name=solver)
        deadline = time.monotonic() + timeout
        res = prove(ts, prop, max_k, config, deadline=deadline)
        rec.proof_ms = res.time_ms
        if isinstance(res, Counterexample):
            rec.status, rec.cex_length = "cex", res.length
            return rec
        if isinstance(res, Unknown):
            rec.status, rec.message = "unknown", res.reason
            return rec
        rec.k = res.k
        try:
            ivc = compute_ivc(ts, prop, algorithm, config, max_k, proof=res, deadline=deadline)
        except (IvcError, smt.SolverTimeout) as exc:
            rec.status, rec.message = "unknown", str(exc)
            return rec
        if time.monotonic() > deadline:
            rec.status, rec.message = "unknown", "deadline"
            return rec
        rec.status = "proved"
        rec.core = list(ivc.core)
        rec.minimal = ivc.minimal
        rec.k = ivc.k
        rec.invariants = list(ivc.invariants)
        rec.ivc_ms = ivc.ivc_ms
        rec.overhead_pct = overhead(ivc.ivc_ms, rec.proof_ms)
        return rec
    except LustreError as exc:
        rec.message = str(exc)
    except smt.SolverError as exc:
        rec.message = f"solver: {exc}"
    except Exception as exc:  # crash isolation: one bad model must not stop the matrix
        log.exception("run %s/%s/%s crashed", model, solver, algorithm)
        rec.message = f"{type(exc).__name__}: {exc}"
    return rec


def run_matrix(cfg: BenchConfig, dump_dir: Optional[str] = None) -> list[RunRecord]:
    models = sorted(Path(cfg.corpus).glob("*.lus"))
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(m, s, c, a) for m in models for s, c in cfg.solvers for a in cfg.algorithms]

    def work(task):
        m, s, c, a = task
        target = out_dir / record_name(m.stem, s, a)
        if target.exists() and not cfg.force:
            with open(target, encoding="utf-8") as fh:
                return RunRecord.from_json(json.load(fh))
        rec = run_one(m, s, c, a, cfg.max_k, cfg.timeout, cfg.query_timeout, dump_dir)
        write_record(out_dir, rec)
        log.info("%s %s %s: %s", m.stem, s, a, rec.status)
        return rec

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(work, tasks))


# -- summary -----------------------------------------------------------------------

def _pct_increase(big: int, small: int) -> Optional[float]:
    if small == 0:
        return None
    return 100.0 * (big - small) / small


def summarize(records: Iterable[RunRecord]) -> dict:
    """Aggregate tables; a pure function of the records."""
    records = sorted(records, key=lambda r: (r.model, r.solver, r.algorithm))
    if not records:
        raise ValueError("no records to summarize")
    configs = sorted({r.config for r in records})
    status = {c: {s: 0 for s in ("proved", "cex", "unknown", "error")} for c in configs}
    for r in records:
        status[r.config][r.status] += 1

    runtime, over, slice_ratio = {}, {}, {}
    for c in configs:
        done = [r for r in records if r.config == c and r.status == "proved"]
        runtime[c] = {"proof_ms": describe([r.proof_ms for r in done]).as_dict(),
                      "ivc_ms": describe([r.ivc_ms for r in done]).as_dict()}
        over[c] = describe([r.overhead_pct for r in done if r.overhead_pct is not None]).as_dict()
        ratios = [_pct_increase(len(r.slice), len(r.core)) for r in done
                  if r.slice is not None and r.core]
        slice_ratio[c] = describe([x for x in ratios if x is not None]).as_dict()

    uc_vs_ucbf = {}
    by_key = {(r.model, r.solver, r.algorithm): r for r in records}
    for solver in sorted({r.solver for r in records}):
        incs, per_model = [], {}
        for model in sorted({r.model for r in records}):
            uc, ucbf = by_key.get((model, solver, "uc")), by_key.get((model, solver, "ucbf"))
            if not (uc and ucbf and uc.status == ucbf.status == "proved"):
                continue
            inc = _pct_increase(len(uc.core), len(ucbf.core))
            if inc is not None:
                incs.append(inc)
                per_model[model] = inc
        if incs:
            uc_vs_ucbf[solver] = {"stats": describe(incs).as_dict(), "per_model": per_model}

    diversity = [d.as_dict() for d in diversity_reports(records)]
    return {
        "records": len(records),
        "status": status,
        "runtime": runtime,
        "overhead_pct": over,
        "uc_vs_ucbf_increase_pct": uc_vs_ucbf,
        "slice_vs_core_increase_pct": slice_ratio,
        "diversity": diversity,
        "notes": ["stdev values are population standard deviations",
                  "overhead = 100 * ivc_ms / proof_ms (plain proof time, IVC excluded)"],
    }


def summary_rows(summary: dict) -> list[list]:
    rows = [["table", "key", "metric", "count", "min", "max", "mean", "stdev"]]

    def add(table, key, metric, st):
        rows.append([table, key, metric, st["count"], st["min"], st["max"], st["mean"], st["stdev"]])

    for c, d in summary["runtime"].items():
        add("runtime", c, "proof_ms", d["proof_ms"])
        add("runtime", c, "ivc_ms", d["ivc_ms"])
    for c, st in summary["overhead_pct"].items():
        add("overhead", c, "percent", st)
    for s, d in summary["uc_vs_ucbf_increase_pct"].items():
        add("uc_vs_ucbf", s, "size_increase_percent", d["stats"])
    for c, st in summary["slice_vs_core_increase_pct"].items():
        add("slice_vs_core", c, "size_increase_percent", st)
    for d in summary["diversity"]:
        add("diversity", d["model"], "pairwise_jaccard", d["stats"])
    return rows


def write_summary(summary: dict, directory) -> None:
    directory = Path(directory)
    with open(directory / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(summary_rows(summary))
    (directory / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")
