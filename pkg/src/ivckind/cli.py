"""``ivc-kind`` command line.

Exit codes: 0 success, 1 property falsified, 2 unknown/timeout,
3 usage or input error, 4 internal or solver-protocol error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__, smt
from .analysis import diversity_reports
from .bench import BenchConfig, load_records, run_matrix, summarize, write_summary
from .engine import DEFAULT_MAX_K, Counterexample, InductiveProof, prove
from .ivc import ALGORITHMS, IvcError, compute_ivc
from .lustre import LustreError, normalize, parse, slice_backward
from .transition import INIT, dump, lower

log = logging.getLogger("ivckind")

EXIT_OK, EXIT_CEX, EXIT_UNKNOWN, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _value(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


def cex_json(cex: Counterexample) -> dict:
    names = [n for n in cex.trace[0] if n != INIT] if cex.trace else []
    rows = [{"step": i, "values": {n: _value(st.get(n)) for n in names}}
            for i, st in enumerate(cex.trace)]
    return {"length": cex.length, "lustre_steps": cex.length, "variables": names, "trace": rows}


def _table(cex: Counterexample) -> str:
    data = cex_json(cex)
    names = data["variables"]
    header = ["step"] + names
    body = [[("s0" if r["step"] == 0 else str(r["step"]))]
            + ["-" if r["values"][n] is None else str(r["values"][n]).lower()
               if isinstance(r["values"][n], bool) else str(r["values"][n]) for n in names]
            for r in data["trace"]]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in [header] + body]
    return "\n".join(lines)


def _emit(args, data: dict, human: str):
    if args.json == "-":
        json.dump(data, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(data, fh, indent=2, sort_keys=True)
                fh.write("\n")
        if human:
            print(human)


def _load(args):
    try:
        with open(args.model, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.model}: {exc.strerror or exc}") from exc
    program = normalize(parse(source))
    ts = lower(program)
    if getattr(args, "dump_ts", None):
        Path(args.dump_ts).write_text(dump(ts), encoding="utf-8")
    prop = getattr(args, "property", None)
    if prop is None:
        if not ts.properties:
            raise UsageError(f"{args.model}: no --%PROPERTY declared")
        prop = ts.properties[0][0]
    elif prop not in dict(ts.properties):
        raise UsageError(f"{args.model}: {prop!r} is not a declared property")
    return program, ts, prop


def _config(args) -> smt.SolverConfig:
    return smt.SolverConfig.resolve(args.solver, args.timeout, args.dump_smt)


def cmd_check(args) -> int:
    _, ts, prop = _load(args)
    res = prove(ts, prop, args.max_k, _config(args))
    model = Path(args.model).stem
    if isinstance(res, InductiveProof):
        data = {"model": model, "property": prop, "status": "proved", "k": res.k,
                "invariants": res.invariant_names, "time_ms": round(res.time_ms, 3)}
        _emit(args, data, f"{prop}: proved (k={res.k}, {len(res.invariants)} invariants, "
                          f"{res.time_ms:.0f} ms)")
        return EXIT_OK
    if isinstance(res, Counterexample):
        data = {"model": model, "property": prop, "status": "cex", "k": None,
                "invariants": [], "time_ms": round(res.time_ms, 3), "cex": cex_json(res)}
        _emit(args, data, f"{prop}: falsified after {res.length} steps\n{_table(res)}")
        return EXIT_CEX
    data = {"model": model, "property": prop, "status": "unknown", "k": None,
            "invariants": [], "time_ms": round(res.time_ms, 3), "reason": res.reason}
    _emit(args, data, f"{prop}: unknown ({res.reason})")
    return EXIT_UNKNOWN


def cmd_ivc(args) -> int:
    _, ts, prop = _load(args)
    config = _config(args)
    proof = prove(ts, prop, args.max_k, config)
    if isinstance(proof, Counterexample):
        print(f"{prop}: falsified after {proof.length} steps\n{_table(proof)}")
        return EXIT_CEX
    if not isinstance(proof, InductiveProof):
        print(f"{prop}: unknown ({proof.reason})")
        return EXIT_UNKNOWN
    try:
        res = compute_ivc(ts, prop, args.algorithm, config, args.max_k, args.jobs, proof)
    except (IvcError, smt.SolverTimeout) as exc:
        print(f"{prop}: IVC inconclusive ({exc})")
        return EXIT_UNKNOWN
    data = {"model": Path(args.model).stem, "property": prop,
            "algorithm": args.algorithm, "core": list(res.core), "minimal": res.minimal,
            "k": res.k, "invariants": list(res.invariants),
            "proof_ms": round(res.proof_ms, 3), "ivc_ms": round(res.ivc_ms, 3),
            "solver": config.name, "non_candidates": list(res.non_candidates),
            "indeterminate": list(res.indeterminate)}
    flag = "minimal" if res.minimal else "not certified minimal"
    _emit(args, data, f"{prop}: {args.algorithm.upper()} core ({flag}, k={res.k}): "
                      + ", ".join(res.core))
    return EXIT_OK


def cmd_slice(args) -> int:
    program, ts, prop = _load(args)
    root = args.root or prop
    names = sorted(slice_backward(program, root))
    _emit(args, {"model": Path(args.model).stem, "root": root, "slice": names},
          ", ".join(names))
    return EXIT_OK


def cmd_diversity(args) -> int:
    directory = Path(args.records)
    if not directory.is_dir():
        raise UsageError(f"{directory} is not a directory")
    reports = [r.as_dict() for r in diversity_reports(load_records(directory))]
    out = Path(args.out) if args.out else directory
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "diversity.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "configs", "pairs", "min", "max", "mean", "stdev",
                    "core_set_size", "dissimilarity", "dissimilarity_no_bf"])
        for r in reports:
            st = r["stats"]
            w.writerow([r["model"], len(r["cores"]), st["count"], st["min"], st["max"],
                        st["mean"], st["stdev"], len(r["core_set"]), r["dissimilarity"],
                        r["dissimilarity_no_bf"]])
    with open(out / "pairs.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "rank", "config_a", "config_b", "distance"])
        for r in reports:
            for i, p in enumerate(r["pairs"], 1):
                w.writerow([r["model"], i, p["a"], p["b"], p["value"]])
    human = "\n".join(f"{r['model']}: D_J={r['dissimilarity']:.3f} core_set={r['core_set']}"
                      for r in reports)
    _emit(args, {"models": reports}, human or "no proved records")
    return EXIT_OK


def cmd_bench(args) -> int:
    overrides = dict(output=args.out, max_k=args.max_k_bench, timeout=args.model_timeout,
                     query_timeout=args.timeout_bench, jobs=args.jobs_bench,
                     force=args.force or None)
    if args.solvers:
        overrides["solvers"] = tuple(
            tuple(s.split("=", 1)) if "=" in s else (s, s) for s in args.solvers)
    if args.algorithms:
        overrides["algorithms"] = tuple(a.lower() for a in args.algorithms)
    try:
        if args.config:
            cfg = BenchConfig.from_file(args.config, corpus=args.corpus, **overrides)
        else:
            if not args.corpus:
                raise UsageError("bench needs --corpus or --config")
            cfg = BenchConfig(corpus=args.corpus,
                              **{k: v for k, v in overrides.items() if v is not None})
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    if not Path(cfg.corpus).is_dir():
        raise UsageError(f"corpus {cfg.corpus} is not a directory")
    start = time.perf_counter()
    records = run_matrix(cfg, args.dump_smt)
    if not records:
        raise UsageError(f"no .lus models in {cfg.corpus}")
    summary = summarize(records)
    write_summary(summary, cfg.output)
    counts = {s: sum(1 for r in records if r.status == s) for s in ("proved", "cex", "unknown", "error")}
    _emit(args, summary, f"{len(records)} runs in {time.perf_counter() - start:.1f}s: "
                         + ", ".join(f"{k}={v}" for k, v in counts.items())
                         + f"; results in {cfg.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", help="z3, yices, or a solver command line "
                        f"(default: ${smt.ENV_VAR} or z3)")
    common.add_argument("--timeout", type=float, default=smt.DEFAULT_TIMEOUT,
                        help="seconds per solver query (default 60)")
    common.add_argument("--max-k", type=int, default=DEFAULT_MAX_K)
    common.add_argument("--json", nargs="?", const="-", metavar="FILE",
                        help="write JSON to FILE, or to stdout without an argument")
    common.add_argument("--dump-smt", metavar="DIR", help="write solver transcripts to DIR")
    common.add_argument("-q", "--quiet", action="store_true")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="ivc-kind", description="k-induction and inductive validity cores "
                "for a Lustre subset")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="prove or falsify a property")
    c.add_argument("model")
    c.add_argument("--property")
    c.add_argument("--dump-ts", metavar="FILE", help="write the lowered (I, T, P)")
    c.set_defaults(func=cmd_check)

    i = sub.add_parser("ivc", parents=[common], help="compute an inductive validity core")
    i.add_argument("model")
    i.add_argument("--property")
    i.add_argument("--algorithm", choices=ALGORITHMS, default="uc")
    i.add_argument("--jobs", type=int, default=1, help="parallel re-proofs for bf/ucbf")
    i.add_argument("--dump-ts", metavar="FILE")
    i.set_defaults(func=cmd_ivc)

    s = sub.add_parser("slice", parents=[common], help="backward static slice")
    s.add_argument("model")
    s.add_argument("--root", help="variable to slice from (default: the property)")
    s.add_argument("--property")
    s.set_defaults(func=cmd_slice)

    d = sub.add_parser("diversity", parents=[common], help="Jaccard diversity of stored cores")
    d.add_argument("records", help="directory of run records")
    d.add_argument("--out", help="directory for CSV tables (default: records dir)")
    d.set_defaults(func=cmd_diversity)

    b = sub.add_parser("bench", parents=[common], help="run a solver x algorithm matrix")
    b.add_argument("--config", help="INI config file")
    b.add_argument("--corpus")
    b.add_argument("--out")
    b.add_argument("--solvers", nargs="+", metavar="NAME[=CMD]")
    b.add_argument("--algorithms", nargs="+", choices=ALGORITHMS)
    b.add_argument("--model-timeout", type=float, help="seconds per model run")
    b.add_argument("--jobs", dest="jobs_bench", type=int)
    b.add_argument("--force", action="store_true", help="re-run existing records")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.quiet:
        level = logging.ERROR
    elif args.verbose:
        level = logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bench":
        # Bench flags default to the config file's values, not the globals.
        args.max_k_bench = args.max_k if args.max_k != DEFAULT_MAX_K else None
        args.timeout_bench = args.timeout if args.timeout != smt.DEFAULT_TIMEOUT else None
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    if args.max_k < 1 or args.timeout <= 0:
        parser.error("--max-k must be >= 1 and --timeout > 0")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ivc-kind: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LustreError as exc:
        print(f"{getattr(args, 'model', '')}:{exc}", file=sys.stderr)
        return EXIT_USAGE
    except smt.SolverSpawnError as exc:
        print(f"ivc-kind: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (smt.SolverError, IvcError) as exc:
        print(f"ivc-kind: solver error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"ivc-kind: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
