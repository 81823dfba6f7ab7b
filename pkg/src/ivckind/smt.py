"""SMT-LIB2 solver driver over a subprocess pipe.

One :class:`Session` owns one solver process.  Formulas guarded by
activation literals are asserted as ``(=> a phi)`` and switched on with
``check-sat-assuming``; unsat cores are read with ``get-unsat-assumptions``.

Timeouts are enforced on our side: a query that overruns kills the process,
reports :class:`Unknown` and the session transparently respawns and replays
its assertion stack on the next command.
"""

from __future__ import annotations

import itertools
import logging
import os
import select
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import formula as fm

log = logging.getLogger(__name__)

PRESETS = {
    "z3": ("z3", "-in", "-smt2"),
    "yices": ("yices-smt2", "--incremental"),
}
ENV_VAR = "IVCKIND_SOLVER"
DEFAULT_TIMEOUT = 60.0


class SolverError(Exception):
    """Solver crashed, answered with ``(error ...)`` or broke the protocol."""


class SolverSpawnError(SolverError):
    pass


class SolverCapabilityError(SolverError):
    pass


class SolverTimeout(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    name: str
    command: tuple[str, ...]
    timeout: float = DEFAULT_TIMEOUT
    logic: str = "QF_LIRA"
    dump_dir: Optional[str] = None

    @classmethod
    def resolve(cls, spec: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT,
                dump_dir: Optional[str] = None) -> "SolverConfig":
        """Build a config from a preset name (``z3``/``yices``) or a command line.

        With no spec, ``$IVCKIND_SOLVER`` is consulted, then ``z3``.
        """
        spec = spec or os.environ.get(ENV_VAR) or "z3"
        if spec in PRESETS:
            return cls(spec, PRESETS[spec], timeout, dump_dir=dump_dir)
        argv = tuple(shlex.split(spec))
        if not argv:
            raise SolverSpawnError("empty solver command")
        name = os.path.basename(argv[0])
        for preset, cmd in PRESETS.items():
            if name == cmd[0] and len(argv) == 1:
                argv = cmd
                name = preset
        return cls(name, argv, timeout, dump_dir=dump_dir)


# -- results --------------------------------------------------------------

@dataclass(frozen=True)
class Sat:
    model: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str = "unknown"


SatResult = Sat | Unsat | Unknown


@dataclass(frozen=True)
class ActivationLiteral:
    name: str
    payload: object = field(default=None, compare=False, hash=False)
    index: int = field(default=0, compare=False)

    @property
    def var(self) -> fm.Var:
        return fm.Var(self.name, fm.BOOL, None)


# -- s-expressions ----------------------------------------------------------

def _sexp_end(buf: str) -> int:
    """Index just past the first complete s-expression in ``buf``, or -1."""
    i, n, depth, started = 0, len(buf), 0, False
    while i < n:
        c = buf[i]
        if c in " \t\r\n":
            if started and depth == 0:
                return i
            i += 1
            continue
        if c == ";":
            j = buf.find("\n", i)
            if j < 0:
                return -1
            i = j + 1
            continue
        if c == "|" or c == '"':
            j = buf.find(c, i + 1)
            if c == '"':
                while j >= 0 and buf[j + 1:j + 2] == '"':
                    j = buf.find('"', j + 2)
            if j < 0:
                return -1
            started = True
            i = j + 1
            if depth == 0:
                return i
            continue
        started = True
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return -1


def parse_sexp(text: str):
    """Parse one s-expression into nested lists of atom strings.

    Quoted symbols lose their bars; strings keep their quotes.
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c in "()":
            tokens.append(c)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            tokens.append(("sym", text[i + 1:j]))
            i = j + 1
        elif c == '"':
            j = i + 1
            while True:
                j = text.index('"', j)
                if text[j + 1:j + 2] == '"':
                    j += 2
                    continue
                break
            tokens.append(text[i:j + 1])
            i = j + 1
        elif c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n()|";':
                j += 1
            tokens.append(text[i:j])
            i = j
    pos = 0

    def walk():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(walk())
            pos += 1
            return out
        if tok == ")":
            raise SolverError("unbalanced ')' in solver output")
        return tok[1] if isinstance(tok, tuple) else tok

    if not tokens:
        raise SolverError("empty solver response")
    return walk()


def parse_value(v):
    """Convert a get-value s-expression to bool/int/Fraction."""
    if isinstance(v, str):
        if v == "true":
            return True
        if v == "false":
            return False
        if "." in v:
            return Fraction(v)
        return int(v)
    if len(v) == 2 and v[0] == "-":
        return -parse_value(v[1])
    if len(v) == 3 and v[0] == "/":
        return Fraction(parse_value(v[1])) / Fraction(parse_value(v[2]))
    if len(v) == 2 and v[0] == "to_real":
        return Fraction(parse_value(v[1]))
    raise SolverError(f"cannot interpret value {v!r}")


def _coerce(value, sort: str):
    if sort == fm.INT:
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise SolverError(f"non-integral value {value} for Int")
            return int(value)
        return int(value)
    if sort == fm.REAL:
        return Fraction(value)
    return bool(value)


# -- session ----------------------------------------------------------------

_session_ids = itertools.count()


class Session:
    """A live solver process with an assertion stack.

    Not thread-safe: one command in flight at a time.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.id = next(_session_ids)
        self._proc: Optional[subprocess.Popen] = None
        self._stderr = None
        self._buf = ""
        # Commands issued per scope; used to respawn after a timeout.
        self._scopes: list[list[str]] = [[]]
        self._declared: list[dict[str, fm.Var]] = [{}]
        self._literals = itertools.count()
        self._last: Optional[SatResult] = None
        self._last_core: list[ActivationLiteral] = []
        self._by_name: dict[str, ActivationLiteral] = {}
        self._dump = None
        self.stats = {"checks": 0, "restarts": 0}
        if config.dump_dir:
            os.makedirs(config.dump_dir, exist_ok=True)
            path = os.path.join(config.dump_dir, f"session-{os.getpid()}-{self.id}.smt2")
            self._dump = open(path, "w", encoding="utf-8")
        self._spawn()
        self._probe()

    # -- process plumbing

    def _spawn(self):
        exe = self.config.command[0]
        if shutil.which(exe) is None and not os.path.isfile(exe):
            raise SolverSpawnError(f"solver executable not found: {exe}")
        self._stderr = tempfile.TemporaryFile()
        try:
            self._proc = subprocess.Popen(
                self.config.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=self._stderr, bufsize=0)
        except OSError as exc:
            raise SolverSpawnError(f"cannot start {exe}: {exc}") from exc
        self._buf = ""
        try:
            self._command("(set-option :print-success true)")
            for opt in (":produce-models", ":produce-unsat-assumptions"):
                try:
                    self._command(f"(set-option {opt} true)")
                except SolverError as exc:
                    raise SolverCapabilityError(f"{self.config.name}: {opt} unsupported: {exc}") from exc
            self._command(f"(set-logic {self.config.logic})")
        except SolverCapabilityError:
            self._kill()
            raise
        except SolverError as exc:
            self._kill()
            raise SolverSpawnError(f"handshake with {self.config.name} failed: {exc}") from exc

    def _probe(self):
        """Check that unsat assumptions actually work with a tiny query."""
        try:
            self._command("(push 1)")
            self._command("(declare-fun |~probe0| () Bool)")
            self._command("(declare-fun |~probe1| () Bool)")
            self._command("(assert (not (and |~probe0| |~probe1|)))")
            answer = self._query("(check-sat-assuming (|~probe0| |~probe1|))", self.config.timeout)
            if answer != "unsat":
                raise SolverCapabilityError(f"probe query answered {answer!r}")
            core = parse_sexp(self._query("(get-unsat-assumptions)", self.config.timeout))
            if not isinstance(core, list) or not set(core) <= {"~probe0", "~probe1"}:
                raise SolverCapabilityError(f"bad unsat-assumption reply {core!r}")
            self._command("(pop 1)")
        except SolverCapabilityError:
            self._kill()
            raise
        except SolverError as exc:
            self._kill()
            raise SolverCapabilityError(f"{self.config.name} failed the assumption probe: {exc}") from exc

    def _kill(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
            for stream in (self._proc.stdin, self._proc.stdout):
                try:
                    stream.close()
                except Exception:
                    pass
        self._proc = None
        if self._stderr is not None:
            self._stderr.close()
            self._stderr = None

    def _restart(self):
        log.info("restarting %s session %d", self.config.name, self.id)
        self.stats["restarts"] += 1
        self._kill()
        self._spawn()
        for depth, cmds in enumerate(self._scopes):
            if depth:
                self._command("(push 1)")
            for cmd in cmds:
                self._command(cmd)

    def _stderr_text(self) -> str:
        if self._stderr is None:
            return ""
        self._stderr.seek(0)
        return self._stderr.read().decode(errors="replace").strip()

    def _write(self, cmd: str):
        if self._dump:
            self._dump.write(cmd + "\n")
        try:
            self._proc.stdin.write((cmd + "\n").encode())
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver pipe closed: {exc} {self._stderr_text()}") from exc

    def _read(self, timeout: float) -> Optional[str]:
        """Next response s-expression, or None when ``timeout`` expires."""
        deadline = time.monotonic() + timeout
        fd = self._proc.stdout.fileno()
        while True:
            end = _sexp_end(self._buf)
            if end >= 0:
                text, self._buf = self._buf[:end].strip(), self._buf[end:]
                if self._dump:
                    self._dump.write("; " + text.replace("\n", "\n; ") + "\n")
                return text
            left = deadline - time.monotonic()
            if left <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], left)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise SolverError(f"solver exited unexpectedly: {self._stderr_text()}")
            self._buf += chunk.decode()

    def _query(self, cmd: str, timeout: float) -> Optional[str]:
        self._write(cmd)
        reply = self._read(timeout)
        if reply is not None and reply.startswith("(error"):
            raise SolverError(f"{cmd}: {reply}")
        return reply

    def _command(self, cmd: str):
        reply = self._query(cmd, max(self.config.timeout, 30.0))
        if reply is None:
            raise SolverError(f"no reply to {cmd}")
        if reply != "success":
            raise SolverError(f"unexpected reply to {cmd}: {reply}")

    def _ensure_alive(self):
        if self._proc is None:
            self._restart()

    def _record(self, cmd: str):
        self._ensure_alive()
        self._command(cmd)
        self._scopes[-1].append(cmd)

    # -- public API

    @property
    def depth(self) -> int:
        return len(self._scopes) - 1

    def is_declared(self, v: fm.Var) -> bool:
        sym = fm.symbol(v)
        return any(sym in d for d in self._declared)

    def declare(self, v: fm.Var):
        sym = fm.symbol(v)
        if any(sym in d for d in self._declared):
            return
        self._record(f"(declare-fun {sym} () {v.sort})")
        self._declared[-1][sym] = v

    def declare_all(self, t: fm.Term):
        for v in sorted(fm.free_vars(t), key=lambda v: (v.step is None, v.step or 0, v.name)):
            self.declare(v)

    def assert_(self, t: fm.Term):
        self.declare_all(t)
        self._record(f"(assert {fm.to_smt(t)})")

    def push(self):
        self._ensure_alive()
        self._command("(push 1)")
        self._scopes.append([])
        self._declared.append({})

    def pop(self):
        if len(self._scopes) == 1:
            raise SolverError("pop on an empty assertion stack")
        self._ensure_alive()
        self._command("(pop 1)")
        self._scopes.pop()
        self._declared.pop()

    def activation(self, phi: fm.Term, payload=None) -> ActivationLiteral:
        """Fresh literal ``a`` with ``a => phi`` asserted in the current scope."""
        idx = next(self._literals)
        lit = ActivationLiteral(f"~a{idx}", payload if payload is not None else phi, idx)
        self._by_name[lit.name] = lit
        self.declare(lit.var)
        self.assert_(fm.implies(lit.var, phi))
        return lit

    def check_sat(self, assumptions: Iterable[ActivationLiteral] = (),
                  formula: Optional[fm.Term] = None, *, model: bool = True,
                  timeout: Optional[float] = None) -> SatResult:
        """Check the asserted stack plus ``formula`` with ``assumptions`` held true.

        ``formula`` lives in a temporary scope.  On Sat the model covers every
        declared stepped variable when ``model`` is set.
        """
        assumptions = list(assumptions)
        limit = self.config.timeout if timeout is None else min(timeout, self.config.timeout)
        self._last_core = []
        if formula is not None:
            self.push()
        try:
            if formula is not None:
                self.assert_(formula)
            result = self._check(assumptions, limit, model)
        finally:
            if formula is not None and self._proc is not None:
                self.pop()
            elif formula is not None:
                self._scopes.pop()
                self._declared.pop()
        self._last = result
        return result

    def _check(self, assumptions, limit, want_model) -> SatResult:
        self._ensure_alive()
        self.stats["checks"] += 1
        names = " ".join(fm.symbol(a.var) for a in assumptions)
        if limit <= 0:
            return Unknown("timeout")
        answer = self._query(f"(check-sat-assuming ({names}))", limit)
        if answer is None:
            log.info("query timed out after %.1fs", limit)
            self._kill()
            return Unknown("timeout")
        if answer == "unsat":
            reply = parse_sexp(self._query("(get-unsat-assumptions)", 30.0) or "()")
            lits = {a.name: a for a in assumptions}
            self._last_core = sorted((lits[n] for n in reply if n in lits), key=lambda a: a.index)
            return Unsat()
        if answer == "sat":
            return Sat(self._model() if want_model else {})
        if answer == "unknown":
            return Unknown("solver answered unknown")
        raise SolverError(f"unexpected check-sat reply {answer!r}")

    def _model(self) -> dict:
        vs = [v for d in self._declared for v in d.values() if v.step is not None]
        if not vs:
            return {}
        reply = self._query("(get-value (" + " ".join(fm.symbol(v) for v in vs) + "))", 30.0)
        if reply is None:
            raise SolverError("get-value timed out")
        pairs = parse_sexp(reply)
        if len(pairs) != len(vs):
            raise SolverError("get-value returned the wrong number of values")
        return {v: _coerce(parse_value(p[1]), v.sort) for v, p in zip(vs, pairs)}

    def unsat_core(self) -> list[ActivationLiteral]:
        """Assumptions used by the last Unsat answer (not necessarily minimal)."""
        if not isinstance(self._last, Unsat):
            raise SolverError("unsat_core() requires a preceding Unsat answer")
        return list(self._last_core)

    def minimize_core(self, core: Sequence[ActivationLiteral],
                      formula: Optional[fm.Term] = None) -> list[ActivationLiteral]:
        """Deletion-based minimization; tries each literal once in core order."""
        current = sorted(core, key=lambda a: a.index)
        for lit in list(current):
            trial = [a for a in current if a is not lit]
            res = self.check_sat(trial, formula, model=False)
            if isinstance(res, Unknown):
                raise SolverTimeout(f"core minimization: {res.reason}")
            if isinstance(res, Unsat):
                current = trial
        self._last = Unsat()
        self._last_core = list(current)
        return current

    def close(self):
        if self._proc is not None:
            try:
                self._write("(exit)")
                self._proc.stdin.close()
                self._proc.wait(timeout=2)
            except Exception:
                pass
        self._kill()
        if self._dump:
            self._dump.close()
            self._dump = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_session(config: SolverConfig) -> Session:
    return Session(config)
