"""External SMT solver subprocess driver.

Certifies UNSAT claims and proves checker equivalence, the two things
the in-process evaluator cannot do.  One fresh process per query, always
killed at the wall-clock timeout.  The verdict is the first stdout line
reading sat/unsat/unknown; everything else (including solver errors on
get-model after unsat) is tolerated.
"""

from __future__ import annotations

import logging
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from typing import Union

from strsat.smt.nodes import App, CheckerExpr, rename_var
from strsat.smt.parser import Atom, SList, read_all_sexps
from strsat.smt.printer import to_smtlib_script

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 5.0


@dataclass
class SolverConfig:
    executable: str
    args: tuple[str, ...] = ()
    timeout: float = DEFAULT_TIMEOUT
    logic: str = "QF_SLIA"
    keep_failed_scripts: bool = False
    scripts_dir: str | None = None

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")


@dataclass(frozen=True)
class SatVerdict:
    model: str | None = None
    kind = "sat"


@dataclass(frozen=True)
class UnsatVerdict:
    kind = "unsat"


@dataclass(frozen=True)
class UnknownVerdict:
    reason: str  # "timeout" | "solver_unknown" | "process_error: ..."
    kind = "unknown"


SolverVerdict = Union[SatVerdict, UnsatVerdict, UnknownVerdict]


@dataclass(frozen=True)
class Equivalent:
    pass


@dataclass(frozen=True)
class NotEquivalent:
    witness: str


@dataclass(frozen=True)
class EquivalenceUnknown:
    reason: str


def _run_script(config: SolverConfig, script: str, label: str) -> tuple[str | None, str]:
    """Run the solver on a script file; returns (stdout or None, reason)."""
    directory = config.scripts_dir or tempfile.gettempdir()
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix=f"strsat_{label}_", dir=directory)
    failed = False
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(script)
        try:
            proc = subprocess.run(
                [config.executable, *config.args, path],
                capture_output=True,
                text=True,
                timeout=config.timeout,
            )
        except subprocess.TimeoutExpired:
            failed = True
            return None, "timeout"
        except OSError as exc:
            failed = True
            return None, f"process_error: {exc}"
        return proc.stdout, ""
    finally:
        if failed and config.keep_failed_scripts:
            log.warning("solver failure; script retained at %s", path)
        else:
            try:
                os.unlink(path)
            except OSError:
                pass


def _parse_verdict(stdout: str, var: str) -> SolverVerdict:
    status = None
    for line in stdout.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            status = line
            break
    if status == "unsat":
        return UnsatVerdict()
    if status == "unknown":
        return UnknownVerdict("solver_unknown")
    if status == "sat":
        return SatVerdict(model=_extract_model(stdout, var))
    return UnknownVerdict(f"process_error: unparseable solver output: {stdout[:200]!r}")


def _extract_model(stdout: str, var: str) -> str | None:
    """Pull the string value of `var` out of a get-model response."""
    rest = stdout.split("\n", 1)
    if len(rest) < 2:
        return None
    try:
        forms = read_all_sexps(rest[1])
    except Exception:
        return None

    def walk(form) -> str | None:
        if isinstance(form, SList):
            items = form.items
            if (
                len(items) >= 2
                and isinstance(items[0], Atom)
                and items[0].text == "define-fun"
                and isinstance(items[1], Atom)
                and items[1].text == var
            ):
                last = items[-1]
                if isinstance(last, Atom) and last.is_string:
                    return last.string_value
                return None
            for item in items:
                found = walk(item)
                if found is not None:
                    return found
        return None

    for form in forms:
        found = walk(form)
        if found is not None:
            return found
    return None


def check(
    config: SolverConfig,
    exprs: list[CheckerExpr] | tuple[CheckerExpr, ...],
    fix: str | None = None,
) -> SolverVerdict:
    """Satisfiability of the conjunction, optionally pinned to `fix`."""
    script = to_smtlib_script(list(exprs), fix=fix, logic=config.logic)
    var = exprs[0].var if exprs else "s"
    stdout, reason = _run_script(config, script, "check")
    if stdout is None:
        return UnknownVerdict(reason)
    return _parse_verdict(stdout, var)


def prove_equivalent(
    config: SolverConfig, a: CheckerExpr, b: CheckerExpr
) -> Equivalent | NotEquivalent | EquivalenceUnknown:
    """Solver-backed equivalence: unsat for (distinct a b) proves it;
    sat yields a distinguishing witness; anything else stays unknown.
    """
    b_root = rename_var(b.root, a.var) if b.var != a.var else b.root
    question = CheckerExpr(App("distinct", (a.root, b_root)), a.var)
    verdict = check(config, [question])
    if isinstance(verdict, UnsatVerdict):
        return Equivalent()
    if isinstance(verdict, SatVerdict):
        if verdict.model is None:
            return EquivalenceUnknown("sat without extractable model")
        return NotEquivalent(witness=verdict.model)
    return EquivalenceUnknown(verdict.reason)


def solver_available(config: SolverConfig) -> bool:
    """Probe the executable with a trivial script; False on any failure."""
    try:
        verdict = check(config, [])
    except Exception:
        return False
    return isinstance(verdict, SatVerdict)


def default_solver_config(
    timeout: float = DEFAULT_TIMEOUT, logic: str = "QF_SLIA"
) -> SolverConfig | None:
    """Resolve a usable solver: $STRSAT_SOLVER, then cvc5, z3, and the
    bundled fallback.  Returns None when disabled or nothing answers.
    """
    env = os.environ.get("STRSAT_SOLVER")
    if env is not None:
        if env.strip().lower() in ("", "none", "off"):
            return None
        command = shlex.split(env)
        cfg = SolverConfig(
            executable=command[0], args=tuple(command[1:]), timeout=timeout, logic=logic
        )
        return cfg if solver_available(cfg) else None
    for name in ("cvc5", "z3"):
        path = shutil.which(name)
        if path:
            cfg = SolverConfig(executable=path, timeout=timeout, logic=logic)
            if solver_available(cfg):
                return cfg
    path = shutil.which("strsat-minisolve")
    if path:
        cfg = SolverConfig(executable=path, timeout=timeout, logic=logic)
        if solver_available(cfg):
            return cfg
    # editable installs may lack the console script; fall back to -m
    cfg = SolverConfig(
        executable=sys.executable,
        args=("-m", "strsat.minisolve"),
        timeout=timeout,
        logic=logic,
    )
    return cfg if solver_available(cfg) else None
