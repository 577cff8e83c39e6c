"""Long-lived checker worker.

Reads one JSON request per stdin line, writes one JSON response per
line.  Checker functions are compiled into a restricted namespace (no
imports, no file/network/process access; string, regex, and math
capabilities are provided) and evaluated under a wall-clock watchdog.
A malformed request line never kills the worker.

Requests:
  {"op": "compile", "checker_id": ID, "source": SRC}
  {"op": "eval", "checker_id": ID, "candidate": STR, "time_limit_ms": N}

Responses mirror the request's checker_id and carry either a verdict or
an error {kind, message, line?} with kind in syntax_error / timeout /
runtime_error / sandbox_violation / protocol_error.
"""

from __future__ import annotations

import ast
import json
import math
import re
import signal
import string
import sys

DEFAULT_TIME_LIMIT_MS = 1000

FORBIDDEN_NAMES = {
    "open", "exec", "eval", "compile", "__import__", "input", "breakpoint",
    "globals", "locals", "vars", "getattr", "setattr", "delattr", "super",
    "memoryview", "exit", "quit", "help",
}

SAFE_BUILTIN_NAMES = (
    "abs", "all", "any", "ascii", "bin", "bool", "bytearray", "bytes", "chr",
    "dict", "divmod", "enumerate", "filter", "float", "format", "frozenset",
    "hash", "hex", "int", "isinstance", "issubclass", "iter", "len", "list",
    "map", "max", "min", "next", "oct", "ord", "pow", "print", "range",
    "repr", "reversed", "round", "set", "slice", "sorted", "str", "sum",
    "tuple", "zip",
    # exception types checkers may legitimately raise or catch
    "ArithmeticError", "AssertionError", "AttributeError", "Exception",
    "IndexError", "KeyError", "LookupError", "OverflowError", "RecursionError",
    "RuntimeError", "StopIteration", "TypeError", "ValueError",
    "ZeroDivisionError", "True", "False", "None",
)


def _safe_builtins() -> dict:
    import builtins

    return {name: getattr(builtins, name) for name in SAFE_BUILTIN_NAMES
            if hasattr(builtins, name)}


class SandboxViolation(Exception):
    pass


class EvalTimeout(Exception):
    pass


def scan_source(tree: ast.AST) -> None:
    """Reject imports, forbidden builtins, and dunder attribute access."""
    for node in ast.walk(tree):
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            raise SandboxViolation("import statements are not allowed")
        if isinstance(node, ast.Name) and node.id in FORBIDDEN_NAMES:
            raise SandboxViolation(f"use of {node.id!r} is not allowed")
        if isinstance(node, ast.Attribute) and node.attr.startswith("__"):
            raise SandboxViolation(f"dunder attribute access ({node.attr!r}) is not allowed")


class Registry:
    def __init__(self):
        self.functions: dict[str, object] = {}

    def compile(self, checker_id: str, source: str) -> dict:
        try:
            tree = ast.parse(source)
        except SyntaxError as exc:
            return _error("syntax_error", exc.msg or "invalid syntax", line=exc.lineno)
        try:
            scan_source(tree)
        except SandboxViolation as exc:
            return _error("sandbox_violation", str(exc))
        defs = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
        if len(defs) != 1:
            return _error(
                "syntax_error",
                f"expected exactly one top-level function, found {len(defs)}",
            )
        namespace: dict = {}
        env = {"__builtins__": _safe_builtins(), "re": re, "math": math, "string": string}
        try:
            exec(compile(tree, "<checker>", "exec"), env, namespace)  # noqa: S102
        except Exception as exc:  # noqa: BLE001
            return _error("runtime_error", f"definition failed: {exc}")
        self.functions[checker_id] = namespace[defs[0].name]
        return {"ok": True}

    def evaluate(self, checker_id: str, candidate: str, time_limit_ms: int) -> dict:
        fn = self.functions.get(checker_id)
        if fn is None:
            return _error("runtime_error", f"checker {checker_id!r} is not compiled")

        def alarm(signum, frame):
            raise EvalTimeout

        previous = signal.signal(signal.SIGALRM, alarm)
        signal.setitimer(signal.ITIMER_REAL, max(time_limit_ms, 1) / 1000)
        try:
            verdict = fn(candidate)
        except EvalTimeout:
            return _error("timeout", f"exceeded {time_limit_ms} ms")
        except SandboxViolation as exc:
            return _error("sandbox_violation", str(exc))
        except Exception as exc:  # noqa: BLE001
            return _error("runtime_error", f"{type(exc).__name__}: {exc}")
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, previous)
        if not isinstance(verdict, bool):
            return _error(
                "runtime_error",
                f"checker returned {type(verdict).__name__}, expected bool",
            )
        return {"ok": True, "verdict": verdict}


def _error(kind: str, message: str, line: int | None = None) -> dict:
    error: dict = {"kind": kind, "message": message}
    if line is not None:
        error["line"] = line
    return {"ok": False, "error": error}


def handle_line(registry: Registry, line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error("protocol_error", f"unreadable request: {exc}")
    if not isinstance(request, dict):
        return _error("protocol_error", "request must be a JSON object")
    checker_id = request.get("checker_id")
    op = request.get("op")
    if op == "compile":
        source = request.get("source")
        if not isinstance(checker_id, str) or not isinstance(source, str) or not source:
            response = _error("protocol_error", "compile needs checker_id and source")
        else:
            response = registry.compile(checker_id, source)
    elif op == "eval":
        candidate = request.get("candidate")
        limit = request.get("time_limit_ms", DEFAULT_TIME_LIMIT_MS)
        if not isinstance(checker_id, str) or not isinstance(candidate, str):
            response = _error("protocol_error", "eval needs checker_id and candidate")
        elif not isinstance(limit, int) or limit <= 0:
            response = _error("protocol_error", "time_limit_ms must be a positive integer")
        else:
            response = registry.evaluate(checker_id, candidate, limit)
    else:
        response = _error("protocol_error", f"unknown op {op!r}")
    if checker_id is not None:
        response["checker_id"] = checker_id
    return response


def serve(stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    registry = Registry()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        response = handle_line(registry, line)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


EXAMPLE_CHECKER = 'def this_constraint(s: str) -> bool:\n    return s.count("@") == 1'


def selftest() -> int:
    registry = Registry()
    checks = []
    compiled = registry.compile("c1", EXAMPLE_CHECKER)
    checks.append(("compile example checker", compiled.get("ok") is True))
    ok_true = registry.evaluate("c1", "ab@cd.com", 1000)
    checks.append(("accepts ab@cd.com", ok_true.get("verdict") is True))
    ok_false = registry.evaluate("c1", "ab@@cd.com", 1000)
    checks.append(("rejects ab@@cd.com", ok_false.get("verdict") is False))
    blocked = registry.compile("c2", 'def f(s):\n    return open("/etc/passwd")')
    checks.append(
        ("file access blocked", blocked.get("error", {}).get("kind") == "sandbox_violation")
    )
    failures = 0
    for name, ok in checks:
        print(f"[{'ok' if ok else 'FAIL'}] {name}", file=sys.stderr)
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if "--selftest" in args:
        return selftest()
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
